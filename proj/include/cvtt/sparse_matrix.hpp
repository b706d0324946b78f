#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cvtt {

struct Triplet {
  std::uint32_t row;
  std::uint32_t col;
  double value;
};

// Compressed-row matrix with sorted, unique column indices per row and
// strictly positive stored values. Used both for users x items interaction
// matrices and for item x item similarity / weight matrices.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t n_rows, std::size_t n_cols);

  /// Duplicate (row, col) entries are summed; entries whose sum is not
  /// strictly positive are dropped.
  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<Triplet> triplets);

  /// Like from_triplets, but keeps nonzero entries of either sign. Used for
  /// learned weight matrices.
  static SparseMatrix from_signed_triplets(std::size_t n_rows, std::size_t n_cols,
                                           std::vector<Triplet> triplets);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }
  bool empty() const noexcept { return col_idx_.empty(); }

  std::span<const std::uint32_t> row_cols(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::size_t row_nnz(std::size_t r) const { return row_ptr_[r + 1] - row_ptr_[r]; }

  /// Stored value at (r, c), or 0 when absent.
  double at(std::size_t r, std::size_t c) const;

  SparseMatrix transpose() const;
  /// Same sparsity pattern with every stored value set to 1.
  SparseMatrix binarized() const;
  std::vector<Triplet> triplets() const;

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const noexcept { return col_idx_; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  static SparseMatrix assemble(std::size_t n_rows, std::size_t n_cols,
                               std::vector<Triplet> triplets, bool positive_only);

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace cvtt
