#include "cvtt/sparse_matrix.hpp"

#include <algorithm>
#include <stdexcept>

namespace cvtt {

SparseMatrix::SparseMatrix(std::size_t n_rows, std::size_t n_cols)
    : n_rows_(n_rows), n_cols_(n_cols), row_ptr_(n_rows + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::vector<Triplet> triplets) {
  return assemble(n_rows, n_cols, std::move(triplets), true);
}

SparseMatrix SparseMatrix::from_signed_triplets(std::size_t n_rows, std::size_t n_cols,
                                                std::vector<Triplet> triplets) {
  return assemble(n_rows, n_cols, std::move(triplets), false);
}

SparseMatrix SparseMatrix::assemble(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<Triplet> triplets, bool positive_only) {
  for (const auto& t : triplets)
    if (t.row >= n_rows || t.col >= n_cols)
      throw std::out_of_range("triplet index outside matrix dimensions");

  // Stable so that duplicate sums accumulate in input order.
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m(n_rows, n_cols);
  m.col_idx_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  std::vector<std::size_t> counts(n_rows, 0);
  for (std::size_t i = 0; i < triplets.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row &&
           triplets[j].col == triplets[i].col) {
      sum += triplets[j].value;
      ++j;
    }
    const bool keep = positive_only ? sum > 0.0 : sum != 0.0;
    if (keep) {
      m.col_idx_.push_back(triplets[i].col);
      m.values_.push_back(sum);
      ++counts[triplets[i].row];
    }
    i = j;
  }
  for (std::size_t r = 0; r < n_rows; ++r) m.row_ptr_[r + 1] = m.row_ptr_[r] + counts[r];
  return m;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto cols = row_cols(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(c));
  if (it == cols.end() || *it != c) return 0.0;
  return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t(n_cols_, n_rows_);
  std::vector<std::size_t> counts(n_cols_ + 1, 0);
  for (auto c : col_idx_) ++counts[c + 1];
  for (std::size_t c = 0; c < n_cols_; ++c) counts[c + 1] += counts[c];
  t.row_ptr_ = counts;
  t.col_idx_.resize(nnz());
  t.values_.resize(nnz());
  auto next = counts;
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const auto dst = next[col_idx_[k]]++;
      t.col_idx_[dst] = static_cast<std::uint32_t>(r);
      t.values_[dst] = values_[k];
    }
  }
  return t;
}

SparseMatrix SparseMatrix::binarized() const {
  SparseMatrix b = *this;
  std::fill(b.values_.begin(), b.values_.end(), 1.0);
  return b;
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < n_rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      out.push_back({static_cast<std::uint32_t>(r), col_idx_[k], values_[k]});
  return out;
}

}  // namespace cvtt
