#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cvtt/error.hpp"
#include "cvtt/models.hpp"
#include "cvtt/parallel.hpp"

namespace cvtt {

void ItemKNNParams::validate() const {
  if (top_k < 1 || top_k > 200) throw UsageError(fmt::format("itemknn top_k {} outside [1, 200]", top_k));
  if (!(shrink >= 0.0 && shrink <= 600.0))
    throw UsageError(fmt::format("itemknn shrink {} outside [0, 600]", shrink));
  if (!(asymmetric_alpha > 0.0 && asymmetric_alpha < 1.0))
    throw UsageError("asymmetric_alpha must lie in (0, 1)");
  if (!(tversky_alpha >= 0.0 && tversky_beta >= 0.0))
    throw UsageError("tversky weights must be nonnegative");
}

namespace {

struct Candidate {
  std::uint32_t item;
  double value;
};

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

SparseMatrix knn_similarity(const SparseMatrix& matrix, const ItemKNNParams& params,
                            unsigned threads) {
  params.validate();
  const std::size_t n_items = matrix.n_cols();
  const SparseMatrix by_item = matrix.transpose();  // items x users

  std::vector<double> norm2(n_items, 0.0);
  std::vector<double> support(n_items, 0.0);
  for (std::size_t i = 0; i < n_items; ++i) {
    for (double v : by_item.row_values(i)) norm2[i] += v * v;
    support[i] = static_cast<double>(by_item.row_nnz(i));
  }

  const double shrink = params.shrink;
  auto similarity = [&](std::size_t i, std::size_t j, double dot, double common) {
    switch (params.similarity) {
      case Similarity::cosine:
        return ratio(dot, std::sqrt(norm2[i]) * std::sqrt(norm2[j]) + shrink);
      case Similarity::asymmetric:
        return ratio(dot, std::pow(norm2[i], params.asymmetric_alpha) *
                                  std::pow(norm2[j], 1.0 - params.asymmetric_alpha) +
                              shrink);
      case Similarity::jaccard:
        return ratio(common, support[i] + support[j] - common + shrink);
      case Similarity::dice:
        return ratio(2.0 * common, support[i] + support[j] + shrink);
      case Similarity::tversky:
        return ratio(common, common + params.tversky_alpha * (support[i] - common) +
                                 params.tversky_beta * (support[j] - common) + shrink);
    }
    return 0.0;
  };

  const auto top_k = static_cast<std::size_t>(params.top_k);
  std::vector<std::vector<Candidate>> rows(n_items);
  // Blocks of rows share one set of accumulators.
  const std::size_t block = 64;
  const std::size_t n_blocks = (n_items + block - 1) / block;
  parallel_for(n_blocks, threads, [&](std::size_t b) {
    std::vector<double> dot(n_items, 0.0), common(n_items, 0.0);
    std::vector<std::uint32_t> touched;
    for (std::size_t i = b * block; i < std::min(n_items, (b + 1) * block); ++i) {
      touched.clear();
      const auto users = by_item.row_cols(i);
      const auto values = by_item.row_values(i);
      for (std::size_t k = 0; k < users.size(); ++k) {
        const auto items = matrix.row_cols(users[k]);
        const auto item_values = matrix.row_values(users[k]);
        for (std::size_t t = 0; t < items.size(); ++t) {
          const auto j = items[t];
          if (common[j] == 0.0) touched.push_back(j);
          dot[j] += values[k] * item_values[t];
          common[j] += 1.0;
        }
      }
      auto& row = rows[i];
      for (auto j : touched) {
        if (j != i) {
          const double s = similarity(i, j, dot[j], common[j]);
          if (s > 0.0) row.push_back({j, s});
        }
        dot[j] = 0.0;
        common[j] = 0.0;
      }
      const auto better = [](const Candidate& a, const Candidate& b) {
        return a.value != b.value ? a.value > b.value : a.item < b.item;
      };
      if (row.size() > top_k) {
        std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(top_k),
                         row.end(), better);
        row.resize(top_k);
      }
    }
  });

  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < n_items; ++i)
    for (const auto& c : rows[i]) triplets.push_back({static_cast<std::uint32_t>(i), c.item, c.value});
  return SparseMatrix::from_triplets(n_items, n_items, std::move(triplets));
}

}  // namespace cvtt
