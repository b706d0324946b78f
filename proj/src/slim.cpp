#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "cvtt/error.hpp"
#include "cvtt/models.hpp"
#include "cvtt/parallel.hpp"

namespace cvtt {

void SLIMParams::validate() const {
  if (!(l1_ratio >= 1e-5 && l1_ratio <= 1.0))
    throw UsageError(fmt::format("slim l1_ratio {} outside [1e-5, 1]", l1_ratio));
  if (!(alpha >= 1e-3 && alpha <= 1.0))
    throw UsageError(fmt::format("slim alpha {} outside [1e-3, 1]", alpha));
  if (top_k < 5 || top_k > 800) throw UsageError(fmt::format("slim top_k {} outside [5, 800]", top_k));
  if (max_cd_iters < 1) throw UsageError("slim max_cd_iters must be at least 1");
  if (!(cd_tolerance > 0.0)) throw UsageError("slim cd_tolerance must be positive");
}

namespace {

// Elastic-net regression of one item column on all other item columns.
class ColumnSolver {
 public:
  ColumnSolver(const SparseMatrix& by_item, const std::vector<double>& norm2,
               const SLIMParams& params, std::size_t n_users)
      : by_item_(by_item),
        norm2_(norm2),
        params_(params),
        l1_(params.alpha * params.l1_ratio),
        l2_(params.alpha * (1.0 - params.l1_ratio)),
        residual_(n_users, 0.0),
        weights_(by_item.n_rows(), 0.0) {}

  // Returns (item, weight) pairs of the solved column, at most top_k of them.
  std::vector<std::pair<std::uint32_t, double>> solve(std::size_t target) {
    std::vector<std::uint32_t> all;
    all.reserve(by_item_.n_rows());
    for (std::size_t k = 0; k < by_item_.n_rows(); ++k)
      if (k != target && norm2_[k] > 0.0) all.push_back(static_cast<std::uint32_t>(k));

    reset(target, all);
    descend(all, target);

    std::vector<std::uint32_t> support;
    for (auto k : all)
      if (weights_[k] != 0.0) support.push_back(k);

    const auto top_k = static_cast<std::size_t>(params_.top_k);
    if (support.size() > top_k) {
      std::nth_element(support.begin(), support.begin() + static_cast<std::ptrdiff_t>(top_k),
                       support.end(), [&](std::uint32_t a, std::uint32_t b) {
                         const double wa = std::abs(weights_[a]), wb = std::abs(weights_[b]);
                         return wa != wb ? wa > wb : a < b;
                       });
      std::vector<std::uint32_t> dropped(support.begin() + static_cast<std::ptrdiff_t>(top_k),
                                         support.end());
      support.resize(top_k);
      std::sort(support.begin(), support.end());
      for (auto k : dropped) set_weight(k, 0.0);
      // Refit on the kept support. If the truncated start ends above the
      // zero-weight objective, restart the restricted problem from zero.
      descend(support, target);
      if (objective() > 0.5 * target_norm2_) {
        reset(target, support);
        descend(support, target);
      }
    }

    std::vector<std::pair<std::uint32_t, double>> out;
    for (auto k : all) {
      if (weights_[k] != 0.0) out.emplace_back(k, weights_[k]);
      weights_[k] = 0.0;
    }
    return out;
  }

 private:
  void reset(std::size_t target, const std::vector<std::uint32_t>& coords) {
    std::fill(residual_.begin(), residual_.end(), 0.0);
    const auto users = by_item_.row_cols(target);
    const auto vals = by_item_.row_values(target);
    target_norm2_ = 0.0;
    for (std::size_t t = 0; t < users.size(); ++t) {
      residual_[users[t]] = vals[t];
      target_norm2_ += vals[t] * vals[t];
    }
    for (auto k : coords) weights_[k] = 0.0;
  }

  void set_weight(std::uint32_t k, double w) {
    const double delta = w - weights_[k];
    if (delta == 0.0) return;
    const auto users = by_item_.row_cols(k);
    const auto vals = by_item_.row_values(k);
    for (std::size_t t = 0; t < users.size(); ++t) residual_[users[t]] -= vals[t] * delta;
    weights_[k] = w;
  }

  void descend(const std::vector<std::uint32_t>& coords, std::size_t target) {
    for (int iter = 0; iter < params_.max_cd_iters; ++iter) {
      double max_change = 0.0;
      for (auto k : coords) {
        const auto users = by_item_.row_cols(k);
        const auto vals = by_item_.row_values(k);
        double rho = norm2_[k] * weights_[k];
        for (std::size_t t = 0; t < users.size(); ++t) rho += vals[t] * residual_[users[t]];
        double w = 0.0;
        if (rho > l1_)
          w = (rho - l1_) / (norm2_[k] + l2_);
        else if (rho < -l1_)
          w = (rho + l1_) / (norm2_[k] + l2_);
        if (params_.positive_only && w < 0.0) w = 0.0;
        if (!std::isfinite(w))
          throw NumericError(fmt::format("slim produced a non-finite weight in column {}", target),
                             target);
        max_change = std::max(max_change, std::abs(w - weights_[k]));
        set_weight(k, w);
      }
      if (max_change < params_.cd_tolerance) break;
    }
  }

  double objective() const {
    double loss = 0.0;
    for (double r : residual_) loss += r * r;
    double l1 = 0.0, l2 = 0.0;
    for (double w : weights_) {
      l1 += std::abs(w);
      l2 += w * w;
    }
    return 0.5 * loss + l1_ * l1 + 0.5 * l2_ * l2;
  }

  const SparseMatrix& by_item_;
  const std::vector<double>& norm2_;
  const SLIMParams& params_;
  double l1_;
  double l2_;
  double target_norm2_ = 0.0;
  std::vector<double> residual_;
  std::vector<double> weights_;
};

}  // namespace

double slim_column_objective(const SparseMatrix& matrix, const SLIMParams& params,
                             std::size_t target_item, std::span<const double> weights) {
  std::vector<double> residual(matrix.n_rows(), 0.0);
  for (std::size_t u = 0; u < matrix.n_rows(); ++u) {
    const auto cols = matrix.row_cols(u);
    const auto vals = matrix.row_values(u);
    double r = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] == target_item) r += vals[k];
      r -= vals[k] * weights[cols[k]];
    }
    residual[u] = r;
  }
  double loss = 0.0, l1 = 0.0, l2 = 0.0;
  for (double r : residual) loss += r * r;
  for (double w : weights) {
    l1 += std::abs(w);
    l2 += w * w;
  }
  return 0.5 * loss + params.alpha * params.l1_ratio * l1 +
         0.5 * params.alpha * (1.0 - params.l1_ratio) * l2;
}

FittedModel fit_slim(const SparseMatrix& matrix, const SLIMParams& params,
                     const FitOptions& options) {
  params.validate();
  FittedModel model(ModelKind::slim, matrix);
  const SparseMatrix by_item = matrix.transpose();
  const std::size_t n_items = matrix.n_cols();
  std::vector<double> norm2(n_items, 0.0);
  for (std::size_t i = 0; i < n_items; ++i)
    for (double v : by_item.row_values(i)) norm2[i] += v * v;

  std::vector<std::vector<std::pair<std::uint32_t, double>>> columns(n_items);
  const std::size_t block = 32;
  const std::size_t n_blocks = (n_items + block - 1) / block;
  parallel_for(n_blocks, options.threads, [&](std::size_t b) {
    ColumnSolver solver(by_item, norm2, params, matrix.n_rows());
    for (std::size_t j = b * block; j < std::min(n_items, (b + 1) * block); ++j)
      columns[j] = solver.solve(j);
  });

  std::vector<Triplet> triplets;
  for (std::size_t j = 0; j < n_items; ++j)
    for (const auto& [k, w] : columns[j])
      triplets.push_back({k, static_cast<std::uint32_t>(j), w});
  model.item_matrix_ = SparseMatrix::from_signed_triplets(n_items, n_items, std::move(triplets));
  return model;
}

}  // namespace cvtt
