#include <cmath>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "cvtt/error.hpp"
#include "cvtt/models.hpp"
#include "cvtt/parallel.hpp"
#include "cvtt/rng.hpp"

namespace cvtt {

void IALSParams::validate() const {
  if (n_factors < 1 || n_factors > 200)
    throw UsageError(fmt::format("ials n_factors {} outside [1, 200]", n_factors));
  if (!(alpha >= 1e-3 && alpha <= 50.0))
    throw UsageError(fmt::format("ials alpha {} outside [1e-3, 50]", alpha));
  if (!(epsilon >= 1e-3 && epsilon <= 10.0))
    throw UsageError(fmt::format("ials epsilon {} outside [1e-3, 10]", epsilon));
  if (!(regularization >= 1e-5 && regularization <= 1e-2))
    throw UsageError(fmt::format("ials regularization {} outside [1e-5, 1e-2]", regularization));
  if (n_sweeps < 1) throw UsageError("ials n_sweeps must be at least 1");
}

double IALSParams::confidence(double r) const {
  return confidence_scaling ? 1.0 + alpha * std::log1p(r / epsilon) : 1.0 + alpha * r;
}

double ials_objective(const SparseMatrix& matrix, const IALSParams& params,
                      const Eigen::MatrixXd& user_factors, const Eigen::MatrixXd& item_factors) {
  // Unobserved cells contribute <x,y>^2 each; sum over all cells first, then
  // correct the observed ones.
  const Eigen::MatrixXd xtx = user_factors.transpose() * user_factors;
  const Eigen::MatrixXd yty = item_factors.transpose() * item_factors;
  double total = xtx.cwiseProduct(yty).sum();
  for (std::size_t u = 0; u < matrix.n_rows(); ++u) {
    const auto cols = matrix.row_cols(u);
    const auto vals = matrix.row_values(u);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double s = user_factors.row(static_cast<Eigen::Index>(u))
                           .dot(item_factors.row(cols[k]));
      const double c = params.confidence(vals[k]);
      total += c * (1.0 - s) * (1.0 - s) - s * s;
    }
  }
  return total + params.regularization * (user_factors.squaredNorm() + item_factors.squaredNorm());
}

namespace {

// Exact ridge solve for every row of `solve_for` against fixed `other`:
//   (OᵀO + Oᵀ(C_u - I)O + reg I) x_u = Oᵀ C_u p_u
void half_sweep(const SparseMatrix& interactions, const IALSParams& params,
                const Eigen::MatrixXd& other, Eigen::MatrixXd& solve_for, unsigned threads) {
  const auto f = other.cols();
  const Eigen::MatrixXd gram = other.transpose() * other;
  parallel_for(interactions.n_rows(), threads, [&](std::size_t u) {
    const auto cols = interactions.row_cols(u);
    const auto vals = interactions.row_values(u);
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += params.regularization;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(f);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto y = other.row(cols[k]).transpose();
      const double c = params.confidence(vals[k]);
      a.noalias() += (c - 1.0) * y * y.transpose();
      b.noalias() += c * y;
    }
    solve_for.row(static_cast<Eigen::Index>(u)) = a.llt().solve(b).transpose();
  });
}

}  // namespace

FittedModel fit_ials(const SparseMatrix& matrix, const IALSParams& params,
                     const FitOptions& options, IALSTrace* trace) {
  params.validate();
  FittedModel model(ModelKind::ials, matrix);
  const auto f = static_cast<Eigen::Index>(params.n_factors);
  const auto n_users = static_cast<Eigen::Index>(matrix.n_rows());
  const auto n_items = static_cast<Eigen::Index>(matrix.n_cols());

  Rng rng(params.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.n_factors));
  Eigen::MatrixXd users(n_users, f), items(n_items, f);
  for (Eigen::Index r = 0; r < n_users; ++r)
    for (Eigen::Index c = 0; c < f; ++c) users(r, c) = rng.uniform01() * scale;
  for (Eigen::Index r = 0; r < n_items; ++r)
    for (Eigen::Index c = 0; c < f; ++c) items(r, c) = rng.uniform01() * scale;

  const SparseMatrix by_item = matrix.transpose();
  double previous = ials_objective(matrix, params, users, items);
  if (trace) {
    trace->objective.assign(1, previous);
    trace->sweeps_run = 0;
  }

  for (int sweep = 0; sweep < params.n_sweeps; ++sweep) {
    half_sweep(matrix, params, items, users, options.threads);
    if (trace) trace->objective.push_back(ials_objective(matrix, params, users, items));
    half_sweep(by_item, params, users, items, options.threads);
    if (!users.allFinite() || !items.allFinite())
      throw NumericError(fmt::format("ials produced non-finite factors at sweep {}", sweep),
                         static_cast<std::size_t>(sweep));
    const double current = ials_objective(matrix, params, users, items);
    if (trace) {
      trace->objective.push_back(current);
      trace->sweeps_run = static_cast<std::size_t>(sweep) + 1;
    }
    if (!std::isfinite(current))
      throw NumericError(fmt::format("ials objective is non-finite at sweep {}", sweep),
                         static_cast<std::size_t>(sweep));
    const double improvement = (previous - current) / std::max(std::abs(previous), 1e-300);
    previous = current;
    if (params.early_stop_tolerance > 0.0 && improvement < params.early_stop_tolerance) break;
  }

  model.user_factors_ = std::move(users);
  model.item_factors_ = std::move(items);
  return model;
}

}  // namespace cvtt
