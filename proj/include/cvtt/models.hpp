#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cvtt/ingest.hpp"
#include "cvtt/sparse_matrix.hpp"

namespace cvtt {

enum class ModelKind { popularity, itemknn, ials, slim };

/// Throws UsageError for unknown names; "multivae" gets an explicit
/// out-of-scope message.
ModelKind parse_model_kind(std::string_view name);
std::string to_string(ModelKind kind);

enum class Similarity { cosine, jaccard, asymmetric, dice, tversky };

Similarity parse_similarity(std::string_view name);
std::string to_string(Similarity s);

struct ItemKNNParams {
  int top_k = 100;
  double shrink = 0.0;
  Similarity similarity = Similarity::cosine;
  double asymmetric_alpha = 0.5;
  double tversky_alpha = 1.0;
  double tversky_beta = 1.0;

  void validate() const;
};

struct IALSParams {
  bool confidence_scaling = false;  // true: 1 + alpha*ln(1 + r/epsilon), false: 1 + alpha*r
  int n_factors = 32;
  double alpha = 1.0;
  double epsilon = 1.0;
  double regularization = 1e-3;
  int n_sweeps = 15;
  /// A sweep whose relative objective improvement falls below this ends the
  /// fit early. Zero disables early stopping.
  double early_stop_tolerance = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
  double confidence(double r) const;
};

struct SLIMParams {
  double l1_ratio = 0.1;
  double alpha = 1e-2;
  bool positive_only = true;
  int top_k = 100;
  int max_cd_iters = 100;
  double cd_tolerance = 1e-4;

  void validate() const;
};

struct FitOptions {
  unsigned threads = 1;
};

/// Objective value after every half sweep (user update, then item update),
/// preceded by the value at initialization.
struct IALSTrace {
  std::vector<double> objective;
  std::size_t sweeps_run = 0;
};

// Immutable after fit; safe to share across threads.
class FittedModel {
 public:
  ModelKind kind() const noexcept { return kind_; }
  std::size_t n_users() const noexcept { return history_->n_rows(); }
  std::size_t n_items() const noexcept { return history_->n_cols(); }

  /// Training interactions (users x items) the model scores from.
  const SparseMatrix& history() const noexcept { return *history_; }
  /// Item-item matrix: similarities (itemknn) or regression weights (slim),
  /// row = source item, column = target item.
  const SparseMatrix& item_matrix() const noexcept { return item_matrix_; }
  const Eigen::MatrixXd& user_factors() const noexcept { return user_factors_; }
  const Eigen::MatrixXd& item_factors() const noexcept { return item_factors_; }
  const std::vector<double>& item_counts() const noexcept { return item_counts_; }

  /// Dense score vector over all items. Throws UsageError for unknown users.
  std::vector<double> scores(UserId user) const;
  void scores_into(UserId user, std::span<double> out) const;

  friend FittedModel fit_popularity(const SparseMatrix& matrix);
  friend FittedModel fit_itemknn(const SparseMatrix& matrix, const ItemKNNParams& params,
                                 const FitOptions& options);
  friend FittedModel fit_ials(const SparseMatrix& matrix, const IALSParams& params,
                              const FitOptions& options, IALSTrace* trace);
  friend FittedModel fit_slim(const SparseMatrix& matrix, const SLIMParams& params,
                              const FitOptions& options);
  friend FittedModel deserialize_model(std::string_view text);

 private:
  FittedModel(ModelKind kind, const SparseMatrix& history)
      : kind_(kind), history_(std::make_shared<const SparseMatrix>(history)) {}

  ModelKind kind_;
  std::shared_ptr<const SparseMatrix> history_;
  SparseMatrix item_matrix_;
  Eigen::MatrixXd user_factors_;
  Eigen::MatrixXd item_factors_;
  std::vector<double> item_counts_;
};

/// Item-item similarity with zero diagonal, each row cut to its top_k
/// largest positive values (ties by ascending item id).
SparseMatrix knn_similarity(const SparseMatrix& matrix, const ItemKNNParams& params,
                            unsigned threads = 1);

FittedModel fit_popularity(const SparseMatrix& matrix);
FittedModel fit_itemknn(const SparseMatrix& matrix, const ItemKNNParams& params,
                        const FitOptions& options = {});
FittedModel fit_ials(const SparseMatrix& matrix, const IALSParams& params,
                     const FitOptions& options = {}, IALSTrace* trace = nullptr);
FittedModel fit_slim(const SparseMatrix& matrix, const SLIMParams& params,
                     const FitOptions& options = {});

/// sum_{u,i} c_ui (p_ui - <x_u, y_i>)^2 + reg (|X|^2 + |Y|^2)
double ials_objective(const SparseMatrix& matrix, const IALSParams& params,
                      const Eigen::MatrixXd& user_factors, const Eigen::MatrixXd& item_factors);

/// 1/2 |a_j - A w|^2 + alpha*l1_ratio*|w|_1 + 1/2*alpha*(1 - l1_ratio)*|w|^2
/// for the weight column w of target item j.
double slim_column_objective(const SparseMatrix& matrix, const SLIMParams& params,
                             std::size_t target_item, std::span<const double> weights);

/// Up to k items by descending score (ties: ascending id), never including
/// `exclude`.
std::vector<ItemId> recommend_topk(const FittedModel& model, UserId user, std::size_t k,
                                   std::span<const ItemId> exclude = {});
std::vector<ItemId> top_k_from_scores(std::span<const double> scores, std::size_t k,
                                      std::span<const ItemId> exclude = {});

/// Versioned text dump; floating-point values are written as hexfloats so a
/// round trip is exact.
std::string serialize_model(const FittedModel& model);
FittedModel deserialize_model(std::string_view text);

}  // namespace cvtt
