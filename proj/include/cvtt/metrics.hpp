#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvtt/ingest.hpp"
#include "cvtt/models.hpp"

namespace cvtt {

/// Sorted, deduplicated item ids.
class ItemSet {
 public:
  ItemSet() = default;
  explicit ItemSet(std::vector<ItemId> items);
  ItemSet(std::initializer_list<ItemId> items) : ItemSet(std::vector<ItemId>(items)) {}

  bool contains(ItemId i) const;
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  std::span<const ItemId> items() const noexcept { return items_; }

 private:
  std::vector<ItemId> items_;
};

// Binary relevance. All three throw UsageError when `relevant` is empty or
// k < 1; only the first k entries of `ranked` are considered.
double ndcg_at_k(std::span<const ItemId> ranked, const ItemSet& relevant, std::size_t k);
double recall_at_k(std::span<const ItemId> ranked, const ItemSet& relevant, std::size_t k);
double hitrate_at_k(std::span<const ItemId> ranked, const ItemSet& relevant, std::size_t k);

enum class Metric { ndcg, recall, hitrate };

Metric parse_metric(std::string_view name);
std::string to_string(Metric m);
double metric_at_k(Metric m, std::span<const ItemId> ranked, const ItemSet& relevant,
                   std::size_t k);

struct EvalOutcome {
  Metric metric = Metric::ndcg;
  std::size_t k = 10;
  double mean = 0.0;
  std::size_t n_users_evaluated = 0;
  std::size_t n_users_skipped_cold = 0;
  /// Users whose test items were all already seen.
  std::size_t n_users_skipped_no_new = 0;
};

/// Per-user item sets (deduplicated) of a users x items matrix.
std::vector<ItemSet> seen_items(const SparseMatrix& matrix);
std::vector<ItemSet> seen_items(const InteractionLog& log);

struct EvalOptions {
  std::vector<Metric> metrics{Metric::ndcg, Metric::recall, Metric::hitrate};
  std::vector<std::size_t> ks{10};
  unsigned threads = 1;
};

/// Mean of each (metric, k) over warm users: users with at least one test
/// interaction, some history in `seen`, and at least one unseen test item.
/// Recommendations exclude seen items. Throws DataError when no user is
/// eligible.
std::vector<EvalOutcome> evaluate_ranking(const FittedModel& model,
                                          const std::vector<ItemSet>& seen,
                                          const InteractionLog& test, const EvalOptions& options);

/// Pairwise summation; the result does not depend on how the values were
/// produced, only on their order.
double pairwise_sum(std::span<const double> values);

std::string eval_csv_header();  // metric,k,mean,n_eval,n_cold
std::string eval_csv_row(const EvalOutcome& outcome);

}  // namespace cvtt
