#include "cvtt/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cvtt/error.hpp"
#include "cvtt/parallel.hpp"

namespace cvtt {

ItemSet::ItemSet(std::vector<ItemId> items) : items_(std::move(items)) {
  std::sort(items_.begin(), items_.end());
  items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
}

bool ItemSet::contains(ItemId i) const {
  return std::binary_search(items_.begin(), items_.end(), i);
}

namespace {

void check_args(const ItemSet& relevant, std::size_t k) {
  if (relevant.empty()) throw UsageError("ranking metrics need a nonempty relevant set");
  if (k < 1) throw UsageError("ranking cutoff k must be at least 1");
}

std::size_t hits_in_top(std::span<const ItemId> ranked, const ItemSet& relevant, std::size_t k) {
  const auto n = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t p = 0; p < n; ++p) hits += relevant.contains(ranked[p]);
  return hits;
}

}  // namespace

double ndcg_at_k(std::span<const ItemId> ranked, const ItemSet& relevant, std::size_t k) {
  check_args(relevant, k);
  double dcg = 0.0;
  const auto n = std::min(k, ranked.size());
  for (std::size_t p = 0; p < n; ++p)
    if (relevant.contains(ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  double idcg = 0.0;
  const auto ideal = std::min(k, relevant.size());
  for (std::size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

double recall_at_k(std::span<const ItemId> ranked, const ItemSet& relevant, std::size_t k) {
  check_args(relevant, k);
  return static_cast<double>(hits_in_top(ranked, relevant, k)) /
         static_cast<double>(relevant.size());
}

double hitrate_at_k(std::span<const ItemId> ranked, const ItemSet& relevant, std::size_t k) {
  check_args(relevant, k);
  return hits_in_top(ranked, relevant, k) > 0 ? 1.0 : 0.0;
}

Metric parse_metric(std::string_view name) {
  if (name == "ndcg") return Metric::ndcg;
  if (name == "recall") return Metric::recall;
  if (name == "hitrate") return Metric::hitrate;
  throw UsageError(fmt::format("unknown metric '{}'", name));
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::ndcg: return "ndcg";
    case Metric::recall: return "recall";
    case Metric::hitrate: return "hitrate";
  }
  return "?";
}

double metric_at_k(Metric m, std::span<const ItemId> ranked, const ItemSet& relevant,
                   std::size_t k) {
  switch (m) {
    case Metric::ndcg: return ndcg_at_k(ranked, relevant, k);
    case Metric::recall: return recall_at_k(ranked, relevant, k);
    case Metric::hitrate: return hitrate_at_k(ranked, relevant, k);
  }
  return 0.0;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const auto half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

std::vector<ItemSet> seen_items(const SparseMatrix& matrix) {
  std::vector<ItemSet> out(matrix.n_rows());
  for (std::size_t u = 0; u < matrix.n_rows(); ++u) {
    const auto cols = matrix.row_cols(u);
    out[u] = ItemSet(std::vector<ItemId>(cols.begin(), cols.end()));
  }
  return out;
}

std::vector<ItemSet> seen_items(const InteractionLog& log) {
  std::vector<std::vector<ItemId>> items(log.n_users());
  for (const auto& r : log.records) items[r.user].push_back(r.item);
  std::vector<ItemSet> out;
  out.reserve(items.size());
  for (auto& v : items) out.emplace_back(std::move(v));
  return out;
}

std::vector<EvalOutcome> evaluate_ranking(const FittedModel& model,
                                          const std::vector<ItemSet>& seen,
                                          const InteractionLog& test, const EvalOptions& options) {
  if (options.ks.empty() || options.metrics.empty())
    throw UsageError("evaluation needs at least one metric and one cutoff");
  for (auto k : options.ks)
    if (k < 1) throw UsageError("ranking cutoff k must be at least 1");
  if (test.n_users() > model.n_users() || test.n_items() > model.n_items())
    throw UsageError("test vocabulary is larger than the model's");

  const auto tested = seen_items(test);
  std::vector<UserId> eligible;
  std::vector<ItemSet> relevant;
  std::size_t cold = 0, no_new = 0;
  for (std::size_t u = 0; u < tested.size(); ++u) {
    if (tested[u].empty()) continue;
    const bool has_history = u < seen.size() && !seen[u].empty();
    if (!has_history) {
      ++cold;
      continue;
    }
    std::vector<ItemId> fresh;
    for (auto i : tested[u].items())
      if (!seen[u].contains(i)) fresh.push_back(i);
    if (fresh.empty()) {
      ++no_new;
      continue;
    }
    eligible.push_back(static_cast<UserId>(u));
    relevant.emplace_back(std::move(fresh));
  }
  if (eligible.empty())
    throw DataError(fmt::format("no eligible users to evaluate ({} cold, {} without new items)",
                                cold, no_new));

  const auto max_k = *std::max_element(options.ks.begin(), options.ks.end());
  const std::size_t n_cells = options.metrics.size() * options.ks.size();
  // values[cell][user] so each mean is a pairwise sum in user order.
  std::vector<std::vector<double>> values(n_cells, std::vector<double>(eligible.size()));
  parallel_for(eligible.size(), options.threads, [&](std::size_t e) {
    const auto ranked = recommend_topk(model, eligible[e], max_k, seen[eligible[e]].items());
    std::size_t cell = 0;
    for (auto m : options.metrics)
      for (auto k : options.ks) values[cell++][e] = metric_at_k(m, ranked, relevant[e], k);
  });

  std::vector<EvalOutcome> out;
  std::size_t cell = 0;
  for (auto m : options.metrics)
    for (auto k : options.ks) {
      EvalOutcome o;
      o.metric = m;
      o.k = k;
      o.mean = pairwise_sum(values[cell++]) / static_cast<double>(eligible.size());
      o.n_users_evaluated = eligible.size();
      o.n_users_skipped_cold = cold;
      o.n_users_skipped_no_new = no_new;
      out.push_back(o);
    }
  return out;
}

std::string eval_csv_header() { return "metric,k,mean,n_eval,n_cold"; }

std::string eval_csv_row(const EvalOutcome& o) {
  return fmt::format("{},{},{:.12g},{},{}", to_string(o.metric), o.k, o.mean, o.n_users_evaluated,
                     o.n_users_skipped_cold);
}

}  // namespace cvtt
