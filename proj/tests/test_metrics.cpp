#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "cvtt/error.hpp"
#include "cvtt/metrics.hpp"
#include "support.hpp"

using namespace cvtt;

namespace {

constexpr ItemId a = 0, b = 1, x = 2, y = 3, z = 4;

std::vector<ItemId> v(std::initializer_list<ItemId> items) { return items; }

}  // namespace

TEST(Ndcg, WorkedExamples) {
  EXPECT_DOUBLE_EQ(ndcg_at_k(v({a}), {a}, 1), 1.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k(v({x, y, z}), {a}, 3), 0.0);
  const double expected = (1 / std::log2(3.0) + 1 / std::log2(4.0)) / (1 + 1 / std::log2(3.0));
  EXPECT_NEAR(ndcg_at_k(v({x, a, b}), {a, b}, 3), expected, 1e-15);
  EXPECT_NEAR(ndcg_at_k(v({x, a, b}), {a, b}, 3), 0.69343, 5e-6);
}

TEST(Recall, WorkedExamples) {
  EXPECT_DOUBLE_EQ(recall_at_k(v({a, x, y}), {a, b}, 3), 0.5);
  EXPECT_DOUBLE_EQ(recall_at_k(v({b, a, x}), {a, b}, 3), 1.0);
  EXPECT_DOUBLE_EQ(recall_at_k(v({b, a}), {a}, 1), 0.0);
}

TEST(HitRate, WorkedExamples) {
  EXPECT_EQ(hitrate_at_k(v({x, a}), {a}, 2), 1.0);
  EXPECT_EQ(hitrate_at_k(v({x, y}), {a}, 2), 0.0);
  EXPECT_EQ(hitrate_at_k(v({x, a}), {a}, 50), 1.0);
}

TEST(Metrics, InvalidArguments) {
  EXPECT_THROW(ndcg_at_k(v({a}), ItemSet{}, 1), UsageError);
  EXPECT_THROW(recall_at_k(v({a}), {a}, 0), UsageError);
  EXPECT_THROW(parse_metric("mrr"), UsageError);
}

TEST(Metrics, BruteForceOracleAndProperties) {
  std::mt19937_64 gen(2024);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n_items = 5 + gen() % 30;
    std::vector<ItemId> pool(n_items);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), gen);
    std::vector<ItemId> ranked(pool.begin(), pool.begin() + 1 + gen() % n_items);
    std::shuffle(pool.begin(), pool.end(), gen);
    std::vector<ItemId> rel(pool.begin(), pool.begin() + 1 + gen() % std::min<std::size_t>(n_items, 8));
    const std::size_t k = 1 + gen() % 20;
    const ItemSet relevant(rel);

    const double n = ndcg_at_k(ranked, relevant, k), r = recall_at_k(ranked, relevant, k),
                 h = hitrate_at_k(ranked, relevant, k);
    EXPECT_NEAR(n, oracle::ndcg(ranked, rel, k), 1e-12);
    EXPECT_NEAR(r, oracle::recall(ranked, rel, k), 1e-12);
    EXPECT_EQ(h, oracle::hitrate(ranked, rel, k));
    for (double m : {n, r, h}) {
      EXPECT_GE(m, 0.0);
      EXPECT_LE(m, 1.0);
    }
    EXPECT_GE(h, r);
    EXPECT_LE(r, recall_at_k(ranked, relevant, k + 1));

    // Shuffling beyond the cutoff leaves NDCG alone.
    if (ranked.size() > k + 1) {
      auto tail = ranked;
      std::shuffle(tail.begin() + static_cast<std::ptrdiff_t>(k), tail.end(), gen);
      EXPECT_EQ(ndcg_at_k(tail, relevant, k), n);
    }
    // NDCG is 1 exactly when the leading min(k, |rel|) slots are all relevant.
    bool ideal = ranked.size() >= std::min(k, rel.size());
    for (std::size_t p = 0; ideal && p < std::min(k, rel.size()); ++p)
      ideal = relevant.contains(ranked[p]);
    EXPECT_EQ(std::abs(n - 1.0) < 1e-12, ideal);
  }
}

TEST(PairwiseSum, MatchesNaiveSum) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> values(1001);
  for (auto& x : values) x = u(gen);
  long double naive = 0;
  for (double x : values) naive += x;
  EXPECT_NEAR(pairwise_sum(values), static_cast<double>(naive), 1e-12);
  EXPECT_EQ(pairwise_sum(std::span<const double>{}), 0.0);
}

namespace {

// Dense reference evaluator: scores every item for every user, excludes
// seen items, ranks by (score desc, id asc) and averages per-user metrics.
double dense_mean(const std::vector<std::vector<double>>& scores,
                  const std::vector<std::vector<ItemId>>& seen,
                  const std::vector<std::vector<ItemId>>& test, std::size_t k,
                  std::size_t* n_eval, std::size_t* n_cold) {
  double total = 0;
  *n_eval = *n_cold = 0;
  for (std::size_t u = 0; u < test.size(); ++u) {
    if (test[u].empty()) continue;
    if (seen[u].empty()) {
      ++*n_cold;
      continue;
    }
    std::vector<ItemId> relevant;
    for (auto i : test[u])
      if (!oracle::member(seen[u], i) && !oracle::member(relevant, i)) relevant.push_back(i);
    if (relevant.empty()) continue;
    std::vector<ItemId> candidates;
    for (ItemId i = 0; i < scores[u].size(); ++i)
      if (!oracle::member(seen[u], i)) candidates.push_back(i);
    std::sort(candidates.begin(), candidates.end(), [&](ItemId p, ItemId q) {
      return scores[u][p] != scores[u][q] ? scores[u][p] > scores[u][q] : p < q;
    });
    total += oracle::ndcg(candidates, relevant, k);
    ++*n_eval;
  }
  return total / static_cast<double>(*n_eval);
}

}  // namespace

TEST(EvaluateRanking, MatchesDenseEvaluator) {
  // 5 users, 6 items; u4 has no history (cold).
  auto train = SparseMatrix::from_triplets(5, 6,
                                           {{0, 0, 1}, {0, 1, 2}, {1, 1, 1}, {1, 2, 1}, {2, 0, 3},
                                            {2, 3, 1}, {3, 4, 1}, {3, 0, 1}, {2, 5, 1}});
  auto test = oracle::log_from_tuples(
      5, 6, {{0, 2, 10}, {0, 3, 11}, {1, 0, 12}, {2, 4, 13}, {3, 1, 14}, {3, 4, 15}, {4, 0, 16}});
  auto model = fit_itemknn(train, ItemKNNParams{});

  std::vector<std::vector<double>> scores;
  for (UserId u = 0; u < 5; ++u) scores.push_back(model.scores(u));
  std::vector<std::vector<ItemId>> seen(5), tested(5);
  for (const auto& t : train.triplets()) seen[t.row].push_back(t.col);
  for (const auto& r : test.records) tested[r.user].push_back(r.item);

  EvalOptions opt;
  opt.metrics = {Metric::ndcg};
  opt.ks = {1, 3, 10};
  auto out = evaluate_ranking(model, seen_items(train), test, opt);
  ASSERT_EQ(out.size(), 3u);
  for (const auto& o : out) {
    std::size_t n_eval, n_cold;
    EXPECT_NEAR(o.mean, dense_mean(scores, seen, tested, o.k, &n_eval, &n_cold), 1e-12);
    EXPECT_EQ(o.n_users_evaluated, n_eval);
    EXPECT_EQ(o.n_users_skipped_cold, n_cold);
    EXPECT_EQ(o.n_users_skipped_cold, 1u);
  }
}

TEST(EvaluateRanking, PerfectModelScoresOne) {
  // Popularity ranks i2 then i3 first; both users hold out exactly those.
  auto train = SparseMatrix::from_triplets(
      4, 5, {{0, 0, 1}, {1, 1, 1}, {2, 2, 5}, {2, 3, 4}, {3, 2, 5}, {3, 3, 4}});
  auto test = oracle::log_from_tuples(4, 5, {{0, 2, 1}, {0, 3, 2}, {1, 2, 3}, {1, 3, 4}});
  auto out = evaluate_ranking(fit_popularity(train), seen_items(train), test, EvalOptions{});
  for (const auto& o : out) EXPECT_DOUBLE_EQ(o.mean, 1.0);
}

TEST(EvaluateRanking, ThreadCountDoesNotChangeMeans) {
  std::mt19937_64 gen(5);
  auto train = oracle::random_matrix(gen, 60, 25, 0.15);
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::int64_t>> rows;
  for (std::uint32_t u = 0; u < 60; ++u) rows.emplace_back(u, static_cast<std::uint32_t>(gen() % 25), u);
  auto test = oracle::log_from_tuples(60, 25, rows);
  auto model = fit_popularity(train);
  EvalOptions one, four;
  four.threads = 4;
  auto p = evaluate_ranking(model, seen_items(train), test, one);
  auto q = evaluate_ranking(model, seen_items(train), test, four);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i].mean, q[i].mean);
}

TEST(EvaluateRanking, NoEligibleUsersIsDataError) {
  auto train = SparseMatrix::from_triplets(2, 2, {{0, 0, 1}});
  auto test = oracle::log_from_tuples(2, 2, {{1, 1, 1}});
  EXPECT_THROW(evaluate_ranking(fit_popularity(train), seen_items(train), test, EvalOptions{}),
               DataError);
}

TEST(EvaluateRanking, CsvRow) {
  EvalOutcome o{Metric::recall, 5, 0.25, 10, 2, 0};
  EXPECT_EQ(eval_csv_header(), "metric,k,mean,n_eval,n_cold");
  EXPECT_EQ(eval_csv_row(o).rfind("recall,5,0.25", 0), 0u);
}
