#include <gtest/gtest.h>

#include "cvtt/cvtt.hpp"
#include "cvtt/error.hpp"
#include "cvtt/synth.hpp"
#include "support.hpp"

using namespace cvtt;

namespace {

InteractionLog drift_log(std::size_t n_periods, std::uint64_t seed) {
  return generate(make_zipf_scenario(30, 25, n_periods, 5, 1.0, n_periods / 2, seed));
}

CVTTConfig quick_config() {
  CVTTConfig c;
  c.filter_activity = false;
  c.n_trials = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(RunFold, PopularityEqualsHandRun) {
  auto log = drift_log(5, 1);
  auto grid = assign_periods(log, Granularity::month());
  auto plan = plan_folds(grid, DataStrategy::expand())[1];
  auto result = run_fold(log, grid, plan, ModelKind::popularity, FoldSettings{}, 9);

  auto triple = materialize_fold(log, grid, plan);
  std::vector<Interaction> merged = triple.train.records;
  merged.insert(merged.end(), triple.valid.records.begin(), triple.valid.records.end());
  auto matrix = build_matrix(triple.train.with_records(merged), Aggregation::count);
  EvalOptions eval;
  eval.metrics = {Metric::ndcg};
  auto direct = evaluate_ranking(fit_popularity(matrix), seen_items(matrix), triple.test.read(), eval);
  EXPECT_EQ(result.value(Metric::ndcg, 10), direct[0].mean);
  EXPECT_EQ(result.tuning.trials.size(), 1u);
}

TEST(RunFold, TestIsReadOnlyDuringEvaluation) {
  auto log = drift_log(5, 2);
  auto grid = assign_periods(log, Granularity::month());
  FoldSettings settings;
  settings.n_trials = 3;
  for (auto strategy : {DataStrategy::expand(), DataStrategy::random_expand()})
    for (auto kind : {ModelKind::popularity, ModelKind::itemknn}) {
      std::map<FoldStage, std::size_t> reads;
      FoldProbe probe{[&](FoldStage stage, const Guarded<InteractionLog>& test) {
        reads[stage] = test.reads();
      }};
      run_fold(log, grid, plan_folds(grid, strategy)[0], kind, settings, 4, &probe);
      EXPECT_EQ(reads.at(FoldStage::evaluating), 0u);
      EXPECT_GT(reads.at(FoldStage::evaluated), 0u);
    }
}

TEST(RunFold, RandomizedShareTestWithTemporal) {
  auto log = drift_log(6, 3);
  auto grid = assign_periods(log, Granularity::month());
  for (std::size_t f = 0; f < 4; ++f) {
    auto a = plan_folds(grid, DataStrategy::expand())[f];
    auto b = plan_folds(grid, DataStrategy::random_expand())[f];
    auto ta = materialize_fold(log, grid, a);
    auto tb = randomize_holdout(materialize_fold(log, grid, b), 77);
    EXPECT_EQ(ta.test.read().records, tb.test.read().records);
    EXPECT_EQ(ta.valid.size(), tb.valid.size());
  }
}

TEST(RunFold, EmptyTestNamesFold) {
  // No records in April (period 3).
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::int64_t>> rows;
  const std::int64_t months[] = {1577836800, 1580515200, 1583020800, 1588291200};
  for (auto t : months)
    for (std::uint32_t u = 0; u < 3; ++u) rows.emplace_back(u, u, t + u);
  auto log = oracle::log_from_tuples(3, 3, rows);
  auto grid = assign_periods(log, Granularity::month());
  ASSERT_EQ(grid.n_periods(), 5u);
  auto plan = plan_folds(grid, DataStrategy::expand())[1];
  ASSERT_EQ(plan.test_period, 3);
  try {
    run_fold(log, grid, plan, ModelKind::popularity, FoldSettings{}, 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("fold 1"), std::string::npos);
  }
}

TEST(RunCvtt, SeriesAndFoldCounts) {
  auto config = quick_config();
  config.models = {ModelKind::popularity, ModelKind::itemknn};
  auto report = run_cvtt(drift_log(5, 4), config);
  ASSERT_EQ(report.series.size(), 2u);
  for (const auto& s : report.series) EXPECT_EQ(s.folds.size(), 3u);
  EXPECT_EQ(report.failed_folds(), 0u);
}

TEST(RunCvtt, FourStrategiesPerModel) {
  auto config = quick_config();
  config.strategies = {DataStrategy::expand(), DataStrategy::sliding(3),
                       DataStrategy::random_expand(), DataStrategy::random_sliding(3)};
  auto report = run_cvtt(drift_log(6, 5), config);
  ASSERT_EQ(report.series.size(), 4u);
  for (const auto& s : report.series) EXPECT_EQ(s.folds.size(), 4u);
  auto cmp = compare_strategies(report);
  EXPECT_EQ(cmp.summaries.size(), 4u);
  EXPECT_EQ(cmp.deltas.size(), 8u);
}

TEST(RunCvtt, ByteIdenticalRerun) {
  auto config = quick_config();
  config.models = {ModelKind::itemknn, ModelKind::slim};
  config.strategies = {DataStrategy::expand(), DataStrategy::random_sliding(2)};
  auto log = drift_log(5, 6);
  EXPECT_EQ(report_csv(run_cvtt(log, config)), report_csv(run_cvtt(log, config)));
}

TEST(RunCvtt, AddingAModelLeavesOthersUntouched) {
  auto log = drift_log(5, 7);
  auto one = quick_config();
  one.models = {ModelKind::itemknn};
  auto two = one;
  two.models = {ModelKind::slim, ModelKind::itemknn};
  auto a = run_cvtt(log, one), b = run_cvtt(log, two);
  for (std::size_t f = 0; f < a.series[0].folds.size(); ++f)
    EXPECT_EQ(a.series[0].folds[f].best_params, b.series[1].folds[f].best_params);
}

TEST(RunCvtt, TooFewPeriods) {
  EXPECT_THROW(run_cvtt(drift_log(2, 1), quick_config()), DataError);
}

TEST(RunCvtt, ReportCsvShape) {
  auto config = quick_config();
  config.metrics = {Metric::ndcg, Metric::recall};
  config.ks = {5, 10};
  auto csv = report_csv(run_cvtt(drift_log(4, 8), config));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "dataset,model,strategy,fold,test_period,metric,k,value,n_eval,n_cold,best_params");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 4);
}

TEST(Fingerprint, SensitiveToSettings) {
  auto a = quick_config(), b = quick_config();
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.seed = 6;
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(a.fingerprint().size(), 16u);
}

namespace {

CVTTReport synthetic_report(std::vector<std::vector<double>> per_series,
                            std::vector<DataStrategy> strategies) {
  CVTTReport r;
  for (std::size_t s = 0; s < per_series.size(); ++s) {
    Series series{ModelKind::popularity, strategies[s], {}};
    for (std::size_t f = 0; f < per_series[s].size(); ++f) {
      FoldResult fr;
      fr.fold_index = f;
      fr.strategy = strategies[s];
      fr.metrics.push_back({Metric::ndcg, 10, per_series[s][f], 1, 0, 0});
      series.folds.push_back(fr);
    }
    r.series.push_back(series);
  }
  return r;
}

}  // namespace

TEST(CompareStrategies, ConstantSeries) {
  auto c = compare_strategies(synthetic_report({{0.5, 0.5, 0.5}}, {DataStrategy::expand()}));
  EXPECT_DOUBLE_EQ(c.summaries[0].mean, 0.5);
  EXPECT_DOUBLE_EQ(c.summaries[0].std, 0.0);
}

TEST(CompareStrategies, Arithmetic) {
  auto c = compare_strategies(synthetic_report({{0.2, 0.4, 0.6}}, {DataStrategy::expand()}));
  EXPECT_NEAR(c.summaries[0].mean, 0.4, 1e-15);
  EXPECT_DOUBLE_EQ(c.summaries[0].min, 0.2);
  EXPECT_DOUBLE_EQ(c.summaries[0].max, 0.6);
  EXPECT_NEAR(c.summaries[0].std, std::sqrt(0.08 / 3), 1e-15);
}

TEST(CompareStrategies, IdenticalPairedSeriesGiveZeroDeltas) {
  auto c = compare_strategies(synthetic_report(
      {{0.1, 0.3, 0.2}, {0.1, 0.3, 0.2}}, {DataStrategy::expand(), DataStrategy::random_expand()}));
  ASSERT_EQ(c.deltas.size(), 3u);
  for (const auto& d : c.deltas) EXPECT_EQ(d.delta, 0.0);
}
