#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cvtt/error.hpp"
#include "cvtt/hpo.hpp"
#include "cvtt/metrics.hpp"
#include "cvtt/splitkit.hpp"
#include "cvtt/synth.hpp"

using namespace cvtt;

namespace {

struct Fold {
  SparseMatrix train;
  InteractionLog valid;
};

Fold synthetic_fold(std::uint64_t seed) {
  auto log = generate(make_zipf_scenario(40, 30, 4, 6, 1.0, std::nullopt, seed));
  auto grid = assign_periods(log, Granularity::month());
  auto triple = materialize_fold(log, grid, plan_folds(grid, DataStrategy::expand()).back());
  return {build_matrix(triple.train, Aggregation::count), triple.valid};
}

const Dimension* find(const SearchSpace& s, const std::string& name) {
  for (const auto& d : s.dimensions)
    if (d.name == name) return &d;
  return nullptr;
}

}  // namespace

TEST(SearchSpace, SlimRows) {
  auto s = default_space(ModelKind::slim);
  ASSERT_EQ(s.dimensions.size(), 4u);
  auto top_k = find(s, "top_k");
  ASSERT_NE(top_k, nullptr);
  EXPECT_EQ(top_k->low, 5);
  EXPECT_EQ(top_k->high, 800);
  EXPECT_NE(find(s, "l1_ratio"), nullptr);
  EXPECT_NE(find(s, "alpha"), nullptr);
  EXPECT_NE(find(s, "positive_only"), nullptr);
}

TEST(SearchSpace, IalsRows) {
  auto s = default_space(ModelKind::ials);
  ASSERT_EQ(s.dimensions.size(), 5u);
  auto eps = find(s, "epsilon");
  ASSERT_NE(eps, nullptr);
  EXPECT_EQ(eps->type, Dimension::Type::real_log_uniform);
  EXPECT_DOUBLE_EQ(eps->low, 1e-3);
  EXPECT_DOUBLE_EQ(eps->high, 10.0);
}

TEST(SearchSpace, ItemKnnSimilarityChoices) {
  const auto space = default_space(ModelKind::itemknn);
  auto sim = find(space, "similarity");
  ASSERT_NE(sim, nullptr);
  std::vector<std::string> names;
  for (const auto& c : sim->choices) names.push_back(std::get<std::string>(c));
  std::sort(names.begin(), names.end());
  EXPECT_EQ(names, (std::vector<std::string>{"asymmetric", "cosine", "dice", "jaccard", "tversky"}));
  EXPECT_TRUE(default_space(ModelKind::popularity).dimensions.empty());
  EXPECT_THROW(default_space("multivae"), UsageError);
}

TEST(Sampling, SeededDrawsRepeat) {
  for (auto kind : {ModelKind::slim, ModelKind::ials, ModelKind::itemknn}) {
    Rng a(5), b(5);
    const auto space = default_space(kind);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_params(space, a), sample_params(space, b));
  }
}

TEST(Sampling, LogUniformMedianIsGeometricMean) {
  SearchSpace s;
  s.dimensions = {Dimension::log_real("x", 1e-4, 1.0)};
  Rng rng(1);
  std::vector<double> xs;
  for (int i = 0; i < 20001; ++i) {
    const double x = std::get<double>(sample_params(s, rng).at("x"));
    ASSERT_GE(x, 1e-4);
    ASSERT_LE(x, 1.0);
    xs.push_back(x);
  }
  std::nth_element(xs.begin(), xs.begin() + 10000, xs.end());
  EXPECT_NEAR(std::log10(xs[10000]), -2.0, 0.05);
}

TEST(Sampling, IntegerAndCategoricalBounds) {
  SearchSpace s;
  s.dimensions = {Dimension::integer("n", 3, 5), Dimension::categorical("c", {true, false})};
  Rng rng(2);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 300; ++i) {
    auto p = sample_params(s, rng);
    seen.insert(std::get<std::int64_t>(p.at("n")));
  }
  EXPECT_EQ(seen, (std::set<std::int64_t>{3, 4, 5}));
}

TEST(Tune, SingleTrialIsBest) {
  auto fold = synthetic_fold(1);
  TuneOptions opt;
  opt.n_trials = 1;
  opt.seed = 3;
  auto r = tune(ModelKind::itemknn, default_space(ModelKind::itemknn), fold.train, fold.valid, opt);
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_EQ(r.best_params, r.trials[0].params);
  EXPECT_EQ(r.best_score, r.trials[0].score);
}

TEST(Tune, SinglePointSpaceGivesIdenticalTrials) {
  auto fold = synthetic_fold(2);
  SearchSpace s;
  s.kind = ModelKind::ials;
  s.dimensions = {Dimension::integer("n_factors", 4, 4), Dimension::log_real("alpha", 2.0, 2.0),
                  Dimension::categorical("confidence_scaling", {false})};
  TuneOptions opt;
  opt.seed = 11;
  auto r = tune(ModelKind::ials, s, fold.train, fold.valid, opt);
  ASSERT_EQ(r.trials.size(), 25u);
  for (const auto& t : r.trials) {
    EXPECT_EQ(t.params, r.trials[0].params);
    EXPECT_EQ(t.score, r.trials[0].score);
  }
}

TEST(Tune, PopularityMatchesDirectEvaluation) {
  auto fold = synthetic_fold(3);
  TuneOptions opt;
  opt.n_trials = 1;
  auto r = tune(ModelKind::popularity, default_space(ModelKind::popularity), fold.train,
                fold.valid, opt);
  EvalOptions eval;
  eval.metrics = {Metric::ndcg};
  eval.ks = {10};
  auto direct = evaluate_ranking(fit_popularity(fold.train), seen_items(fold.train), fold.valid, eval);
  EXPECT_EQ(r.best_score, direct[0].mean);
}

TEST(Tune, ReproducibleAndBestIsMax) {
  auto fold = synthetic_fold(4);
  TuneOptions opt;
  opt.n_trials = 8;
  opt.seed = 21;
  auto a = tune(ModelKind::slim, default_space(ModelKind::slim), fold.train, fold.valid, opt);
  auto b = tune(ModelKind::slim, default_space(ModelKind::slim), fold.train, fold.valid, opt);
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    EXPECT_EQ(a.trials[t].params, b.trials[t].params);
    EXPECT_EQ(a.trials[t].score, b.trials[t].score);
    if (!a.trials[t].failed) EXPECT_GE(a.best_score, a.trials[t].score);
  }
  EXPECT_EQ(a.best_score, a.trials[a.best_trial].score);
  opt.threads = 3;
  auto c = tune(ModelKind::slim, default_space(ModelKind::slim), fold.train, fold.valid, opt);
  for (std::size_t t = 0; t < a.trials.size(); ++t) EXPECT_EQ(a.trials[t].score, c.trials[t].score);
}

namespace {

class AlternatingSampler final : public Sampler {
 public:
  ParamSet sample(const SearchSpace&, Rng& rng) const override {
    const bool large = rng.below(2) == 0;
    return {{"n_factors", std::int64_t{2}}, {"alpha", large ? 50.0 : 1e-3}};
  }
};

}  // namespace

TEST(Tune, FailedTrialsAreRecordedNotFatal) {
  auto fold = synthetic_fold(5);
  // One enormous interaction weight overflows the confidence for alpha = 50
  // but not for alpha = 1e-3.
  auto triplets = fold.train.triplets();
  triplets.front().value = 1e308;
  const auto train =
      SparseMatrix::from_triplets(fold.train.n_rows(), fold.train.n_cols(), std::move(triplets));
  AlternatingSampler sampler;
  TuneOptions opt;
  opt.n_trials = 10;
  opt.sampler = &sampler;
  auto r = tune(ModelKind::ials, default_space(ModelKind::ials), train, fold.valid, opt);
  std::size_t failed = 0;
  for (const auto& t : r.trials) {
    failed += t.failed;
    EXPECT_EQ(t.failed, std::get<double>(t.params.at("alpha")) == 50.0);
  }
  EXPECT_GT(failed, 0u);
  EXPECT_LT(failed, r.trials.size());
  EXPECT_FALSE(r.trials[r.best_trial].failed);
  const auto csv = trial_log_csv(r);
  EXPECT_EQ(csv.rfind("trial,params,score,seconds,failed\n", 0), 0u);
}

TEST(Tune, OutOfRangeParametersAreUsageErrors) {
  class Bad final : public Sampler {
   public:
    ParamSet sample(const SearchSpace&, Rng&) const override { return {{"n_factors", std::int64_t{0}}}; }
  } bad;
  auto fold = synthetic_fold(6);
  TuneOptions opt;
  opt.n_trials = 2;
  opt.sampler = &bad;
  EXPECT_THROW(tune(ModelKind::ials, default_space(ModelKind::ials), fold.train, fold.valid, opt),
               UsageError);
}

TEST(Params, FormatIsFlatAndOrdered) {
  ParamSet p{{"b", true}, {"a", std::int64_t{3}}, {"c", 0.5}, {"d", std::string("cosine")}};
  EXPECT_EQ(format_params(p), "{a:3;b:true;c:0.5;d:cosine}");
  EXPECT_EQ(format_params({}), "{}");
}
