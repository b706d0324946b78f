#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cvtt/hpo.hpp"
#include "cvtt/ingest.hpp"
#include "cvtt/metrics.hpp"
#include "cvtt/models.hpp"
#include "cvtt/splitkit.hpp"

namespace cvtt {

inline constexpr const char* kVersion = "0.1.0";

enum class FoldStage { materialized, holdout_randomized, tuned, refit, evaluating, evaluated };

const char* to_string(FoldStage stage);

/// Observes run_fold. The callback receives the fold's guarded test part so
/// a test can check how often it was read at each stage.
struct FoldProbe {
  std::function<void(FoldStage, const Guarded<InteractionLog>& test)> on_stage;
};

struct FoldSettings {
  std::size_t n_trials = 25;
  std::size_t selection_k = 10;
  std::vector<Metric> metrics{Metric::ndcg};
  std::vector<std::size_t> ks{10};
  Aggregation aggregation = Aggregation::count;
  unsigned threads = 1;
};

struct FoldResult {
  std::size_t fold_index = 0;
  std::int64_t test_period = 0;
  DataStrategy strategy;
  ModelKind model = ModelKind::popularity;
  ParamSet best_params;
  std::vector<EvalOutcome> metrics;
  TuneResult tuning;
  double tune_seconds = 0.0;
  double fit_seconds = 0.0;
  std::size_t n_train = 0;
  std::size_t n_valid = 0;
  std::size_t n_test = 0;
  bool failed = false;
  std::string error;

  /// Mean of (metric, k); throws UsageError if it was not computed.
  double value(Metric metric, std::size_t k) const;
};

/// materialize -> (randomize holdout) -> tune on train/valid -> refit on
/// train+valid -> evaluate on test. The test part is read only by the
/// final evaluation.
FoldResult run_fold(const InteractionLog& log, const PeriodGrid& grid, const FoldPlan& plan,
                    ModelKind kind, const FoldSettings& settings, std::uint64_t seed,
                    const FoldProbe* probe = nullptr);

struct CVTTConfig {
  std::string dataset_label = "dataset";
  Granularity granularity = Granularity::month();
  bool filter_activity = true;
  std::vector<DataStrategy> strategies{DataStrategy::expand()};
  std::vector<ModelKind> models{ModelKind::popularity};
  std::size_t n_trials = 25;
  std::uint64_t seed = 0;
  std::vector<Metric> metrics{Metric::ndcg};
  std::vector<std::size_t> ks{10};
  std::size_t selection_k = 10;
  std::size_t min_train_periods = 1;
  Aggregation aggregation = Aggregation::count;
  unsigned threads = 1;

  /// Stable text form of every setting that affects results.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical() and the library version.
  std::string fingerprint() const;
};

struct Series {
  ModelKind model;
  DataStrategy strategy;
  std::vector<FoldResult> folds;
};

struct CVTTReport {
  std::string dataset;
  std::string fingerprint;
  PeriodGrid grid;
  std::size_t filter_iterations = 0;
  std::size_t n_interactions = 0;
  std::vector<Series> series;

  std::size_t failed_folds() const;
};

/// Seed of one (fold, model, strategy) cell. Independent of which other
/// models or strategies are configured.
std::uint64_t derive_fold_seed(std::uint64_t seed, std::size_t fold_index, ModelKind model,
                               const DataStrategy& strategy);

/// Runs every fold of every (model, strategy) pair. Fold failures are
/// recorded in the report, not thrown.
CVTTReport run_cvtt(const InteractionLog& log, const CVTTConfig& config);

/// dataset,model,strategy,fold,test_period,metric,k,value,n_eval,n_cold,best_params
std::string report_csv(const CVTTReport& report);
std::string report_csv_header();

struct SeriesSummary {
  ModelKind model;
  DataStrategy strategy;
  std::size_t n_folds = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
};

struct PairedDelta {
  ModelKind model;
  DataStrategy temporal;
  DataStrategy randomized;
  std::size_t fold_index = 0;
  double delta = 0.0;  // temporal - randomized
};

struct StrategyComparison {
  Metric metric = Metric::ndcg;
  std::size_t k = 10;
  std::vector<SeriesSummary> summaries;
  std::vector<PairedDelta> deltas;
};

StrategyComparison compare_strategies(const CVTTReport& report, Metric metric = Metric::ndcg,
                                      std::size_t k = 10);
std::string comparison_csv(const StrategyComparison& comparison);
/// Per-fold temporal minus randomized values for each paired strategy.
std::string paired_deltas_csv(const StrategyComparison& comparison);

}  // namespace cvtt
