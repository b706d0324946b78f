#include "cvtt/cvtt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cvtt/error.hpp"
#include "cvtt/rng.hpp"

namespace cvtt {

const char* to_string(FoldStage stage) {
  switch (stage) {
    case FoldStage::materialized: return "materialized";
    case FoldStage::holdout_randomized: return "holdout_randomized";
    case FoldStage::tuned: return "tuned";
    case FoldStage::refit: return "refit";
    case FoldStage::evaluating: return "evaluating";
    case FoldStage::evaluated: return "evaluated";
  }
  return "?";
}

double FoldResult::value(Metric metric, std::size_t k) const {
  for (const auto& m : metrics)
    if (m.metric == metric && m.k == k) return m.mean;
  throw UsageError(fmt::format("fold {} has no {}@{}", fold_index, to_string(metric), k));
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

InteractionLog merge_parts(const InteractionLog& train, const InteractionLog& valid) {
  std::vector<Interaction> all;
  all.reserve(train.size() + valid.size());
  all.insert(all.end(), train.records.begin(), train.records.end());
  all.insert(all.end(), valid.records.begin(), valid.records.end());
  std::stable_sort(all.begin(), all.end(), [](const Interaction& a, const Interaction& b) {
    return a.timestamp < b.timestamp;
  });
  return train.with_records(std::move(all));
}

}  // namespace

FoldResult run_fold(const InteractionLog& log, const PeriodGrid& grid, const FoldPlan& plan,
                    ModelKind kind, const FoldSettings& settings, std::uint64_t seed,
                    const FoldProbe* probe) {
  auto notify = [&](FoldStage stage, const Guarded<InteractionLog>& test) {
    if (probe && probe->on_stage) probe->on_stage(stage, test);
  };

  FoldResult result;
  result.fold_index = plan.fold_index;
  result.test_period = plan.test_period;
  result.strategy = plan.strategy;
  result.model = kind;

  SplitTriple triple = materialize_fold(log, grid, plan);
  notify(FoldStage::materialized, triple.test);
  if (plan.strategy.randomized()) {
    triple = randomize_holdout(triple, mix_seed(seed, 0x686f6c646f7574ULL));
    notify(FoldStage::holdout_randomized, triple.test);
  }
  result.n_train = triple.train.size();
  result.n_valid = triple.valid.size();

  const auto space = default_space(kind);
  TuneOptions tune_options;
  tune_options.n_trials = space.dimensions.empty() ? 1 : settings.n_trials;
  tune_options.seed = seed;
  tune_options.k = settings.selection_k;
  tune_options.threads = settings.threads;

  auto start = std::chrono::steady_clock::now();
  const auto train_matrix = build_matrix(triple.train, settings.aggregation);
  try {
    result.tuning = tune(kind, space, train_matrix, triple.valid, tune_options);
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("fold {} ({} {}): {}", plan.fold_index, to_string(kind),
                                      plan.strategy.name(), e.what()));
  }
  result.best_params = result.tuning.best_params;
  result.tune_seconds = seconds_since(start);
  notify(FoldStage::tuned, triple.test);

  start = std::chrono::steady_clock::now();
  const auto combined = merge_parts(triple.train, triple.valid);
  const auto matrix = build_matrix(combined, settings.aggregation);
  const auto model =
      fit_with_params(kind, result.best_params, matrix, seed, FitOptions{settings.threads});
  result.fit_seconds = seconds_since(start);
  notify(FoldStage::refit, triple.test);

  EvalOptions eval;
  eval.metrics = settings.metrics;
  eval.ks = settings.ks;
  eval.threads = settings.threads;
  notify(FoldStage::evaluating, triple.test);
  const auto& test = triple.test.read();
  result.n_test = test.size();
  try {
    result.metrics = evaluate_ranking(model, seen_items(matrix), test, eval);
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("fold {}: {}", plan.fold_index, e.what()));
  }
  notify(FoldStage::evaluated, triple.test);
  return result;
}

// ---------------------------------------------------------------- full run

std::string CVTTConfig::canonical() const {
  std::vector<std::string> strategy_names, model_names, metric_names;
  for (const auto& s : strategies) strategy_names.push_back(s.name());
  for (auto m : models) model_names.push_back(to_string(m));
  for (auto m : metrics) metric_names.push_back(to_string(m));
  return fmt::format(
      "dataset={}\ngranularity={}\nfilter_activity={}\nstrategies={}\nmodels={}\nn_trials={}\n"
      "seed={}\nmetrics={}\nks={}\nselection_k={}\nmin_train_periods={}\naggregation={}\n",
      dataset_label, granularity.to_string(), filter_activity, fmt::join(strategy_names, ","),
      fmt::join(model_names, ","), n_trials, seed, fmt::join(metric_names, ","),
      fmt::join(ks, ","), selection_k, min_train_periods, to_string(aggregation));
}

std::string CVTTConfig::fingerprint() const {
  return fmt::format("{:016x}", fnv1a(canonical() + "version=" + kVersion));
}

std::size_t CVTTReport::failed_folds() const {
  std::size_t n = 0;
  for (const auto& s : series)
    for (const auto& f : s.folds) n += f.failed;
  return n;
}

std::uint64_t derive_fold_seed(std::uint64_t seed, std::size_t fold_index, ModelKind model,
                               const DataStrategy& strategy) {
  std::uint64_t h = mix_seed(seed, fold_index);
  h = mix_seed(h, fnv1a(to_string(model)));
  return mix_seed(h, fnv1a(strategy.name()));
}

CVTTReport run_cvtt(const InteractionLog& source, const CVTTConfig& config) {
  if (config.strategies.empty() || config.models.empty())
    throw UsageError("configuration needs at least one strategy and one model");

  CVTTReport report;
  report.dataset = config.dataset_label;
  report.fingerprint = config.fingerprint();

  InteractionLog log = source;
  PeriodGrid grid = assign_periods(log, config.granularity);
  if (config.filter_activity) {
    auto filtered = filter_per_period_activity(log, grid);
    report.filter_iterations = filtered.iterations;
    log = std::move(filtered.log);
    grid = assign_periods(log, config.granularity);
  }
  if (grid.n_periods() < 3)
    throw DataError(fmt::format("CVTT needs at least 3 periods, the data spans {}",
                                grid.n_periods()));
  report.grid = grid;
  report.n_interactions = log.size();

  FoldSettings settings;
  settings.n_trials = config.n_trials;
  settings.selection_k = config.selection_k;
  settings.metrics = config.metrics;
  settings.ks = config.ks;
  settings.aggregation = config.aggregation;
  settings.threads = config.threads;

  for (auto model : config.models) {
    for (const auto& strategy : config.strategies) {
      Series series{model, strategy, {}};
      for (const auto& plan : plan_folds(grid, strategy, config.min_train_periods)) {
        const auto seed = derive_fold_seed(config.seed, plan.fold_index, model, strategy);
        try {
          series.folds.push_back(run_fold(log, grid, plan, model, settings, seed));
        } catch (const Error& e) {
          FoldResult failed;
          failed.fold_index = plan.fold_index;
          failed.test_period = plan.test_period;
          failed.strategy = strategy;
          failed.model = model;
          failed.failed = true;
          failed.error = e.what();
          series.folds.push_back(std::move(failed));
        }
      }
      report.series.push_back(std::move(series));
    }
  }
  return report;
}

std::string report_csv_header() {
  return "dataset,model,strategy,fold,test_period,metric,k,value,n_eval,n_cold,best_params";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_csv(const CVTTReport& report) {
  std::string out = report_csv_header() + "\n";
  for (const auto& s : report.series)
    for (const auto& f : s.folds) {
      if (f.failed) continue;
      for (const auto& m : f.metrics)
        out += fmt::format("{},{},{},{},{},{},{},{:.10f},{},{},{}\n", csv_field(report.dataset),
                           to_string(s.model), s.strategy.name(), f.fold_index, f.test_period,
                           to_string(m.metric), m.k, m.mean, m.n_users_evaluated,
                           m.n_users_skipped_cold, format_params(f.best_params));
    }
  return out;
}

// ---------------------------------------------------------------- comparison

StrategyComparison compare_strategies(const CVTTReport& report, Metric metric, std::size_t k) {
  if (report.series.empty()) throw UsageError("cannot compare an empty report");
  StrategyComparison out;
  out.metric = metric;
  out.k = k;
  for (const auto& s : report.series) {
    std::vector<double> values;
    for (const auto& f : s.folds)
      if (!f.failed) values.push_back(f.value(metric, k));
    SeriesSummary summary{s.model, s.strategy};
    summary.n_folds = values.size();
    if (!values.empty()) {
      const double n = static_cast<double>(values.size());
      summary.mean = pairwise_sum(values) / n;
      double sq = 0.0;
      for (double v : values) sq += (v - summary.mean) * (v - summary.mean);
      summary.std = std::sqrt(sq / n);
      summary.min = *std::min_element(values.begin(), values.end());
      summary.max = *std::max_element(values.begin(), values.end());
    }
    out.summaries.push_back(summary);
  }

  for (const auto& randomized : report.series) {
    if (!randomized.strategy.randomized()) continue;
    const auto base = randomized.strategy.temporal_base();
    for (const auto& temporal : report.series) {
      if (temporal.model != randomized.model || !(temporal.strategy == base)) continue;
      for (const auto& tf : temporal.folds) {
        if (tf.failed) continue;
        for (const auto& rf : randomized.folds)
          if (rf.fold_index == tf.fold_index && !rf.failed)
            out.deltas.push_back({temporal.model, temporal.strategy, randomized.strategy,
                                  tf.fold_index, tf.value(metric, k) - rf.value(metric, k)});
      }
    }
  }
  return out;
}

std::string comparison_csv(const StrategyComparison& c) {
  std::string out = "model,strategy,metric,k,n_folds,mean,std,min,max\n";
  for (const auto& s : c.summaries)
    out += fmt::format("{},{},{},{},{},{:.10f},{:.10f},{:.10f},{:.10f}\n", to_string(s.model),
                       s.strategy.name(), to_string(c.metric), c.k, s.n_folds, s.mean, s.std,
                       s.min, s.max);
  return out;
}

std::string paired_deltas_csv(const StrategyComparison& c) {
  std::string out = "model,temporal,randomized,metric,k,fold,delta\n";
  for (const auto& d : c.deltas)
    out += fmt::format("{},{},{},{},{},{},{:.10f}\n", to_string(d.model), d.temporal.name(),
                       d.randomized.name(), to_string(c.metric), c.k, d.fold_index, d.delta);
  return out;
}

}  // namespace cvtt
