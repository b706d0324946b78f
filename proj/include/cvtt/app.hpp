#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvtt/cvtt.hpp"
#include "cvtt/synth.hpp"

namespace cvtt::app {

struct SyntheticSpec {
  std::size_t n_users = 60;
  std::size_t n_items = 80;
  std::size_t n_periods = 6;
  std::size_t interactions_per_period = 5;
  double zipf_exponent = 1.0;
  std::optional<std::size_t> shift_period;
  std::uint64_t seed = 1;

  DriftScenario scenario() const;
};

struct DatasetSpec {
  std::string label = "dataset";
  std::optional<std::string> path;  // absolute, or relative to the config file
  Schema schema;
  std::optional<SyntheticSpec> synthetic;
};

struct RunSpec {
  DatasetSpec dataset;
  CVTTConfig config;
  std::string output_dir = "cvtt-out";
  Metric plot_metric = Metric::ndcg;
  std::size_t plot_k = 10;
};

struct RunOverrides {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_trials;
  std::optional<unsigned> threads;
};

/// Parses a JSON run configuration. Unknown keys and invalid values raise
/// UsageError naming the key; nothing is executed.
RunSpec parse_run_spec(const std::string& json_text, const std::string& base_dir = ".");
RunSpec load_run_spec(const std::string& path, const RunOverrides& overrides = {});

/// JSON echo of every resolved setting.
std::string resolved_config_json(const RunSpec& spec);

InteractionLog load_dataset(const DatasetSpec& dataset, std::vector<std::string>* warnings = nullptr);

struct RunSummary {
  std::string report_path;
  std::string manifest_path;
  std::string plot_path;
  std::size_t n_folds = 0;
  std::size_t failed_folds = 0;
  std::string fingerprint;
};

/// Runs the configured CVTT evaluation and writes report.csv,
/// comparison.csv, trials/*.csv, the SVG chart and manifest.json into the
/// output directory.
RunSummary execute_run(const RunSpec& spec);

/// Before/after-filter statistics as CSV (header + two rows).
std::string stats_csv(const InteractionLog& log, Granularity granularity);

struct ReportRow {
  std::string dataset;
  std::string model;
  std::string strategy;
  std::size_t fold = 0;
  std::int64_t test_period = 0;
  std::string metric;
  std::size_t k = 0;
  double value = 0.0;
};

std::vector<ReportRow> parse_report_csv(const std::string& text);

/// One polyline per (model, strategy) series, y fixed to [0, 1]. Throws
/// DataError for an empty report or a missing (metric, k).
std::string render_svg(const std::vector<ReportRow>& rows, const std::string& metric,
                       std::size_t k);
void plot_report(const std::string& report_path, const std::string& metric, std::size_t k,
                 const std::string& svg_path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace cvtt::app
