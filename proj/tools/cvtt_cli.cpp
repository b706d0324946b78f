// cvtt: command-line frontend over the libcvtt C API.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cvtt/cvtt.h"

namespace {

int fail(cvtt_status status) {
  std::fprintf(stderr, "cvtt: %s\n", cvtt_last_error());
  return static_cast<int>(status);
}

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { cvtt_string_free(p); }
};

struct OwnedLog {
  cvtt_log* p = nullptr;
  ~OwnedLog() { cvtt_log_free(p); }
};

struct StatsArgs {
  std::string path;
  std::string periods = "month";
  std::optional<std::string> user, item, timestamp, weight;
  std::string delimiter = ",";
  bool no_header = false;
  bool iso8601 = false;
};

struct RunArgs {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<std::int64_t> seed;
  std::optional<std::int64_t> n_trials;
  bool check_only = false;
};

struct PlotArgs {
  std::string report;
  std::string metric = "ndcg";
  std::size_t k = 10;
  std::string output;
};

struct SynthArgs {
  cvtt_synth_spec spec{};
  std::size_t shift = 0;
  std::string output = "-";
};

int cmd_stats(const StatsArgs& a) {
  cvtt_schema schema;
  cvtt_schema_init(&schema);
  schema.has_header = a.no_header ? 0 : 1;
  schema.iso8601 = a.iso8601 ? 1 : 0;
  if (a.delimiter == "tab" || a.delimiter == "\\t")
    schema.delimiter = '\t';
  else if (a.delimiter.size() == 1)
    schema.delimiter = a.delimiter[0];
  else {
    std::fprintf(stderr, "cvtt: --delimiter must be one character or \"tab\"\n");
    return CVTT_ERR_USAGE;
  }
  if (a.user) schema.user = a.user->c_str();
  if (a.item) schema.item = a.item->c_str();
  if (a.timestamp) schema.timestamp = a.timestamp->c_str();
  if (a.weight) schema.weight = a.weight->c_str();

  OwnedLog log;
  std::size_t skipped = 0;
  if (auto s = cvtt_log_load(a.path.c_str(), &schema, &log.p, &skipped); s != CVTT_OK) return fail(s);
  if (skipped > 0) std::fprintf(stderr, "cvtt: %s\n", cvtt_log_warnings(log.p));
  OwnedString csv;
  if (auto s = cvtt_log_stats_csv(log.p, a.periods.c_str(), &csv.p); s != CVTT_OK) return fail(s);
  std::fputs(csv.p, stdout);
  return 0;
}

// threads <= 0 keeps the config's setting.
int cmd_run(const RunArgs& a, int threads) {
  if (a.check_only) {
    OwnedString resolved;
    if (auto s = cvtt_check_config(a.config.c_str(), &resolved.p); s != CVTT_OK) return fail(s);
    std::printf("%s\n", resolved.p);
    return 0;
  }
  cvtt_run_options options;
  cvtt_run_options_init(&options);
  if (a.output_dir) options.output_dir = a.output_dir->c_str();
  if (a.seed) options.seed = *a.seed;
  if (a.n_trials) options.n_trials = *a.n_trials;
  options.threads = threads;
  OwnedString summary;
  if (auto s = cvtt_run_config(a.config.c_str(), &options, &summary.p); s != CVTT_OK) return fail(s);
  std::printf("%s\n", summary.p);
  return 0;
}

int cmd_plot(const PlotArgs& a) {
  if (auto s = cvtt_plot_report(a.report.c_str(), a.metric.c_str(), a.k, a.output.c_str());
      s != CVTT_OK)
    return fail(s);
  return 0;
}

int cmd_synth(SynthArgs a) {
  a.spec.shift_period = a.shift;
  OwnedLog log;
  if (auto s = cvtt_synth_generate(&a.spec, &log.p); s != CVTT_OK) return fail(s);
  if (a.output == "-") {
    OwnedString csv;
    if (auto s = cvtt_log_to_csv(log.p, &csv.p); s != CVTT_OK) return fail(s);
    std::fputs(csv.p, stdout);
    return 0;
  }
  if (auto s = cvtt_log_write(log.p, a.output.c_str()); s != CVTT_OK) return fail(s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-validation through time for recommender evaluation"};
  app.set_version_flag("--version", std::string(cvtt_version()));
  app.require_subcommand(1);
  int threads = 1;
  auto* threads_opt =
      app.add_option("--threads", threads,
                     "Worker threads, overrides the config (1 gives byte-stable output)")
          ->check(CLI::PositiveNumber);

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics before and after filtering");
  stats_cmd->add_option("path", stats.path, "Interaction file")->required();
  stats_cmd->add_option("--periods", stats.periods, "month, week, day or seconds:N")
      ->capture_default_str();
  stats_cmd->add_option("--user", stats.user, "User column (name or index)");
  stats_cmd->add_option("--item", stats.item, "Item column (name or index)");
  stats_cmd->add_option("--timestamp", stats.timestamp, "Timestamp column (name or index)");
  stats_cmd->add_option("--weight", stats.weight, "Weight column (name or index)");
  stats_cmd->add_option("--delimiter", stats.delimiter, "Field delimiter or \"tab\"")
      ->capture_default_str();
  stats_cmd->add_flag("--no-header", stats.no_header, "Input has no header row");
  stats_cmd->add_flag("--iso8601", stats.iso8601, "Timestamps are ISO-8601 dates");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a configured evaluation");
  run_cmd->add_option("config", run.config, "JSON run configuration")->required();
  run_cmd->add_option("-o,--output-dir", run.output_dir, "Override output_dir");
  run_cmd->add_option("--seed", run.seed, "Override seed")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--n-trials", run.n_trials, "Override n_trials")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--check", run.check_only, "Validate and print the resolved config only");

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "Render a report as an SVG line chart");
  plot_cmd->add_option("report", plot.report, "report.csv")->required();
  plot_cmd->add_option("--metric", plot.metric, "ndcg, recall or hitrate")->capture_default_str();
  plot_cmd->add_option("--k", plot.k, "Cutoff")->check(CLI::PositiveNumber)->capture_default_str();
  plot_cmd->add_option("-o,--output", plot.output, "Output SVG")->required();

  SynthArgs synth;
  cvtt_synth_spec_init(&synth.spec);
  auto* synth_cmd = app.add_subcommand("synth", "Emit a synthetic drifting interaction log");
  synth_cmd->add_option("--users", synth.spec.n_users)->capture_default_str();
  synth_cmd->add_option("--items", synth.spec.n_items)->capture_default_str();
  synth_cmd->add_option("--periods", synth.spec.n_periods)->capture_default_str();
  synth_cmd->add_option("--per-period", synth.spec.interactions_per_period,
                        "Draws per user per period")
      ->capture_default_str();
  synth_cmd->add_option("--zipf", synth.spec.zipf_exponent, "Popularity exponent")
      ->capture_default_str();
  synth_cmd->add_option("--shift", synth.shift, "Period where popularity rotates (0 = none)");
  synth_cmd->add_option("--seed", synth.spec.seed)->capture_default_str();
  synth_cmd->add_option("-o,--output", synth.output, "Output file, - for stdout")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : CVTT_ERR_USAGE;
  }

  if (*stats_cmd) return cmd_stats(stats);
  if (*run_cmd) return cmd_run(run, threads_opt->count() ? threads : 0);
  if (*plot_cmd) return cmd_plot(plot);
  return cmd_synth(synth);
}
