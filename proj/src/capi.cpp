#include "cvtt/cvtt.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "cvtt/app.hpp"
#include "cvtt/error.hpp"

struct cvtt_log {
  cvtt::InteractionLog log;
  std::string warnings;
};

namespace {

thread_local std::string last_error;

template <class F>
cvtt_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return CVTT_OK;
  } catch (const cvtt::Error& e) {
    last_error = e.what();
    return static_cast<cvtt_status>(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return CVTT_ERR_EXEC;
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw cvtt::UsageError(what);
}

cvtt::ColumnRef column_or(const char* text, cvtt::ColumnRef fallback) {
  return text ? cvtt::ColumnRef::parse(text) : fallback;
}

}  // namespace

extern "C" {

const char* cvtt_version(void) { return cvtt::kVersion; }

const char* cvtt_last_error(void) { return last_error.c_str(); }

void cvtt_schema_init(cvtt_schema* schema) {
  if (!schema) return;
  *schema = cvtt_schema{};
  schema->has_header = 1;
}

void cvtt_synth_spec_init(cvtt_synth_spec* spec) {
  if (!spec) return;
  const cvtt::app::SyntheticSpec d;
  *spec = cvtt_synth_spec{d.n_users, d.n_items, d.n_periods, d.interactions_per_period,
                          d.zipf_exponent, 0, d.seed};
}

void cvtt_run_options_init(cvtt_run_options* options) {
  if (!options) return;
  *options = cvtt_run_options{nullptr, -1, -1, 0};
}

cvtt_status cvtt_log_load(const char* path, const cvtt_schema* schema, cvtt_log** out,
                          size_t* skipped_rows) {
  return guarded([&] {
    require(path && out, "cvtt_log_load: null argument");
    *out = nullptr;
    cvtt_schema s;
    cvtt_schema_init(&s);
    if (schema) s = *schema;
    cvtt::Schema cs;
    cs.has_header = s.has_header != 0;
    const bool named = cs.has_header;
    cs.user = column_or(s.user, named ? cvtt::ColumnRef{"user", -1} : cvtt::ColumnRef{"", 0});
    cs.item = column_or(s.item, named ? cvtt::ColumnRef{"item", -1} : cvtt::ColumnRef{"", 1});
    cs.timestamp =
        column_or(s.timestamp, named ? cvtt::ColumnRef{"timestamp", -1} : cvtt::ColumnRef{"", 2});
    if (s.weight) cs.weight = cvtt::ColumnRef::parse(s.weight);
    if (s.delimiter) cs.delimiter = s.delimiter;
    cs.timestamp_format =
        s.iso8601 ? cvtt::TimestampFormat::iso8601 : cvtt::TimestampFormat::unix_seconds;
    auto parsed = cvtt::parse_interactions(path, cs);
    if (skipped_rows) *skipped_rows = parsed.skipped;
    std::string warnings;
    if (parsed.skipped > 0) {
      warnings = std::to_string(parsed.skipped) + " malformed row(s) skipped, line";
      for (std::size_t i = 0; i < parsed.skipped_lines.size(); ++i)
        warnings += (i ? ", " : " ") + std::to_string(parsed.skipped_lines[i]);
      if (parsed.skipped > parsed.skipped_lines.size()) warnings += ", ...";
    }
    *out = new cvtt_log{std::move(parsed.log), std::move(warnings)};
  });
}

cvtt_status cvtt_synth_generate(const cvtt_synth_spec* spec, cvtt_log** out) {
  return guarded([&] {
    require(spec && out, "cvtt_synth_generate: null argument");
    *out = nullptr;
    cvtt::app::SyntheticSpec s;
    s.n_users = spec->n_users;
    s.n_items = spec->n_items;
    s.n_periods = spec->n_periods;
    s.interactions_per_period = spec->interactions_per_period;
    s.zipf_exponent = spec->zipf_exponent;
    if (spec->shift_period > 0) s.shift_period = spec->shift_period;
    s.seed = spec->seed;
    *out = new cvtt_log{cvtt::generate(s.scenario()), {}};
  });
}

void cvtt_log_free(cvtt_log* log) { delete log; }

const char* cvtt_log_warnings(const cvtt_log* log) { return log ? log->warnings.c_str() : ""; }

size_t cvtt_log_size(const cvtt_log* log) { return log ? log->log.size() : 0; }
size_t cvtt_log_n_users(const cvtt_log* log) { return log ? log->log.n_users() : 0; }
size_t cvtt_log_n_items(const cvtt_log* log) { return log ? log->log.n_items() : 0; }

cvtt_status cvtt_log_to_csv(const cvtt_log* log, char** out) {
  return guarded([&] {
    require(log && out, "cvtt_log_to_csv: null argument");
    *out = dup_string(cvtt::format_interactions(log->log));
  });
}

cvtt_status cvtt_log_write(const cvtt_log* log, const char* path) {
  return guarded([&] {
    require(log && path, "cvtt_log_write: null argument");
    cvtt::write_interactions(log->log, path);
  });
}

cvtt_status cvtt_log_stats_csv(const cvtt_log* log, const char* granularity, char** out) {
  return guarded([&] {
    require(log && out, "cvtt_log_stats_csv: null argument");
    const auto g = cvtt::Granularity::parse(granularity ? granularity : "month");
    *out = dup_string(cvtt::app::stats_csv(log->log, g));
  });
}

void cvtt_string_free(char* s) { std::free(s); }

cvtt_status cvtt_run_config(const char* config_path, const cvtt_run_options* options,
                            char** summary_json) {
  return guarded([&] {
    require(config_path != nullptr, "cvtt_run_config: null config path");
    cvtt::app::RunOverrides o;
    if (options) {
      if (options->output_dir) o.output_dir = options->output_dir;
      if (options->seed >= 0) o.seed = static_cast<std::uint64_t>(options->seed);
      if (options->n_trials >= 0) o.n_trials = static_cast<std::size_t>(options->n_trials);
      if (options->threads > 0) o.threads = static_cast<unsigned>(options->threads);
    }
    const auto spec = cvtt::app::load_run_spec(config_path, o);
    const auto summary = cvtt::app::execute_run(spec);
    if (summary_json) {
      nlohmann::json j{{"output_dir", spec.output_dir},
                       {"report", summary.report_path},
                       {"manifest", summary.manifest_path},
                       {"plot", summary.plot_path},
                       {"folds", summary.n_folds},
                       {"failed_folds", summary.failed_folds},
                       {"fingerprint", summary.fingerprint}};
      *summary_json = dup_string(j.dump(2));
    }
  });
}

cvtt_status cvtt_check_config(const char* config_path, char** resolved_json) {
  return guarded([&] {
    require(config_path && resolved_json, "cvtt_check_config: null argument");
    *resolved_json = dup_string(cvtt::app::resolved_config_json(cvtt::app::load_run_spec(config_path)));
  });
}

cvtt_status cvtt_plot_report(const char* report_path, const char* metric, size_t k,
                             const char* svg_path) {
  return guarded([&] {
    require(report_path && metric && svg_path, "cvtt_plot_report: null argument");
    require(k > 0, "cvtt_plot_report: k must be positive");
    cvtt::parse_metric(metric);
    cvtt::app::plot_report(report_path, metric, k, svg_path);
  });
}

}  // extern "C"
