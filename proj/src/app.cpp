#include "cvtt/app.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "cvtt/error.hpp"

namespace cvtt::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExecutionError(fmt::format("cannot write '{}'", path));
  out << contents;
  if (!out) throw ExecutionError(fmt::format("failed writing '{}'", path));
}

DriftScenario SyntheticSpec::scenario() const {
  return make_zipf_scenario(n_users, n_items, n_periods, interactions_per_period, zipf_exponent,
                            shift_period, seed);
}

// ---------------------------------------------------------------- config

namespace {

// Typed accessors that reject unknown keys and report the dotted path.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("must be an object");
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : node_.items())
      if (!allowed.count(key)) throw UsageError(fmt::format("unknown config key '{}'", at(key)));
  }
  bool has(const char* key) const { return node_.contains(key) && !node_[key].is_null(); }
  const json& raw(const char* key) const { return node_.at(key); }

  std::string text(const char* key, std::string fallback) const {
    if (!has(key)) return fallback;
    if (!node_[key].is_string()) throw UsageError(fmt::format("'{}' must be a string", at(key)));
    return node_[key].get<std::string>();
  }
  std::uint64_t count(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    if (!node_[key].is_number_unsigned())
      throw UsageError(fmt::format("'{}' must be a nonnegative integer", at(key)));
    return node_[key].get<std::uint64_t>();
  }
  double real(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    if (!node_[key].is_number()) throw UsageError(fmt::format("'{}' must be a number", at(key)));
    return node_[key].get<double>();
  }
  bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!node_[key].is_boolean()) throw UsageError(fmt::format("'{}' must be a boolean", at(key)));
    return node_[key].get<bool>();
  }
  std::vector<std::string> texts(const char* key) const {
    if (!node_[key].is_array()) throw UsageError(fmt::format("'{}' must be a list", at(key)));
    std::vector<std::string> out;
    for (const auto& v : node_[key]) {
      if (!v.is_string()) throw UsageError(fmt::format("'{}' entries must be strings", at(key)));
      out.push_back(v.get<std::string>());
    }
    return out;
  }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  [[noreturn]] void fail(const char* what) const {
    throw UsageError(fmt::format("config section '{}' {}", path_.empty() ? "<root>" : path_, what));
  }

  const json& node_;
  std::string path_;
};

Schema parse_schema(const Section& s) {
  Schema schema;
  schema.has_header = s.flag("header", true);
  const auto delim = s.text("delimiter", ",");
  if (delim == "\\t" || delim == "tab")
    schema.delimiter = '\t';
  else if (delim.size() == 1)
    schema.delimiter = delim[0];
  else
    throw UsageError(fmt::format("'{}' must be a single character or \"tab\"", s.at("delimiter")));
  const auto fmt_name = s.text("timestamp_format", "unix");
  if (fmt_name == "unix")
    schema.timestamp_format = TimestampFormat::unix_seconds;
  else if (fmt_name == "iso8601")
    schema.timestamp_format = TimestampFormat::iso8601;
  else
    throw UsageError(fmt::format("'{}' must be \"unix\" or \"iso8601\"", s.at("timestamp_format")));

  if (schema.has_header) {
    schema.user = ColumnRef::parse("user");
    schema.item = ColumnRef::parse("item");
    schema.timestamp = ColumnRef::parse("timestamp");
  }
  if (s.has("columns")) {
    const Section cols(s.raw("columns"), s.at("columns"));
    cols.allow_only({"user", "item", "timestamp", "weight"});
    auto column = [&](const char* key, ColumnRef fallback) {
      if (!cols.has(key)) return fallback;
      const auto& v = cols.raw(key);
      if (v.is_number_unsigned()) return ColumnRef{"", static_cast<int>(v.get<std::uint64_t>())};
      return ColumnRef::parse(cols.text(key, ""));
    };
    schema.user = column("user", schema.user);
    schema.item = column("item", schema.item);
    schema.timestamp = column("timestamp", schema.timestamp);
    if (cols.has("weight")) schema.weight = column("weight", {});
  }
  return schema;
}

std::string schema_column(const ColumnRef& c) {
  return c.by_index() ? std::to_string(c.index) : c.name;
}

}  // namespace

RunSpec parse_run_spec(const std::string& json_text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  const Section top(root, "");
  top.allow_only({"dataset", "periods", "filter_activity", "aggregation", "strategies", "models",
                  "n_trials", "seed", "metrics", "ks", "selection_k", "min_train_periods",
                  "threads", "output_dir", "plot"});

  RunSpec spec;
  if (!top.has("dataset")) throw UsageError("config key 'dataset' is required");
  const Section ds(top.raw("dataset"), "dataset");
  ds.allow_only({"label", "path", "header", "delimiter", "timestamp_format", "columns",
                 "synthetic"});
  spec.dataset.label = ds.text("label", "dataset");
  if (ds.has("path") == ds.has("synthetic"))
    throw UsageError("config 'dataset' needs exactly one of 'path' or 'synthetic'");
  if (ds.has("path")) {
    fs::path p = ds.text("path", "");
    if (p.is_relative()) p = fs::path(base_dir) / p;
    spec.dataset.path = p.lexically_normal().string();
    spec.dataset.schema = parse_schema(ds);
  } else {
    const Section syn(ds.raw("synthetic"), "dataset.synthetic");
    syn.allow_only({"n_users", "n_items", "n_periods", "interactions_per_period", "zipf_exponent",
                    "shift_period", "seed"});
    SyntheticSpec s;
    s.n_users = syn.count("n_users", s.n_users);
    s.n_items = syn.count("n_items", s.n_items);
    s.n_periods = syn.count("n_periods", s.n_periods);
    s.interactions_per_period = syn.count("interactions_per_period", s.interactions_per_period);
    s.zipf_exponent = syn.real("zipf_exponent", s.zipf_exponent);
    if (syn.has("shift_period")) s.shift_period = syn.count("shift_period", 0);
    s.seed = syn.count("seed", s.seed);
    s.scenario().validate();
    spec.dataset.synthetic = s;
  }

  auto& c = spec.config;
  c.dataset_label = spec.dataset.label;
  c.granularity = Granularity::parse(top.text("periods", "month"));
  c.filter_activity = top.flag("filter_activity", true);
  c.aggregation = parse_aggregation(top.text("aggregation", "count"));
  if (top.has("strategies")) {
    c.strategies.clear();
    for (const auto& s : top.texts("strategies")) c.strategies.push_back(DataStrategy::parse(s));
  }
  if (top.has("models")) {
    c.models.clear();
    for (const auto& m : top.texts("models")) {
      try {
        c.models.push_back(parse_model_kind(m));
      } catch (const UsageError& e) {
        throw UsageError(fmt::format("config key 'models': {}", e.what()));
      }
    }
  }
  if (c.strategies.empty() || c.models.empty())
    throw UsageError("config needs at least one strategy and one model");
  c.n_trials = top.count("n_trials", c.n_trials);
  if (c.n_trials < 1) throw UsageError("config key 'n_trials' must be at least 1");
  c.seed = top.count("seed", c.seed);
  if (top.has("metrics")) {
    c.metrics.clear();
    for (const auto& m : top.texts("metrics")) c.metrics.push_back(parse_metric(m));
  }
  if (top.has("ks")) {
    if (!top.raw("ks").is_array()) throw UsageError("config key 'ks' must be a list");
    c.ks.clear();
    for (const auto& v : top.raw("ks")) {
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1)
        throw UsageError("config key 'ks' entries must be positive integers");
      c.ks.push_back(v.get<std::size_t>());
    }
  }
  if (c.metrics.empty() || c.ks.empty()) throw UsageError("config needs metrics and ks");
  c.selection_k = top.count("selection_k", c.selection_k);
  if (c.selection_k < 1) throw UsageError("config key 'selection_k' must be at least 1");
  c.min_train_periods = top.count("min_train_periods", c.min_train_periods);
  if (c.min_train_periods < 1) throw UsageError("config key 'min_train_periods' must be at least 1");
  c.threads = static_cast<unsigned>(top.count("threads", 1));
  if (c.threads < 1) throw UsageError("config key 'threads' must be at least 1");

  fs::path out = top.text("output_dir", spec.output_dir);
  if (out.is_relative()) out = fs::path(base_dir) / out;
  spec.output_dir = out.lexically_normal().string();

  spec.plot_metric = c.metrics.front();
  spec.plot_k = c.ks.front();
  if (top.has("plot")) {
    const Section plot(top.raw("plot"), "plot");
    plot.allow_only({"metric", "k"});
    spec.plot_metric = parse_metric(plot.text("metric", to_string(spec.plot_metric)));
    spec.plot_k = plot.count("k", spec.plot_k);
  }
  if (std::find(c.metrics.begin(), c.metrics.end(), spec.plot_metric) == c.metrics.end() ||
      std::find(c.ks.begin(), c.ks.end(), spec.plot_k) == c.ks.end())
    throw UsageError("config key 'plot' must name a configured metric and k");
  return spec;
}

RunSpec load_run_spec(const std::string& path, const RunOverrides& overrides) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError&) {
    throw UsageError(fmt::format("cannot read config '{}'", path));
  }
  auto base = fs::path(path).parent_path().string();
  if (base.empty()) base = ".";
  auto spec = parse_run_spec(text, base);
  if (overrides.output_dir) spec.output_dir = *overrides.output_dir;
  if (overrides.seed) spec.config.seed = *overrides.seed;
  if (overrides.n_trials) {
    if (*overrides.n_trials < 1) throw UsageError("n_trials must be at least 1");
    spec.config.n_trials = *overrides.n_trials;
  }
  if (overrides.threads) {
    if (*overrides.threads < 1) throw UsageError("threads must be at least 1");
    spec.config.threads = *overrides.threads;
  }
  return spec;
}

std::string resolved_config_json(const RunSpec& spec) {
  const auto& c = spec.config;
  json j;
  json ds;
  ds["label"] = spec.dataset.label;
  if (spec.dataset.path) {
    const auto& s = spec.dataset.schema;
    ds["path"] = *spec.dataset.path;
    ds["header"] = s.has_header;
    ds["delimiter"] = s.delimiter == '\t' ? std::string("tab") : std::string(1, s.delimiter);
    ds["timestamp_format"] = s.timestamp_format == TimestampFormat::unix_seconds ? "unix" : "iso8601";
    ds["columns"] = {{"user", schema_column(s.user)},
                     {"item", schema_column(s.item)},
                     {"timestamp", schema_column(s.timestamp)}};
    if (s.weight) ds["columns"]["weight"] = schema_column(*s.weight);
  } else {
    const auto& s = *spec.dataset.synthetic;
    ds["synthetic"] = {{"n_users", s.n_users},
                       {"n_items", s.n_items},
                       {"n_periods", s.n_periods},
                       {"interactions_per_period", s.interactions_per_period},
                       {"zipf_exponent", s.zipf_exponent},
                       {"seed", s.seed}};
    if (s.shift_period) ds["synthetic"]["shift_period"] = *s.shift_period;
  }
  j["dataset"] = ds;
  j["periods"] = c.granularity.to_string();
  j["filter_activity"] = c.filter_activity;
  j["aggregation"] = to_string(c.aggregation);
  j["strategies"] = json::array();
  for (const auto& s : c.strategies) j["strategies"].push_back(s.name());
  j["models"] = json::array();
  for (auto m : c.models) j["models"].push_back(to_string(m));
  j["n_trials"] = c.n_trials;
  j["seed"] = c.seed;
  j["metrics"] = json::array();
  for (auto m : c.metrics) j["metrics"].push_back(to_string(m));
  j["ks"] = c.ks;
  j["selection_k"] = c.selection_k;
  j["min_train_periods"] = c.min_train_periods;
  j["threads"] = c.threads;
  j["output_dir"] = spec.output_dir;
  j["plot"] = {{"metric", to_string(spec.plot_metric)}, {"k", spec.plot_k}};
  return j.dump(2);
}

// ---------------------------------------------------------------- run

InteractionLog load_dataset(const DatasetSpec& dataset, std::vector<std::string>* warnings) {
  if (dataset.synthetic) return generate(dataset.synthetic->scenario());
  if (!dataset.path) throw UsageError("dataset has neither a path nor a synthetic spec");
  auto parsed = parse_interactions(*dataset.path, dataset.schema);
  if (parsed.skipped > 0 && warnings)
    warnings->push_back(fmt::format("skipped {} malformed row(s) in '{}' (lines {})",
                                    parsed.skipped, *dataset.path,
                                    fmt::join(parsed.skipped_lines, ", ")));
  return std::move(parsed.log);
}

namespace {

std::string file_safe(std::string s) {
  for (char& c : s)
    if (c == ':' || c == '/' || c == ' ') c = '-';
  return s;
}

}  // namespace

RunSummary execute_run(const RunSpec& spec) {
  const auto log = load_dataset(spec.dataset);
  const auto report = run_cvtt(log, spec.config);

  const fs::path out = spec.output_dir;
  std::error_code ec;
  fs::create_directories(out / "trials", ec);
  if (ec)
    throw ExecutionError(fmt::format("cannot create output directory '{}': {}", out.string(),
                                     ec.message()));

  RunSummary summary;
  summary.fingerprint = report.fingerprint;
  summary.report_path = (out / "report.csv").string();
  write_file(summary.report_path, report_csv(report));
  const auto comparison = compare_strategies(report, spec.plot_metric, spec.plot_k);
  write_file((out / "comparison.csv").string(), comparison_csv(comparison));
  if (!comparison.deltas.empty())
    write_file((out / "paired_deltas.csv").string(), paired_deltas_csv(comparison));

  json failures = json::array();
  for (const auto& s : report.series)
    for (const auto& f : s.folds) {
      ++summary.n_folds;
      if (f.failed) {
        ++summary.failed_folds;
        failures.push_back({{"model", to_string(s.model)},
                            {"strategy", s.strategy.name()},
                            {"fold", f.fold_index},
                            {"test_period", f.test_period},
                            {"error", f.error}});
        continue;
      }
      write_file((out / "trials" /
                  fmt::format("{}__{}__fold{}.csv", to_string(s.model), file_safe(s.strategy.name()),
                              f.fold_index))
                     .string(),
                 trial_log_csv(f.tuning));
    }

  summary.plot_path =
      (out / fmt::format("report_{}_at_{}.svg", to_string(spec.plot_metric), spec.plot_k)).string();
  const auto rows = parse_report_csv(report_csv(report));
  if (!rows.empty())
    write_file(summary.plot_path, render_svg(rows, to_string(spec.plot_metric), spec.plot_k));
  else
    summary.plot_path.clear();

  json manifest;
  manifest["version"] = kVersion;
  manifest["fingerprint"] = report.fingerprint;
  manifest["config"] = json::parse(resolved_config_json(spec));
  manifest["n_periods"] = report.grid.n_periods();
  manifest["n_interactions_after_filter"] = report.n_interactions;
  manifest["filter_iterations"] = report.filter_iterations;
  manifest["folds_total"] = summary.n_folds;
  manifest["folds_failed"] = failures;
  summary.manifest_path = (out / "manifest.json").string();
  write_file(summary.manifest_path, manifest.dump(2) + "\n");
  return summary;
}

std::string stats_csv(const InteractionLog& log, Granularity granularity) {
  const auto grid = assign_periods(log, granularity);
  const auto before = dataset_stats(log, grid);
  const auto filtered = filter_per_period_activity(log, grid);
  const auto after_grid = assign_periods(filtered.log, granularity);
  const auto after = dataset_stats(filtered.log, after_grid);
  return stats_csv_header() + "\n" + stats_csv_row("before", before) + "\n" +
         stats_csv_row("after", after) + "\n";
}

// ---------------------------------------------------------------- plot

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

template <class T>
T parse_number(const std::string& text, std::size_t line) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw DataError(fmt::format("report line {}: bad number '{}'", line, text));
  return value;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::vector<ReportRow> parse_report_csv(const std::string& text) {
  std::vector<ReportRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (line_no == 1) {
      if (f.size() < 8 || f[0] != "dataset" || f[7] != "value")
        throw DataError("report has an unexpected header");
      continue;
    }
    if (f.size() < 8) throw DataError(fmt::format("report line {}: too few fields", line_no));
    ReportRow r;
    r.dataset = f[0];
    r.model = f[1];
    r.strategy = f[2];
    r.fold = parse_number<std::size_t>(f[3], line_no);
    r.test_period = parse_number<std::int64_t>(f[4], line_no);
    r.metric = f[5];
    r.k = parse_number<std::size_t>(f[6], line_no);
    r.value = parse_number<double>(f[7], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_svg(const std::vector<ReportRow>& rows, const std::string& metric,
                       std::size_t k) {
  if (rows.empty()) throw DataError("report is empty");
  // Series keep their first-appearance order so the legend follows the report.
  std::vector<std::pair<std::string, std::vector<std::pair<std::size_t, double>>>> series;
  std::size_t max_fold = 0;
  for (const auto& r : rows) {
    if (r.metric != metric || r.k != k) continue;
    const auto label = r.model + " / " + r.strategy;
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const auto& s) { return s.first == label; });
    if (it == series.end()) it = series.insert(series.end(), {label, {}});
    it->second.emplace_back(r.fold, r.value);
    max_fold = std::max(max_fold, r.fold);
  }
  if (series.empty()) throw DataError(fmt::format("report has no {}@{} values", metric, k));
  for (auto& s : series) std::sort(s.second.begin(), s.second.end());

  constexpr double width = 640, height = 400, left = 60, right = 200, top = 30, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  auto x_of = [&](std::size_t fold) {
    return max_fold == 0 ? left + plot_w / 2 : left + plot_w * static_cast<double>(fold) / max_fold;
  };
  auto y_of = [&](double v) { return top + plot_h * (1.0 - std::clamp(v, 0.0, 1.0)); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      width, height);
  svg += fmt::format("<text x=\"{:.2f}\" y=\"18\" text-anchor=\"middle\">{}@{}</text>\n",
                     left + plot_w / 2, xml_escape(metric), k);
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0, y = y_of(v);
    svg += fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#dddddd\"/>\n"
        "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.2f}</text>\n",
        left, y, left + plot_w, y, left - 6, y + 4, v);
  }
  for (std::size_t f = 0; f <= max_fold; ++f)
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                       x_of(f), top + plot_h + 18, f);
  svg += fmt::format(
      "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n"
      "<line x1=\"{0:.2f}\" y1=\"{3:.2f}\" x2=\"{0:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n"
      "<text x=\"{4:.2f}\" y=\"{5:.2f}\" text-anchor=\"middle\">test fold</text>\n",
      left, top + plot_h, left + plot_w, top, left + plot_w / 2, height - 10);

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto* color = kPalette[i % std::size(kPalette)];
    std::string points;
    for (const auto& [fold, value] : series[i].second) {
      if (!points.empty()) points += ' ';
      points += fmt::format("{:.2f},{:.2f}", x_of(fold), y_of(value));
    }
    svg += fmt::format(
        "<polyline class=\"series\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" "
        "points=\"{}\"/>\n",
        color, points);
    const double ly = top + 10 + 18.0 * static_cast<double>(i);
    svg += fmt::format(
        "<g class=\"legend\"><line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" "
        "y2=\"{1:.2f}\" stroke=\"{3}\" stroke-width=\"2\"/>"
        "<text x=\"{4:.2f}\" y=\"{5:.2f}\">{6}</text></g>\n",
        left + plot_w + 15, ly, left + plot_w + 35, color, left + plot_w + 40, ly + 4,
        xml_escape(series[i].first));
  }
  svg += "</svg>\n";
  return svg;
}

void plot_report(const std::string& report_path, const std::string& metric, std::size_t k,
                 const std::string& svg_path) {
  const auto rows = parse_report_csv(read_file(report_path));
  write_file(svg_path, render_svg(rows, metric, k));
}

}  // namespace cvtt::app
