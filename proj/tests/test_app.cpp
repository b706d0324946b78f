#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include "cvtt/app.hpp"
#include "cvtt/error.hpp"

using namespace cvtt;
using namespace cvtt::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("cvtt_app_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kMinimal = R"({
  "dataset": {"label": "toy", "synthetic": {"n_users": 30, "n_items": 20, "n_periods": 6, "seed": 3}},
  "filter_activity": false,
  "models": ["popularity"],
  "strategies": ["expand"],
  "seed": 1
})";

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::string expect_usage_error(const std::string& json) {
  try {
    parse_run_spec(json);
  } catch (const UsageError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no UsageError for " << json;
  return "";
}

}  // namespace

TEST(Config, MinimalDefaults) {
  auto spec = parse_run_spec(kMinimal, "/base");
  EXPECT_EQ(spec.dataset.label, "toy");
  ASSERT_TRUE(spec.dataset.synthetic.has_value());
  EXPECT_EQ(spec.dataset.synthetic->n_periods, 6u);
  EXPECT_EQ(spec.config.n_trials, 25u);
  EXPECT_EQ(spec.config.ks, std::vector<std::size_t>{10});
  EXPECT_EQ(spec.output_dir, "/base/cvtt-out");
}

TEST(Config, UnknownKeysAndValuesNameTheKey) {
  EXPECT_NE(expect_usage_error(R"({"dataset":{"path":"x"},"modles":["slim"]})").find("modles"),
            std::string::npos);
  EXPECT_NE(expect_usage_error(R"({"dataset":{"path":"x"},"models":["bpr"]})").find("models"),
            std::string::npos);
  EXPECT_NE(expect_usage_error(R"({"dataset":{"path":"x","colums":{}}})").find("dataset.colums"),
            std::string::npos);
  EXPECT_NE(expect_usage_error(R"({"dataset":{"path":"x"},"n_trials":-1})").find("n_trials"),
            std::string::npos);
  expect_usage_error(R"({"dataset":{"path":"x"},"models":["multivae"]})");
  expect_usage_error(R"({"dataset":{}})");
  expect_usage_error("{not json");
  expect_usage_error(R"({"dataset":{"path":"x"},"plot":{"metric":"recall"}})");
}

TEST(Config, ResolvedEchoRoundTrips) {
  auto spec = parse_run_spec(kMinimal, "/base");
  auto again = parse_run_spec(resolved_config_json(spec), "/elsewhere");
  EXPECT_EQ(again.config.fingerprint(), spec.config.fingerprint());
  EXPECT_EQ(again.output_dir, spec.output_dir);
  EXPECT_EQ(resolved_config_json(again), resolved_config_json(spec));
}

TEST(Config, FileDatasetSchema) {
  auto spec = parse_run_spec(
      R"({"dataset":{"path":"data/x.tsv","delimiter":"tab","header":false,
           "columns":{"user":1,"item":0,"timestamp":"2"},"timestamp_format":"iso8601"}})",
      "/cfg");
  EXPECT_EQ(*spec.dataset.path, "/cfg/data/x.tsv");
  EXPECT_EQ(spec.dataset.schema.delimiter, '\t');
  EXPECT_EQ(spec.dataset.schema.user.index, 1);
  EXPECT_EQ(spec.dataset.schema.timestamp.index, 2);
  EXPECT_EQ(spec.dataset.schema.timestamp_format, TimestampFormat::iso8601);
}

TEST(Run, MinimalConfigWritesArtifacts) {
  auto dir = scratch("minimal");
  auto spec = parse_run_spec(kMinimal, dir.string());
  auto summary = execute_run(spec);
  const auto report = read_file(summary.report_path);
  EXPECT_EQ(count(report, "\n"), 1u + (6 - 2));
  EXPECT_TRUE(fs::exists(dir / "cvtt-out" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "cvtt-out" / "comparison.csv"));
  EXPECT_TRUE(fs::exists(dir / "cvtt-out" / "trials" / "popularity__expand__fold0.csv"));
  EXPECT_TRUE(fs::exists(summary.plot_path));
  const auto manifest = read_file(summary.manifest_path);
  EXPECT_NE(manifest.find(summary.fingerprint), std::string::npos);
  EXPECT_NE(manifest.find(kVersion), std::string::npos);

  auto second = execute_run(spec);
  EXPECT_EQ(read_file(second.report_path), report);
}

TEST(Stats, BeforeAfterRowsAgreeWhenNothingIsFiltered) {
  SyntheticSpec s;
  s.n_users = 5;
  s.n_items = 3;
  s.n_periods = 2;
  s.interactions_per_period = 40;
  s.zipf_exponent = 0.0;
  const auto csv = stats_csv(generate(s.scenario()), Granularity::month());
  std::vector<std::string> lines;
  std::stringstream in(csv);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].rfind("stage,", 0), 0u);
  EXPECT_EQ(lines[1].substr(lines[1].find(',')), lines[2].substr(lines[2].find(',')));
}

TEST(Stats, FilterEmptyingDataIsDataError) {
  auto log = parse_interactions_text("a,x,1577836800\nb,y,1580515200\n", Schema{}).log;
  EXPECT_THROW(stats_csv(log, Granularity::month()), DataError);
}

namespace {

ReportRow row(std::string model, std::string strategy, std::size_t fold, double value) {
  return {"d", std::move(model), std::move(strategy), fold, static_cast<std::int64_t>(fold + 2),
          "ndcg", 10, value};
}

std::vector<std::string> polylines(const std::string& svg) {
  std::vector<std::string> out;
  std::regex re("<polyline[^>]*points=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back((*it)[1]);
  return out;
}

}  // namespace

TEST(Plot, ConstantSeriesIsHorizontal) {
  auto svg = render_svg({row("pop", "expand", 0, 0.4), row("pop", "expand", 1, 0.4),
                         row("pop", "expand", 2, 0.4)},
                        "ndcg", 10);
  auto lines = polylines(svg);
  ASSERT_EQ(lines.size(), 1u);
  std::regex point("[0-9.]+,([0-9.]+)");
  std::set<std::string> ys;
  for (auto it = std::sregex_iterator(lines[0].begin(), lines[0].end(), point);
       it != std::sregex_iterator(); ++it)
    ys.insert((*it)[1]);
  EXPECT_EQ(ys.size(), 1u);
}

TEST(Plot, TwoSeriesTwoLegendEntries) {
  auto svg = render_svg({row("pop", "expand", 0, 0.4), row("pop", "window:1", 0, 0.5),
                         row("pop", "expand", 1, 0.3), row("pop", "window:1", 1, 0.6)},
                        "ndcg", 10);
  EXPECT_EQ(polylines(svg).size(), 2u);
  EXPECT_EQ(count(svg, "class=\"legend\""), 2u);
  EXPECT_NE(svg.find("pop / window:1"), std::string::npos);
}

TEST(Plot, FixedUnitRangeAndDeterminism) {
  std::vector<ReportRow> rows{row("pop", "expand", 0, 0.0), row("pop", "expand", 1, 1.0)};
  auto a = render_svg(rows, "ndcg", 10);
  EXPECT_EQ(a, render_svg(rows, "ndcg", 10));
  // y=1 maps to the top margin and y=0 to the bottom of the plot area.
  EXPECT_EQ(polylines(a)[0], "60.00,350.00 440.00,30.00");
}

TEST(Plot, Errors) {
  EXPECT_THROW(render_svg({}, "ndcg", 10), DataError);
  EXPECT_THROW(render_svg({row("pop", "expand", 0, 0.4)}, "recall", 10), DataError);
  EXPECT_THROW(render_svg({row("pop", "expand", 0, 0.4)}, "ndcg", 5), DataError);
}

TEST(Plot, ParsesReportCsv) {
  const std::string csv =
      "dataset,model,strategy,fold,test_period,metric,k,value,n_eval,n_cold,best_params\n"
      "\"a,b\",slim,window:2,3,5,ndcg,10,0.1250000000,9,1,{alpha:0.5;top_k:7}\n";
  auto rows = parse_report_csv(csv);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].dataset, "a,b");
  EXPECT_EQ(rows[0].fold, 3u);
  EXPECT_EQ(rows[0].value, 0.125);
  EXPECT_THROW(parse_report_csv("nonsense\n"), DataError);
}
