#include "cvtt/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cvtt/error.hpp"

namespace cvtt {

namespace {

constexpr std::size_t kMaxReportedLines = 20;

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                  : pos - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '"')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '"')) field.remove_suffix(1);
    out.push_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return value;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Civil-calendar conversions (proleptic Gregorian).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2);
}

std::size_t resolve_column(const ColumnRef& ref, const std::vector<std::string_view>& header,
                           const char* role) {
  if (ref.by_index()) return static_cast<std::size_t>(ref.index);
  if (header.empty())
    throw UsageError(fmt::format("column '{}' for {} is referenced by name but the file has no "
                                 "header",
                                 ref.name, role));
  const auto it = std::find(header.begin(), header.end(), ref.name);
  if (it == header.end())
    throw UsageError(fmt::format("column '{}' for {} not found in header", ref.name, role));
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

std::uint32_t Vocabulary::intern(std::string_view raw) {
  const auto [it, inserted] =
      index_.try_emplace(std::string(raw), static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.emplace_back(raw);
  return it->second;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view raw) const {
  const auto it = index_.find(std::string(raw));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ColumnRef ColumnRef::parse(std::string_view text) {
  if (auto idx = parse_number<int>(text); idx && *idx >= 0) return {"", *idx};
  if (text.empty()) throw UsageError("empty column reference");
  return {std::string(text), -1};
}

std::optional<Timestamp> parse_iso8601(std::string_view s) {
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const auto y = parse_number<int>(s.substr(0, 4));
  const auto mo = parse_number<unsigned>(s.substr(5, 2));
  const auto d = parse_number<unsigned>(s.substr(8, 2));
  if (!y || !mo || !d || *mo < 1 || *mo > 12 || *d < 1 || *d > 31) return std::nullopt;
  std::int64_t secs = 0;
  auto rest = s.substr(10);
  if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
  if (!rest.empty()) {
    if (rest.size() != 9 || (rest[0] != 'T' && rest[0] != ' ') || rest[3] != ':' || rest[6] != ':')
      return std::nullopt;
    const auto hh = parse_number<int>(rest.substr(1, 2));
    const auto mm = parse_number<int>(rest.substr(4, 2));
    const auto ss = parse_number<int>(rest.substr(7, 2));
    if (!hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 60) return std::nullopt;
    secs = *hh * 3600 + *mm * 60 + *ss;
  }
  return days_from_civil(*y, *mo, *d) * 86400 + secs;
}

ParseResult parse_interactions_text(std::string_view text, const Schema& schema) {
  const bool named = !schema.user.by_index() || !schema.item.by_index() ||
                     !schema.timestamp.by_index() || (schema.weight && !schema.weight->by_index());
  if (named && !schema.has_header)
    throw UsageError("schema references columns by name but has_header is false");

  ParseResult result;
  auto users = std::make_shared<Vocabulary>();
  auto items = std::make_shared<Vocabulary>();

  std::vector<std::string_view> header;
  std::size_t user_col = 0, item_col = 0, ts_col = 0;
  std::optional<std::size_t> weight_col;
  bool resolved = false;

  auto resolve = [&] {
    user_col = resolve_column(schema.user, header, "user");
    item_col = resolve_column(schema.item, header, "item");
    ts_col = resolve_column(schema.timestamp, header, "timestamp");
    if (schema.weight) weight_col = resolve_column(*schema.weight, header, "weight");
    resolved = true;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (schema.has_header && header.empty() && !resolved) {
      header = split_fields(line, schema.delimiter);
      resolve();
      continue;
    }
    if (!resolved) resolve();

    const auto fields = split_fields(line, schema.delimiter);
    auto skip = [&] {
      ++result.skipped;
      if (result.skipped_lines.size() < kMaxReportedLines) result.skipped_lines.push_back(line_no);
    };
    const std::size_t needed =
        std::max({user_col, item_col, ts_col, weight_col.value_or(0)}) + 1;
    if (fields.size() < needed || fields[user_col].empty() || fields[item_col].empty()) {
      skip();
      continue;
    }
    std::optional<Timestamp> ts = schema.timestamp_format == TimestampFormat::unix_seconds
                                      ? parse_number<Timestamp>(fields[ts_col])
                                      : parse_iso8601(fields[ts_col]);
    if (!ts) {
      skip();
      continue;
    }
    double weight = 1.0;
    if (weight_col) {
      const auto w = parse_number<double>(fields[*weight_col]);
      if (!w || !std::isfinite(*w) || *w < 0.0) {
        skip();
        continue;
      }
      weight = *w;
    }
    result.log.records.push_back(
        {users->intern(fields[user_col]), items->intern(fields[item_col]), *ts, weight});
  }

  if (result.log.records.empty())
    throw DataError(fmt::format("no valid interactions parsed ({} rows skipped)", result.skipped));

  std::stable_sort(result.log.records.begin(), result.log.records.end(),
                   [](const Interaction& a, const Interaction& b) { return a.timestamp < b.timestamp; });
  result.log.users = std::move(users);
  result.log.items = std::move(items);
  return result;
}

ParseResult parse_interactions(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open interaction file '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_interactions_text(buf.str(), schema);
}

std::string format_interactions(const InteractionLog& log) {
  std::string out = "user,item,timestamp,weight\n";
  for (const auto& r : log.records)
    out += fmt::format("{},{},{},{}\n", log.users->name(r.user), log.items->name(r.item),
                       r.timestamp, r.weight);
  return out;
}

void write_interactions(const InteractionLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path));
  out << format_interactions(log);
}

// ---------------------------------------------------------------- periods

Granularity Granularity::fixed(std::int64_t seconds) {
  if (seconds <= 0) throw UsageError("fixed period length must be positive");
  return {Unit::fixed_seconds, seconds};
}

Granularity Granularity::parse(std::string_view text) {
  if (text == "month") return month();
  if (text == "day") return fixed(86400);
  if (text == "week") return fixed(7 * 86400);
  if (text.starts_with("seconds:")) {
    if (auto n = parse_number<std::int64_t>(text.substr(8)); n && *n > 0) return fixed(*n);
  }
  throw UsageError(fmt::format("unknown period granularity '{}'", text));
}

std::string Granularity::to_string() const {
  return unit == Unit::calendar_month ? "month" : fmt::format("seconds:{}", seconds);
}

std::int64_t month_index(Timestamp t) {
  std::int64_t y;
  unsigned m;
  civil_from_days(floor_div(t, 86400), y, m);
  return (y - 1970) * 12 + static_cast<std::int64_t>(m) - 1;
}

std::int64_t PeriodGrid::period_of(Timestamp t) const {
  if (granularity_.unit == Granularity::Unit::calendar_month) return month_index(t) - origin_;
  return floor_div(t - origin_, granularity_.seconds);
}

Timestamp PeriodGrid::period_start(std::int64_t p) const {
  if (granularity_.unit == Granularity::Unit::calendar_month) {
    const std::int64_t months = origin_ + p;
    const std::int64_t y = 1970 + floor_div(months, 12);
    const auto m = static_cast<unsigned>(months - floor_div(months, 12) * 12 + 1);
    return days_from_civil(y, m, 1) * 86400;
  }
  return origin_ + p * granularity_.seconds;
}

PeriodGrid assign_periods(const InteractionLog& log, Granularity granularity) {
  if (log.empty()) throw DataError("cannot assign periods to an empty log");
  const auto [lo, hi] = std::minmax_element(
      log.records.begin(), log.records.end(),
      [](const Interaction& a, const Interaction& b) { return a.timestamp < b.timestamp; });
  const std::int64_t origin = granularity.unit == Granularity::Unit::calendar_month
                                  ? month_index(lo->timestamp)
                                  : lo->timestamp;
  PeriodGrid probe(granularity, origin, 0);
  const auto last = probe.period_of(hi->timestamp);
  return PeriodGrid(granularity, origin, static_cast<std::size_t>(last + 1));
}

// ---------------------------------------------------------------- filtering

namespace {

// Number of distinct grid periods each entity touches among alive records.
// Relies on records being sorted by time, so periods are nondecreasing.
std::vector<std::size_t> distinct_periods(const InteractionLog& log,
                                          const std::vector<std::int64_t>& period,
                                          const std::vector<char>& alive, bool by_user,
                                          std::size_t n_entities) {
  std::vector<std::size_t> count(n_entities, 0);
  std::vector<std::int64_t> last(n_entities, -1);
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    if (!alive[k]) continue;
    const auto id = by_user ? log.records[k].user : log.records[k].item;
    if (period[k] != last[id]) {
      last[id] = period[k];
      ++count[id];
    }
  }
  return count;
}

}  // namespace

FilterOutcome filter_per_period_activity(const InteractionLog& log, const PeriodGrid& grid) {
  const std::size_t n = log.records.size();
  const auto n_periods = grid.n_periods();
  std::vector<std::int64_t> period(n);
  std::vector<char> alive(n, 1);
  for (std::size_t k = 0; k < n; ++k) {
    period[k] = grid.period_of(log.records[k].timestamp);
    if (period[k] < 0 || period[k] >= static_cast<std::int64_t>(n_periods)) alive[k] = 0;
  }

  auto pass = [&](bool by_user) {
    const std::size_t n_entities = by_user ? log.n_users() : log.n_items();
    const auto count = distinct_periods(log, period, alive, by_user, n_entities);
    bool changed = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k]) continue;
      const auto id = by_user ? log.records[k].user : log.records[k].item;
      if (count[id] < n_periods) {
        alive[k] = 0;
        changed = true;
      }
    }
    return changed;
  };

  std::size_t iteration = 0;
  bool converged = false;
  while (iteration < kFilterIterationCap) {
    ++iteration;
    const bool users_changed = pass(true);
    const bool items_changed = pass(false);
    if (std::none_of(alive.begin(), alive.end(), [](char a) { return a != 0; }))
      throw DataError(
          fmt::format("per-period activity filter emptied the dataset at iteration {}", iteration));
    if (!users_changed && !items_changed) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ExecutionError(fmt::format(
        "per-period activity filter did not reach a fixpoint within {} iterations",
        kFilterIterationCap));

  // Re-densify in the original dense-id order.
  std::vector<std::int64_t> user_map(log.n_users(), -1), item_map(log.n_items(), -1);
  for (std::size_t k = 0; k < n; ++k) {
    if (!alive[k]) continue;
    user_map[log.records[k].user] = 0;
    item_map[log.records[k].item] = 0;
  }
  auto users = std::make_shared<Vocabulary>();
  auto items = std::make_shared<Vocabulary>();
  for (std::size_t u = 0; u < user_map.size(); ++u)
    if (user_map[u] == 0) user_map[u] = users->intern(log.users->name(static_cast<UserId>(u)));
  for (std::size_t i = 0; i < item_map.size(); ++i)
    if (item_map[i] == 0) item_map[i] = items->intern(log.items->name(static_cast<ItemId>(i)));

  FilterOutcome out;
  out.iterations = iteration;
  out.log.records.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!alive[k]) continue;
    auto r = log.records[k];
    r.user = static_cast<UserId>(user_map[r.user]);
    r.item = static_cast<ItemId>(item_map[r.item]);
    out.log.records.push_back(r);
  }
  out.log.users = std::move(users);
  out.log.items = std::move(items);
  return out;
}

// ---------------------------------------------------------------- statistics

DatasetStats dataset_stats(const InteractionLog& log, const PeriodGrid& grid) {
  DatasetStats s;
  std::vector<char> seen_user(log.n_users(), 0), seen_item(log.n_items(), 0);
  for (const auto& r : log.records) {
    seen_user[r.user] = 1;
    seen_item[r.item] = 1;
  }
  s.n_users = static_cast<std::size_t>(std::count(seen_user.begin(), seen_user.end(), 1));
  s.n_items = static_cast<std::size_t>(std::count(seen_item.begin(), seen_item.end(), 1));
  s.n_interactions = log.size();
  const auto total = static_cast<double>(s.n_interactions);
  const auto periods = static_cast<double>(grid.n_periods());
  if (s.n_users > 0) s.per_user = total / static_cast<double>(s.n_users);
  if (s.n_items > 0) s.per_item = total / static_cast<double>(s.n_items);
  if (periods > 0) {
    s.per_user_per_period = s.per_user / periods;
    s.per_item_per_period = s.per_item / periods;
  }
  return s;
}

std::string stats_csv_header() {
  return "stage,users,items,interactions,interactions_per_user,"
         "interactions_per_user_per_period,interactions_per_item,"
         "interactions_per_item_per_period";
}

std::string stats_csv_row(std::string_view label, const DatasetStats& s) {
  return fmt::format("{},{},{},{},{:.4f},{:.4f},{:.4f},{:.4f}", label, s.n_users, s.n_items,
                     s.n_interactions, s.per_user, s.per_user_per_period, s.per_item,
                     s.per_item_per_period);
}

// ---------------------------------------------------------------- matrices

Aggregation parse_aggregation(std::string_view text) {
  if (text == "count") return Aggregation::count;
  if (text == "sum_weight") return Aggregation::sum_weight;
  if (text == "binary") return Aggregation::binary;
  throw UsageError(fmt::format("unknown aggregation '{}'", text));
}

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::count: return "count";
    case Aggregation::sum_weight: return "sum_weight";
    case Aggregation::binary: return "binary";
  }
  return "?";
}

namespace {

SparseMatrix assemble_matrix(const InteractionLog& log, Aggregation aggregation,
                             const std::vector<char>* keep) {
  std::vector<Triplet> triplets;
  triplets.reserve(log.size());
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    if (keep && !(*keep)[k]) continue;
    const auto& r = log.records[k];
    const double v = aggregation == Aggregation::sum_weight ? r.weight : 1.0;
    triplets.push_back({r.user, r.item, v});
  }
  auto m = SparseMatrix::from_triplets(log.n_users(), log.n_items(), std::move(triplets));
  return aggregation == Aggregation::binary ? m.binarized() : m;
}

}  // namespace

SparseMatrix build_matrix(const InteractionLog& log, const std::vector<std::int64_t>& periods,
                          const PeriodGrid& grid, Aggregation aggregation) {
  if (periods.empty()) throw UsageError("build_matrix needs a nonempty period set");
  std::vector<char> selected(grid.n_periods(), 0);
  for (auto p : periods) {
    if (p < 0 || p >= static_cast<std::int64_t>(grid.n_periods()))
      throw UsageError(fmt::format("period {} outside grid [0, {})", p, grid.n_periods()));
    selected[static_cast<std::size_t>(p)] = 1;
  }
  std::vector<char> keep(log.size(), 0);
  for (std::size_t k = 0; k < log.size(); ++k) {
    const auto p = grid.period_of(log.records[k].timestamp);
    keep[k] = p >= 0 && p < static_cast<std::int64_t>(grid.n_periods()) &&
              selected[static_cast<std::size_t>(p)];
  }
  return assemble_matrix(log, aggregation, &keep);
}

SparseMatrix build_matrix(const InteractionLog& log, Aggregation aggregation) {
  return assemble_matrix(log, aggregation, nullptr);
}

}  // namespace cvtt
