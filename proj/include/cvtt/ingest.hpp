#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cvtt/sparse_matrix.hpp"

namespace cvtt {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using Timestamp = std::int64_t;  // unix seconds, UTC

struct Interaction {
  UserId user;
  ItemId item;
  Timestamp timestamp;
  double weight = 1.0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Raw id <-> dense id mapping. Dense ids are assigned in insertion order.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view raw);
  std::optional<std::uint32_t> find(std::string_view raw) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Time-sorted interaction records plus the vocabularies their dense ids
// refer to. Vocabularies are shared (not copied) between a log and the
// parts split from it.
struct InteractionLog {
  std::vector<Interaction> records;
  std::shared_ptr<const Vocabulary> users = std::make_shared<Vocabulary>();
  std::shared_ptr<const Vocabulary> items = std::make_shared<Vocabulary>();

  std::size_t n_users() const noexcept { return users->size(); }
  std::size_t n_items() const noexcept { return items->size(); }
  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  /// Copy of this log's vocabularies with the given records.
  InteractionLog with_records(std::vector<Interaction> recs) const {
    return InteractionLog{std::move(recs), users, items};
  }
};

// ---------------------------------------------------------------- parsing

enum class TimestampFormat { unix_seconds, iso8601 };

/// A column referenced by header name or by zero-based index.
struct ColumnRef {
  std::string name;
  int index = -1;

  static ColumnRef parse(std::string_view text);  // "3" -> index, else name
  bool by_index() const noexcept { return index >= 0; }
};

struct Schema {
  ColumnRef user{"", 0};
  ColumnRef item{"", 1};
  ColumnRef timestamp{"", 2};
  std::optional<ColumnRef> weight;
  char delimiter = ',';
  bool has_header = false;
  TimestampFormat timestamp_format = TimestampFormat::unix_seconds;
};

struct ParseResult {
  InteractionLog log;
  std::size_t skipped = 0;
  std::vector<std::size_t> skipped_lines;  // 1-based, first 20 only
};

ParseResult parse_interactions(const std::string& path, const Schema& schema);
ParseResult parse_interactions_text(std::string_view text, const Schema& schema);

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" and the same with a
/// trailing 'Z'. Interpreted as UTC.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// Writes `user,item,timestamp,weight` with a header, using raw ids.
void write_interactions(const InteractionLog& log, const std::string& path);
std::string format_interactions(const InteractionLog& log);

// ---------------------------------------------------------------- periods

struct Granularity {
  enum class Unit { calendar_month, fixed_seconds };
  Unit unit = Unit::calendar_month;
  std::int64_t seconds = 0;

  static Granularity month() { return {}; }
  static Granularity fixed(std::int64_t seconds);
  /// "month" or "seconds:<n>" (also "day" and "week" shorthands).
  static Granularity parse(std::string_view text);
  std::string to_string() const;
};

class PeriodGrid {
 public:
  PeriodGrid() = default;
  PeriodGrid(Granularity granularity, std::int64_t origin, std::size_t n_periods)
      : granularity_(granularity), origin_(origin), n_periods_(n_periods) {}

  /// Period index of a timestamp. Negative or >= n_periods for timestamps
  /// outside the grid's range.
  std::int64_t period_of(Timestamp t) const;
  /// First second of period p.
  Timestamp period_start(std::int64_t p) const;

  const Granularity& granularity() const noexcept { return granularity_; }
  /// Calendar grids: months since 1970-01 of period 0. Fixed grids: the
  /// earliest timestamp.
  std::int64_t origin() const noexcept { return origin_; }
  std::size_t n_periods() const noexcept { return n_periods_; }

 private:
  Granularity granularity_;
  std::int64_t origin_ = 0;
  std::size_t n_periods_ = 0;
};

PeriodGrid assign_periods(const InteractionLog& log, Granularity granularity);

/// Months since 1970-01 (UTC) of a timestamp.
std::int64_t month_index(Timestamp t);

// ---------------------------------------------------------------- filtering

struct FilterOutcome {
  InteractionLog log;
  std::size_t iterations = 0;  // passes until the fixpoint was reached
};

/// Keeps only users and items active in every period of `grid`, alternating
/// user and item passes until nothing changes. Vocabularies are re-densified.
FilterOutcome filter_per_period_activity(const InteractionLog& log, const PeriodGrid& grid);

constexpr std::size_t kFilterIterationCap = 100;

// ---------------------------------------------------------------- statistics

struct DatasetStats {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_interactions = 0;
  double per_user = 0;
  double per_user_per_period = 0;
  double per_item = 0;
  double per_item_per_period = 0;
};

/// Counts only users and items that occur in the log.
DatasetStats dataset_stats(const InteractionLog& log, const PeriodGrid& grid);

std::string stats_csv_header();
std::string stats_csv_row(std::string_view label, const DatasetStats& stats);

// ---------------------------------------------------------------- matrices

enum class Aggregation { count, sum_weight, binary };

Aggregation parse_aggregation(std::string_view text);
std::string to_string(Aggregation a);

/// users x items matrix over records whose period is in `periods`.
SparseMatrix build_matrix(const InteractionLog& log, const std::vector<std::int64_t>& periods,
                          const PeriodGrid& grid, Aggregation aggregation);

/// users x items matrix over all records of `log`.
SparseMatrix build_matrix(const InteractionLog& log, Aggregation aggregation);

}  // namespace cvtt
