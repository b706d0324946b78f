#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cvtt/ingest.hpp"

namespace cvtt {

struct DataStrategy {
  enum class Kind { expand, window, random_expand, random_window };
  Kind kind = Kind::expand;
  std::size_t window = 0;  // periods, window kinds only

  static DataStrategy expand() { return {Kind::expand, 0}; }
  static DataStrategy random_expand() { return {Kind::random_expand, 0}; }
  static DataStrategy sliding(std::size_t n);
  static DataStrategy random_sliding(std::size_t n);

  /// "expand", "window:3", "random_expand", "random_window:3".
  static DataStrategy parse(std::string_view text);
  std::string name() const;

  bool randomized() const noexcept {
    return kind == Kind::random_expand || kind == Kind::random_window;
  }
  bool windowed() const noexcept { return kind == Kind::window || kind == Kind::random_window; }
  /// The temporal strategy whose folds this one randomizes (itself if temporal).
  DataStrategy temporal_base() const;

  friend bool operator==(const DataStrategy&, const DataStrategy&) = default;
};

struct FoldPlan {
  std::size_t fold_index = 0;
  std::vector<std::int64_t> train_periods;  // ascending
  std::int64_t valid_period = 0;
  std::int64_t test_period = 0;
  DataStrategy strategy;
};

/// One fold per feasible test period, starting at min_train_periods + 1.
std::vector<FoldPlan> plan_folds(const PeriodGrid& grid, const DataStrategy& strategy,
                                 std::size_t min_train_periods = 1);
std::vector<FoldPlan> plan_folds(std::size_t n_periods, const DataStrategy& strategy,
                                 std::size_t min_train_periods = 1);

/// Audit manifest: one line per fold, `index<TAB>train<TAB>valid<TAB>test<TAB>strategy`
/// with the train periods comma-separated.
std::string format_fold_manifest(const std::vector<FoldPlan>& plans);
std::vector<FoldPlan> parse_fold_manifest(std::string_view text);

// A value whose reads are counted. Copies share the payload and the
// counter, so a partition passed through several stages still reports every
// read of its contents.
template <typename T>
class Guarded {
 public:
  Guarded() : Guarded(T{}) {}
  explicit Guarded(T value)
      : value_(std::make_shared<const T>(std::move(value))),
        reads_(std::make_shared<std::atomic<std::size_t>>(0)) {}

  const T& read() const {
    reads_->fetch_add(1, std::memory_order_relaxed);
    return *value_;
  }
  std::size_t reads() const { return reads_->load(std::memory_order_relaxed); }
  /// Same payload, fresh counter.
  Guarded rewrapped() const {
    Guarded g;
    g.value_ = value_;
    return g;
  }
  /// True when both wrap the same payload object.
  bool same_payload(const Guarded& other) const { return value_ == other.value_; }

 private:
  std::shared_ptr<const T> value_;
  std::shared_ptr<std::atomic<std::size_t>> reads_;
};

struct SplitTriple {
  InteractionLog train;
  InteractionLog valid;
  Guarded<InteractionLog> test;
};

/// Routes records by period; records outside train/valid/test periods are
/// dropped. Throws DataError naming the fold and part when a part is empty.
SplitTriple materialize_fold(const InteractionLog& log, const PeriodGrid& grid,
                             const FoldPlan& plan);

/// Re-partitions train ∪ valid uniformly at random keeping |valid|; the test
/// part is passed through untouched.
SplitTriple randomize_holdout(const SplitTriple& triple, std::uint64_t seed);

struct ClassicStrategy {
  enum class Kind { random, user_split, leave_one_out, temporal_user, temporal_global };
  Kind kind = Kind::temporal_global;
  double test_fraction = 0.2;
  Timestamp cut = 0;  // temporal_global
  std::uint64_t seed = 0;
};

/// The five classic holdout schemes. The valid part is left empty.
SplitTriple classic_split(const InteractionLog& log, const ClassicStrategy& strategy);

struct LeakageViolation {
  enum class Kind { temporal_order, duplicate };
  Kind kind;
  std::string earlier_part;  // "train" or "valid"
  std::string later_part;    // "valid" or "test"
  Interaction record;        // the offending record of earlier_part
};

struct LeakageReport {
  std::vector<LeakageViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
  std::size_t count(LeakageViolation::Kind kind) const;
};

/// Flags records of an earlier part whose timestamp is >= the minimum
/// timestamp of a later part (train<valid, train<test, valid<test), and
/// records present verbatim in two parts.
LeakageReport assert_no_leakage(const SplitTriple& triple);

}  // namespace cvtt
