#include "cvtt/splitkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cvtt/error.hpp"
#include "cvtt/rng.hpp"

namespace cvtt {

// ---------------------------------------------------------------- strategies

DataStrategy DataStrategy::sliding(std::size_t n) {
  if (n < 1) throw UsageError("window length must be at least 1");
  return {Kind::window, n};
}

DataStrategy DataStrategy::random_sliding(std::size_t n) {
  if (n < 1) throw UsageError("window length must be at least 1");
  return {Kind::random_window, n};
}

namespace {

std::size_t parse_window(std::string_view text, std::string_view full) {
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec != std::errc() || ptr != text.data() + text.size() || n < 1)
    throw UsageError(fmt::format("invalid window length in strategy '{}'", full));
  return n;
}

}  // namespace

DataStrategy DataStrategy::parse(std::string_view text) {
  if (text == "expand") return expand();
  if (text == "random_expand") return random_expand();
  if (text.starts_with("window:")) return sliding(parse_window(text.substr(7), text));
  if (text.starts_with("random_window:"))
    return random_sliding(parse_window(text.substr(14), text));
  throw UsageError(fmt::format("unknown data strategy '{}'", text));
}

std::string DataStrategy::name() const {
  switch (kind) {
    case Kind::expand: return "expand";
    case Kind::random_expand: return "random_expand";
    case Kind::window: return fmt::format("window:{}", window);
    case Kind::random_window: return fmt::format("random_window:{}", window);
  }
  return "?";
}

DataStrategy DataStrategy::temporal_base() const {
  switch (kind) {
    case Kind::random_expand: return expand();
    case Kind::random_window: return sliding(window);
    default: return *this;
  }
}

// ---------------------------------------------------------------- planning

std::vector<FoldPlan> plan_folds(std::size_t n_periods, const DataStrategy& strategy,
                                 std::size_t min_train_periods) {
  if (min_train_periods < 1) throw UsageError("min_train_periods must be at least 1");
  if (strategy.windowed() && strategy.window < 1)
    throw UsageError("window strategies need a window length of at least 1");
  if (n_periods < min_train_periods + 2)
    throw DataError(fmt::format("{} periods are too few for folds with {} training period(s); "
                                "need at least {}",
                                n_periods, min_train_periods, min_train_periods + 2));
  std::vector<FoldPlan> plans;
  for (auto test = static_cast<std::int64_t>(min_train_periods) + 1;
       test < static_cast<std::int64_t>(n_periods); ++test) {
    FoldPlan plan;
    plan.fold_index = plans.size();
    plan.test_period = test;
    plan.valid_period = test - 1;
    std::int64_t first = 0;
    if (strategy.windowed())
      first = std::max<std::int64_t>(0, plan.valid_period - static_cast<std::int64_t>(strategy.window));
    for (auto p = first; p < plan.valid_period; ++p) plan.train_periods.push_back(p);
    plan.strategy = strategy;
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<FoldPlan> plan_folds(const PeriodGrid& grid, const DataStrategy& strategy,
                                 std::size_t min_train_periods) {
  return plan_folds(grid.n_periods(), strategy, min_train_periods);
}

std::string format_fold_manifest(const std::vector<FoldPlan>& plans) {
  std::string out;
  for (const auto& p : plans)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", p.fold_index, fmt::join(p.train_periods, ","),
                       p.valid_period, p.test_period, p.strategy.name());
  return out;
}

std::vector<FoldPlan> parse_fold_manifest(std::string_view text) {
  std::vector<FoldPlan> plans;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string index, train, valid, test, strategy;
    if (!std::getline(fields, index, '\t') || !std::getline(fields, train, '\t') ||
        !std::getline(fields, valid, '\t') || !std::getline(fields, test, '\t') ||
        !std::getline(fields, strategy))
      throw UsageError(fmt::format("malformed fold manifest line '{}'", line));
    FoldPlan plan;
    try {
      plan.fold_index = std::stoul(index);
      plan.valid_period = std::stoll(valid);
      plan.test_period = std::stoll(test);
      std::istringstream periods(train);
      std::string p;
      while (std::getline(periods, p, ','))
        if (!p.empty()) plan.train_periods.push_back(std::stoll(p));
    } catch (const std::logic_error&) {
      throw UsageError(fmt::format("malformed fold manifest line '{}'", line));
    }
    plan.strategy = DataStrategy::parse(strategy);
    plans.push_back(std::move(plan));
  }
  return plans;
}

// ---------------------------------------------------------------- materialize

SplitTriple materialize_fold(const InteractionLog& log, const PeriodGrid& grid,
                             const FoldPlan& plan) {
  if (plan.valid_period != plan.test_period - 1 ||
      plan.test_period >= static_cast<std::int64_t>(grid.n_periods()))
    throw UsageError(fmt::format("fold {} is inconsistent with a {}-period grid", plan.fold_index,
                                 grid.n_periods()));
  for (auto p : plan.train_periods)
    if (p < 0 || p >= plan.valid_period)
      throw UsageError(fmt::format("fold {} has train period {} not before validation period {}",
                                   plan.fold_index, p, plan.valid_period));

  std::vector<Interaction> train, valid, test;
  for (const auto& r : log.records) {
    const auto p = grid.period_of(r.timestamp);
    if (p == plan.test_period)
      test.push_back(r);
    else if (p == plan.valid_period)
      valid.push_back(r);
    else if (std::binary_search(plan.train_periods.begin(), plan.train_periods.end(), p))
      train.push_back(r);
  }
  auto require = [&](const std::vector<Interaction>& part, const char* name) {
    if (part.empty())
      throw DataError(fmt::format("fold {}: {} part is empty", plan.fold_index, name));
  };
  require(train, "train");
  require(valid, "valid");
  require(test, "test");
  return SplitTriple{log.with_records(std::move(train)), log.with_records(std::move(valid)),
                     Guarded<InteractionLog>(log.with_records(std::move(test)))};
}

SplitTriple randomize_holdout(const SplitTriple& triple, std::uint64_t seed) {
  const auto& train = triple.train.records;
  const auto& valid = triple.valid.records;
  std::vector<Interaction> pool;
  pool.reserve(train.size() + valid.size());
  pool.insert(pool.end(), train.begin(), train.end());
  pool.insert(pool.end(), valid.begin(), valid.end());
  // Keep the pooled records time-ordered so both output parts stay sorted.
  std::stable_sort(pool.begin(), pool.end(), [](const Interaction& a, const Interaction& b) {
    return a.timestamp < b.timestamp;
  });

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  std::vector<char> to_valid(pool.size(), 0);
  for (std::size_t k = 0; k < valid.size(); ++k) to_valid[order[k]] = 1;

  std::vector<Interaction> new_train, new_valid;
  new_train.reserve(train.size());
  new_valid.reserve(valid.size());
  for (std::size_t k = 0; k < pool.size(); ++k)
    (to_valid[k] ? new_valid : new_train).push_back(pool[k]);
  return SplitTriple{triple.train.with_records(std::move(new_train)),
                     triple.valid.with_records(std::move(new_valid)), triple.test};
}

// ---------------------------------------------------------------- classic

namespace {

std::size_t fraction_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
}

}  // namespace

SplitTriple classic_split(const InteractionLog& log, const ClassicStrategy& strategy) {
  using Kind = ClassicStrategy::Kind;
  if (log.empty()) throw DataError("cannot split an empty log");
  const bool uses_fraction = strategy.kind == Kind::random || strategy.kind == Kind::user_split ||
                             strategy.kind == Kind::temporal_user;
  if (uses_fraction && !(strategy.test_fraction > 0.0 && strategy.test_fraction < 1.0))
    throw UsageError(fmt::format("test fraction {} outside (0, 1)", strategy.test_fraction));

  // Record indices per user, in log (time) order.
  std::vector<std::vector<std::size_t>> by_user(log.n_users());
  for (std::size_t k = 0; k < log.size(); ++k) by_user[log.records[k].user].push_back(k);

  std::vector<char> in_test(log.size(), 0);
  Rng rng(strategy.seed);
  switch (strategy.kind) {
    case Kind::random:
      for (auto& idx : by_user) {
        if (idx.empty()) continue;
        auto shuffled = idx;
        rng.shuffle(shuffled.begin(), shuffled.end());
        const auto n_test = fraction_count(strategy.test_fraction, idx.size());
        for (std::size_t j = 0; j < n_test; ++j) in_test[shuffled[j]] = 1;
      }
      break;
    case Kind::user_split: {
      std::vector<std::size_t> active;
      for (std::size_t u = 0; u < by_user.size(); ++u)
        if (!by_user[u].empty()) active.push_back(u);
      rng.shuffle(active.begin(), active.end());
      const auto n_test = fraction_count(strategy.test_fraction, active.size());
      for (std::size_t j = 0; j < n_test; ++j)
        for (auto k : by_user[active[j]]) in_test[k] = 1;
      break;
    }
    case Kind::leave_one_out:
      for (const auto& idx : by_user)
        if (idx.size() >= 2) in_test[idx.back()] = 1;
      break;
    case Kind::temporal_user:
      for (const auto& idx : by_user) {
        const auto n_test = fraction_count(strategy.test_fraction, idx.size());
        for (std::size_t j = idx.size() - n_test; j < idx.size(); ++j) in_test[idx[j]] = 1;
      }
      break;
    case Kind::temporal_global:
      for (std::size_t k = 0; k < log.size(); ++k)
        in_test[k] = log.records[k].timestamp >= strategy.cut;
      break;
  }

  std::vector<Interaction> train, test;
  for (std::size_t k = 0; k < log.size(); ++k)
    (in_test[k] ? test : train).push_back(log.records[k]);
  if (test.empty()) throw DataError("classic split produced an empty test part");
  return SplitTriple{log.with_records(std::move(train)), log.with_records({}),
                     Guarded<InteractionLog>(log.with_records(std::move(test)))};
}

// ---------------------------------------------------------------- leakage

std::size_t LeakageReport::count(LeakageViolation::Kind kind) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(), [&](const auto& v) { return v.kind == kind; }));
}

namespace {

auto record_key(const Interaction& r) {
  return std::make_tuple(r.user, r.item, r.timestamp, r.weight);
}

std::vector<Interaction> sorted_unique(std::vector<Interaction> recs) {
  std::sort(recs.begin(), recs.end(),
            [](const auto& a, const auto& b) { return record_key(a) < record_key(b); });
  recs.erase(std::unique(recs.begin(), recs.end()), recs.end());
  return recs;
}

}  // namespace

LeakageReport assert_no_leakage(const SplitTriple& triple) {
  struct Part {
    const char* name;
    const std::vector<Interaction>* records;
  };
  const Part parts[] = {{"train", &triple.train.records},
                        {"valid", &triple.valid.records},
                        {"test", &triple.test.read().records}};

  LeakageReport report;
  for (std::size_t later = 1; later < 3; ++later) {
    const auto& recs = *parts[later].records;
    if (recs.empty()) continue;
    const auto min_ts =
        std::min_element(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
          return a.timestamp < b.timestamp;
        })->timestamp;
    for (std::size_t earlier = 0; earlier < later; ++earlier)
      for (const auto& r : *parts[earlier].records)
        if (r.timestamp >= min_ts)
          report.violations.push_back({LeakageViolation::Kind::temporal_order,
                                       parts[earlier].name, parts[later].name, r});
  }

  std::vector<Interaction> unique[3];
  for (std::size_t i = 0; i < 3; ++i) unique[i] = sorted_unique(*parts[i].records);
  for (std::size_t later = 1; later < 3; ++later)
    for (std::size_t earlier = 0; earlier < later; ++earlier) {
      std::vector<Interaction> common;
      std::set_intersection(
          unique[earlier].begin(), unique[earlier].end(), unique[later].begin(),
          unique[later].end(), std::back_inserter(common),
          [](const auto& a, const auto& b) { return record_key(a) < record_key(b); });
      for (const auto& r : common)
        report.violations.push_back(
            {LeakageViolation::Kind::duplicate, parts[earlier].name, parts[later].name, r});
    }
  return report;
}

}  // namespace cvtt
