#include "cvtt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "cvtt/error.hpp"
#include "cvtt/rng.hpp"

namespace cvtt {

void DriftScenario::validate() const {
  if (n_users == 0 || n_items == 0 || n_periods == 0)
    throw UsageError("scenario needs at least one user, item and period");
  if (interactions_per_period == 0) throw UsageError("interactions_per_period must be positive");
  if (period_seconds < 0) throw UsageError("period_seconds must be nonnegative");
  if (period_seconds == 0 && month_index(start) != month_index(start - 1) + 1)
    throw UsageError("calendar scenarios must start on a month boundary");
  const auto n = profiles.size();
  if (!(n == 1 || n == n_periods || (n == 2 && shift_period)))
    throw UsageError(fmt::format("{} profiles do not fit {} periods (shift {})", n, n_periods,
                                 shift_period ? "set" : "unset"));
  for (const auto& p : profiles) {
    if (p.size() != n_items)
      throw UsageError(fmt::format("profile has {} weights for {} items", p.size(), n_items));
    double total = 0.0;
    for (double w : p) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw UsageError("profile weights must be nonnegative");
      total += w;
    }
    if (total <= 0.0) throw UsageError("degenerate popularity profile: all weights are zero");
  }
}

const std::vector<double>& DriftScenario::profile_for(std::size_t period) const {
  if (profiles.size() == 1) return profiles[0];
  if (profiles.size() == n_periods && !(profiles.size() == 2 && shift_period))
    return profiles[period];
  return period < *shift_period ? profiles[0] : profiles[1];
}

std::vector<double> zipf_profile(std::size_t n_items, double exponent, std::size_t offset) {
  std::vector<double> w(n_items, 0.0);
  for (std::size_t r = 0; r < n_items; ++r)
    w[(offset + r) % n_items] = 1.0 / std::pow(static_cast<double>(r + 1), exponent);
  return w;
}

DriftScenario make_zipf_scenario(std::size_t n_users, std::size_t n_items, std::size_t n_periods,
                                 std::size_t interactions_per_period, double exponent,
                                 std::optional<std::size_t> shift_period, std::uint64_t seed) {
  DriftScenario s;
  s.n_users = n_users;
  s.n_items = n_items;
  s.n_periods = n_periods;
  s.interactions_per_period = interactions_per_period;
  s.seed = seed;
  s.profiles.push_back(zipf_profile(n_items, exponent));
  if (shift_period) {
    s.shift_period = shift_period;
    s.profiles.push_back(zipf_profile(n_items, exponent, n_items / 2));
  }
  return s;
}

InteractionLog generate(const DriftScenario& scenario) {
  scenario.validate();
  auto users = std::make_shared<Vocabulary>();
  auto items = std::make_shared<Vocabulary>();
  for (std::size_t u = 0; u < scenario.n_users; ++u) users->intern(fmt::format("u{}", u));
  for (std::size_t i = 0; i < scenario.n_items; ++i) items->intern(fmt::format("i{}", i));

  PeriodGrid calendar(Granularity::month(), month_index(scenario.start), scenario.n_periods);
  auto bounds = [&](std::size_t p) -> std::pair<Timestamp, Timestamp> {
    if (scenario.period_seconds > 0) {
      const auto begin = scenario.start + static_cast<std::int64_t>(p) * scenario.period_seconds;
      return {begin, begin + scenario.period_seconds};
    }
    return {calendar.period_start(static_cast<std::int64_t>(p)),
            calendar.period_start(static_cast<std::int64_t>(p) + 1)};
  };

  Rng rng(scenario.seed);
  std::vector<Interaction> records;
  std::vector<ItemId> drawn;
  for (std::size_t p = 0; p < scenario.n_periods; ++p) {
    const auto& profile = scenario.profile_for(p);
    std::vector<double> cumulative(profile.size());
    std::partial_sum(profile.begin(), profile.end(), cumulative.begin());
    const double total = cumulative.back();
    const auto [begin, end] = bounds(p);
    for (std::size_t u = 0; u < scenario.n_users; ++u) {
      drawn.clear();
      for (std::size_t d = 0; d < scenario.interactions_per_period; ++d) {
        const double x = rng.uniform01() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
        if (it == cumulative.end()) --it;
        drawn.push_back(static_cast<ItemId>(it - cumulative.begin()));
      }
      std::sort(drawn.begin(), drawn.end());
      drawn.erase(std::unique(drawn.begin(), drawn.end()), drawn.end());
      for (auto item : drawn)
        records.push_back({static_cast<UserId>(u), item, rng.between(begin, end - 1), 1.0});
    }
  }
  std::stable_sort(records.begin(), records.end(), [](const Interaction& a, const Interaction& b) {
    return a.timestamp < b.timestamp;
  });
  return InteractionLog{std::move(records), std::move(users), std::move(items)};
}

}  // namespace cvtt
