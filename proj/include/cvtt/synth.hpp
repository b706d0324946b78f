#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cvtt/ingest.hpp"

namespace cvtt {

// Synthetic interaction stream. `profiles` holds item-weight vectors and is
// read as follows:
//   1 profile            -> used in every period
//   2 profiles + shift   -> profiles[0] before shift_period, profiles[1] from it on
//   n_periods profiles   -> one per period
// Weights are normalized per profile; an all-zero profile is rejected.
struct DriftScenario {
  std::size_t n_users = 50;
  std::size_t n_items = 100;
  std::size_t n_periods = 6;
  std::size_t interactions_per_period = 5;  // draws per user per period
  std::vector<std::vector<double>> profiles;
  std::optional<std::size_t> shift_period;
  std::uint64_t seed = 0;
  /// Calendar months starting at `start` (must be a month boundary) when
  /// period_seconds is 0; fixed-length periods otherwise.
  Timestamp start = 1577836800;  // 2020-01-01T00:00:00Z
  std::int64_t period_seconds = 0;

  void validate() const;
  const std::vector<double>& profile_for(std::size_t period) const;
};

/// Zipf-like weights 1/(rank+1)^exponent over `n_items`, with item
/// `(offset + r) % n_items` at rank r.
std::vector<double> zipf_profile(std::size_t n_items, double exponent, std::size_t offset = 0);

/// Zipf profile before `shift_period` (if any) and the same profile rotated
/// by half the catalogue from it on.
DriftScenario make_zipf_scenario(std::size_t n_users, std::size_t n_items, std::size_t n_periods,
                                 std::size_t interactions_per_period, double exponent,
                                 std::optional<std::size_t> shift_period, std::uint64_t seed);

/// Draws with replacement from each period's profile, then keeps one record
/// per (user, item, period); timestamps uniform within the period. Users are
/// named u<k> and items i<k>, with dense ids equal to k.
InteractionLog generate(const DriftScenario& scenario);

}  // namespace cvtt
