// Shared fixtures and brute-force reference implementations for the tests.
// The references work on dense arrays straight from the definitions and do
// not call into the library beyond reading inputs.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cvtt/ingest.hpp"
#include "cvtt/sparse_matrix.hpp"
#include "cvtt/splitkit.hpp"

namespace oracle {

using cvtt::ItemId;

using Dense = std::vector<std::vector<double>>;

inline cvtt::InteractionLog log_from_csv(const std::string& text) {
  return cvtt::parse_interactions_text(text, cvtt::Schema{}).log;
}

// Builds a log with users "u<k>" and items "i<k>" whose dense ids equal k.
inline cvtt::InteractionLog log_from_tuples(
    std::size_t n_users, std::size_t n_items,
    const std::vector<std::tuple<std::uint32_t, std::uint32_t, std::int64_t>>& rows) {
  auto users = std::make_shared<cvtt::Vocabulary>();
  auto items = std::make_shared<cvtt::Vocabulary>();
  for (std::size_t u = 0; u < n_users; ++u) users->intern("u" + std::to_string(u));
  for (std::size_t i = 0; i < n_items; ++i) items->intern("i" + std::to_string(i));
  std::vector<cvtt::Interaction> records;
  for (auto [u, i, t] : rows) records.push_back({u, i, t, 1.0});
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return {std::move(records), users, items};
}

inline Dense to_dense(const cvtt::SparseMatrix& m) {
  Dense d(m.n_rows(), std::vector<double>(m.n_cols(), 0.0));
  for (const auto& t : m.triplets()) d[t.row][t.col] = t.value;
  return d;
}

inline cvtt::SparseMatrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols,
                                        double density, bool integer_values = true) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 4);
  std::vector<cvtt::Triplet> t;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (u01(gen) < density)
        t.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c),
                     integer_values ? static_cast<double>(count(gen)) : 0.1 + u01(gen)});
  return cvtt::SparseMatrix::from_triplets(rows, cols, std::move(t));
}

// ---------------------------------------------------------------- metrics

inline bool member(const std::vector<ItemId>& set, ItemId x) {
  for (auto y : set)
    if (y == x) return true;
  return false;
}

inline double ndcg(const std::vector<ItemId>& ranked, const std::vector<ItemId>& relevant,
                   std::size_t k) {
  double dcg = 0.0;
  for (std::size_t pos = 1; pos <= std::min(k, ranked.size()); ++pos)
    if (member(relevant, ranked[pos - 1])) dcg += 1.0 / std::log2(static_cast<double>(pos) + 1.0);
  double idcg = 0.0;
  for (std::size_t pos = 1; pos <= std::min(k, relevant.size()); ++pos)
    idcg += 1.0 / std::log2(static_cast<double>(pos) + 1.0);
  return dcg / idcg;
}

inline double recall(const std::vector<ItemId>& ranked, const std::vector<ItemId>& relevant,
                     std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t pos = 0; pos < std::min(k, ranked.size()); ++pos)
    hits += member(relevant, ranked[pos]);
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

inline double hitrate(const std::vector<ItemId>& ranked, const std::vector<ItemId>& relevant,
                      std::size_t k) {
  for (std::size_t pos = 0; pos < std::min(k, ranked.size()); ++pos)
    if (member(relevant, ranked[pos])) return 1.0;
  return 0.0;
}

// ---------------------------------------------------------------- similarity

enum class Sim { cosine, jaccard, asymmetric, dice, tversky };

inline double similarity(const Dense& m, std::size_t i, std::size_t j, Sim kind, double shrink,
                         double alpha = 0.5, double ta = 1.0, double tb = 1.0) {
  double dot = 0, ni = 0, nj = 0, si = 0, sj = 0, both = 0;
  for (const auto& row : m) {
    dot += row[i] * row[j];
    ni += row[i] * row[i];
    nj += row[j] * row[j];
    si += row[i] > 0;
    sj += row[j] > 0;
    both += row[i] > 0 && row[j] > 0;
  }
  auto safe = [](double a, double b) { return b == 0.0 ? 0.0 : a / b; };
  switch (kind) {
    case Sim::cosine: return safe(dot, std::sqrt(ni) * std::sqrt(nj) + shrink);
    case Sim::asymmetric:
      return safe(dot, std::pow(ni, alpha) * std::pow(nj, 1 - alpha) + shrink);
    case Sim::jaccard: return safe(both, si + sj - both + shrink);
    case Sim::dice: return safe(2 * both, si + sj + shrink);
    case Sim::tversky: return safe(both, both + ta * (si - both) + tb * (sj - both) + shrink);
  }
  return 0;
}

// ---------------------------------------------------------------- SLIM

// Plain cyclic coordinate descent on the dense problem
//   0.5 ||x_j - X w||^2 + l1 |w|_1 + 0.5 l2 |w|^2,  w_j = 0,
// run until every coordinate moves by less than `tol`.
inline std::vector<double> slim_column(const Dense& x, std::size_t j, double l1, double l2,
                                       bool positive, double tol = 1e-13,
                                       int max_sweeps = 100000) {
  const std::size_t n = x.front().size();
  std::vector<double> w(n, 0.0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j) continue;
      double rho = 0.0, norm = 0.0;
      for (const auto& row : x) {
        double pred = 0.0;
        for (std::size_t m = 0; m < n; ++m)
          if (m != k) pred += row[m] * w[m];
        rho += row[k] * (row[j] - pred);
        norm += row[k] * row[k];
      }
      double next = 0.0;
      if (rho > l1)
        next = (rho - l1) / (norm + l2);
      else if (rho < -l1 && !positive)
        next = (rho + l1) / (norm + l2);
      moved = std::max(moved, std::abs(next - w[k]));
      w[k] = next;
    }
    if (moved < tol) break;
  }
  return w;
}

inline double slim_objective(const Dense& x, std::size_t j, const std::vector<double>& w, double l1,
                             double l2) {
  double loss = 0, a = 0, b = 0;
  for (const auto& row : x) {
    double pred = 0;
    for (std::size_t m = 0; m < w.size(); ++m) pred += row[m] * w[m];
    loss += (row[j] - pred) * (row[j] - pred);
  }
  for (double v : w) {
    a += std::abs(v);
    b += v * v;
  }
  return 0.5 * loss + l1 * a + 0.5 * l2 * b;
}

// ---------------------------------------------------------------- splits

// Exhaustive pairwise scan: every (earlier, later) record pair whose order
// is violated (ties count), plus every record that appears in both parts.
struct ScanResult {
  std::size_t order = 0;
  std::size_t duplicates = 0;
};

inline ScanResult scan_pair(const cvtt::InteractionLog& earlier, const cvtt::InteractionLog& later) {
  ScanResult r;
  for (std::size_t a = 0; a < earlier.size(); ++a) {
    bool late = false, dup = false;
    for (const auto& b : later.records) {
      if (earlier.records[a].timestamp >= b.timestamp) late = true;
      if (earlier.records[a] == b) dup = true;
    }
    r.order += late;
    r.duplicates += dup;
  }
  return r;
}

// True when every surviving user and item has a record in every period.
inline bool satisfies_activity_rule(const cvtt::InteractionLog& log, const cvtt::PeriodGrid& grid) {
  std::map<std::uint32_t, std::set<std::int64_t>> by_user, by_item;
  for (const auto& r : log.records) {
    by_user[r.user].insert(grid.period_of(r.timestamp));
    by_item[r.item].insert(grid.period_of(r.timestamp));
  }
  for (const auto& [u, ps] : by_user)
    if (ps.size() != grid.n_periods()) return false;
  for (const auto& [i, ps] : by_item)
    if (ps.size() != grid.n_periods()) return false;
  return true;
}

inline std::multiset<std::tuple<std::uint32_t, std::uint32_t, std::int64_t, double>> multiset_of(
    const cvtt::InteractionLog& log) {
  std::multiset<std::tuple<std::uint32_t, std::uint32_t, std::int64_t, double>> out;
  for (const auto& r : log.records) out.insert({r.user, r.item, r.timestamp, r.weight});
  return out;
}

}  // namespace oracle
