#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "hybil/core/error.hpp"

namespace hybil {

struct MannWhitney {
  double u_a = 0.0;  // pairs with a > b, ties counted 1/2
  double u_b = 0.0;
  double u = 0.0;    // min(u_a, u_b)
  double p = 1.0;    // two-sided
  bool exact = false;
  bool zero_variance = false;  // all pooled values equal; p forced to 1
};

inline constexpr std::size_t kMannWhitneyExactLimit = 400;  // n_a * n_b

namespace detail {

// Average ranks (1-based) of the pooled values, doubled so that they are integers.
inline std::vector<std::uint64_t> doubled_midranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return pooled[i] < pooled[j]; });
  std::vector<std::uint64_t> rank2(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    for (std::size_t t = i; t <= j; ++t) rank2[order[t]] = (i + 1) + (j + 1);
    i = j + 1;
  }
  return rank2;
}

// Exact two-sided p over all C(n, n_a) assignments of the pooled values to
// group a, counting rank sums (ties keep their midranks) by dynamic programming.
inline double exact_p(const std::vector<std::uint64_t>& rank2, std::size_t na, std::uint64_t observed2) {
  const std::size_t n = rank2.size();
  const std::uint64_t max_sum = std::accumulate(rank2.begin(), rank2.end(), std::uint64_t{0});
  // ways[j][s]: subsets of size j with doubled rank sum s.
  std::vector<std::vector<double>> ways(na + 1, std::vector<double>(max_sum + 1, 0.0));
  ways[0][0] = 1.0;
  std::uint64_t reach = 0;
  for (std::size_t i = 0; i < n; ++i) {
    reach += rank2[i];
    for (std::size_t j = std::min(na, i + 1); j >= 1; --j) {
      auto& dst = ways[j];
      const auto& src = ways[j - 1];
      // No doubled rank exceeds 2n, so j items sum to at most 2nj.
      const std::uint64_t top = std::min<std::uint64_t>(reach, 2 * n * j);
      for (std::uint64_t s = top; s >= rank2[i]; --s) dst[s] += src[s - rank2[i]];
    }
  }
  // Mean doubled rank sum of group a: na * (n + 1).
  const auto mean2 = static_cast<std::int64_t>(na * (n + 1));
  const auto dev_obs = std::llabs(static_cast<std::int64_t>(observed2) - mean2);
  double total = 0.0, extreme = 0.0;
  for (std::uint64_t s = 0; s <= max_sum; ++s) {
    if (ways[na][s] == 0.0) continue;
    total += ways[na][s];
    if (std::llabs(static_cast<std::int64_t>(s) - mean2) >= dev_obs) extreme += ways[na][s];
  }
  return std::min(1.0, extreme / total);
}

}  // namespace detail

// Two-sided Mann-Whitney U test. Exact permutation p when n_a * n_b <= 400,
// otherwise the normal approximation with tie correction and a 0.5 continuity
// correction.
inline MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ConfigError("mann_whitney_u: both samples must be nonempty");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled) {
    if (!std::isfinite(v)) throw NumericError("mann_whitney_u: non-finite score");
  }
  const auto rank2 = detail::doubled_midranks(pooled);
  const std::uint64_t ra2 = std::accumulate(rank2.begin(), rank2.begin() + static_cast<long>(na), std::uint64_t{0});

  MannWhitney r;
  const double nab = static_cast<double>(na) * static_cast<double>(nb);
  r.u_a = static_cast<double>(ra2) / 2.0 - static_cast<double>(na * (na + 1)) / 2.0;
  r.u_b = nab - r.u_a;
  r.u = std::min(r.u_a, r.u_b);

  // Tie term sum(t^3 - t) over groups of equal values.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double nd = static_cast<double>(n);
  if (ties == nd * nd * nd - nd) {
    r.zero_variance = true;
    r.p = 1.0;
    r.exact = na * nb <= kMannWhitneyExactLimit;
    return r;
  }
  if (na * nb <= kMannWhitneyExactLimit) {
    r.exact = true;
    // The smaller group keeps the table small; the p-value is symmetric.
    if (na <= nb) {
      r.p = detail::exact_p(rank2, na, ra2);
    } else {
      std::vector<std::uint64_t> swapped(rank2.begin() + static_cast<long>(na), rank2.end());
      swapped.insert(swapped.end(), rank2.begin(), rank2.begin() + static_cast<long>(na));
      const std::uint64_t rb2 = static_cast<std::uint64_t>(n * (n + 1)) - ra2;
      r.p = detail::exact_p(swapped, nb, rb2);
    }
    return r;
  }
  const double var = nab / 12.0 * ((nd + 1.0) - ties / (nd * (nd - 1.0)));
  const double dev = std::fabs(r.u_a - nab / 2.0);
  const double z = std::max(0.0, dev - 0.5) / std::sqrt(var);
  r.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

}  // namespace hybil
