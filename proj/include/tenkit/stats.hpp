#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "tenkit/common.hpp"
#include "tenkit/errors.hpp"

namespace tenkit {

// The 15 per-(kind, mode) statistics.  "all" statistics range over every
// possible entry of the kind (empty ones count as zero); "nz" statistics
// range over the nonzero entries only, and min is taken over nonzero entries.
// Every ratio with a zero denominator is emitted as 0; that happens exactly
// when n_nz == 0, which callers surface as a quality flag.
struct KindStats {
  u64 n_all = 0;
  u64 n_nz = 0;
  double nz_density = 0;
  u64 max = 0;
  u64 min = 0;
  u64 dev = 0;
  u64 sum = 0;
  double avg_all = 0;
  double imbal_all = 0;
  double stdev_all = 0;
  double cv_all = 0;
  double avg_nz = 0;
  double imbal_nz = 0;
  double stdev_nz = 0;
  double cv_nz = 0;

  bool operator==(const KindStats&) const = default;
};

inline KindStats compute_kind_stats(std::span<const u64> counts, u64 n_all) {
  if (n_all == 0) throw EmptyDomainError("kind has no entries (n_all == 0)");
  if (counts.size() > n_all)
    throw DomainError("more nonzero entries than the kind admits");
  KindStats s;
  s.n_all = n_all;
  s.n_nz = counts.size();
  u128 sumsq = 0;
  u64 mn = ~u64{0}, mx = 0, sum = 0;
  for (u64 c : counts) {
    if (c == 0) throw NonPositiveCountError("counts must be positive");
    mn = std::min(mn, c);
    mx = std::max(mx, c);
    sum += c;
    sumsq += static_cast<u128>(c) * c;
  }
  if (s.n_nz == 0) mn = 0;
  s.max = mx;
  s.min = mn;
  s.dev = mx - mn;
  s.sum = sum;
  s.nz_density = static_cast<double>(s.n_nz) / static_cast<double>(n_all);

  const double dsum = static_cast<double>(sum);
  const double dsumsq = static_cast<double>(sumsq);
  s.avg_all = dsum / static_cast<double>(n_all);
  s.imbal_all = mx > 0 ? (static_cast<double>(mx) - s.avg_all) / static_cast<double>(mx) : 0.0;
  double var_all = dsumsq / static_cast<double>(n_all) - s.avg_all * s.avg_all;
  s.stdev_all = std::sqrt(std::max(0.0, var_all));
  s.cv_all = s.avg_all > 0 ? s.stdev_all / s.avg_all : 0.0;

  if (s.n_nz > 0) {
    s.avg_nz = dsum / static_cast<double>(s.n_nz);
    s.imbal_nz = (static_cast<double>(mx) - s.avg_nz) / static_cast<double>(mx);
    double var_nz = dsumsq / static_cast<double>(s.n_nz) - s.avg_nz * s.avg_nz;
    s.stdev_nz = std::sqrt(std::max(0.0, var_nz));
    s.cv_nz = s.avg_nz > 0 ? s.stdev_nz / s.avg_nz : 0.0;
  }
  return s;
}

struct GlobalFeatures {
  std::vector<u64> dims;
  u64 nnz = 0;
  double d_nz = 0;
  u64 nfib_all = 0;
  u64 nslc_all = 0;
  u64 nfib_nz = 0;
  u64 nslc_nz = 0;
  double d_fib = 0;
  double d_slc = 0;

  bool operator==(const GlobalFeatures&) const = default;
};

enum class Scope { kAllModes, kTop3 };

inline const char* scope_name(Scope s) { return s == Scope::kAllModes ? "all" : "top3"; }

// Scalar feature total: 15 per (kind, mode) block plus the 11 global values.
// all-modes covers C(M,2) slice pairs twice (nz and fib counts) plus M fiber
// modes; the top-3 scope always covers the 9 blocks of its projected tensor.
inline u64 feature_count(std::size_t order, Scope scope) {
  if (order < 3) throw UnsupportedOrderError("feature_count requires order >= 3");
  u64 blocks = scope == Scope::kAllModes
                   ? 2 * (order * (order - 1) / 2) + order
                   : 9;
  return 15 * blocks + 11;
}

// The three largest modes (ties broken toward the lower mode id), 0-based,
// ordered by descending size.  Used for the top-3 scope and for the three
// size entries of the serialized global section.
inline std::array<std::size_t, 3> largest3_modes(std::span<const u64> dims) {
  if (dims.size() < 3) throw UnsupportedOrderError("need at least 3 modes");
  std::vector<std::size_t> ids(dims.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
    if (dims[a] != dims[b]) return dims[a] > dims[b];
    return a < b;
  });
  return {ids[0], ids[1], ids[2]};
}

}  // namespace tenkit
