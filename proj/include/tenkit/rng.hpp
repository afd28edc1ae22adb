#pragma once

// ============================================================================
// Counter-based random streams and the count-distribution sampler.
//
// DESIGN NOTES
//   * RngStream is a value type: (base, counter).  The base is derived from
//     (master_seed, stream_id) with two SplitMix64 finalizer rounds; draw k is
//     mix(base + k * golden).  Any entity can therefore own an independent
//     stream addressed by (kind, index), and results never depend on thread
//     scheduling or worker count.
//   * Bounded draws use the 128-bit multiply reduction.  It consumes exactly
//     one 64-bit draw per call (no rejection loop), which keeps streams
//     aligned between runs that differ only in distribution parameters; the
//     bias is < bound / 2^64 and irrelevant at any reachable bound.
// ============================================================================

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <unordered_set>
#include <vector>

#include "tenkit/common.hpp"
#include "tenkit/errors.hpp"
#include "tenkit/parallel.hpp"

namespace tenkit {

class RngStream {
 public:
  RngStream(u64 master_seed, u64 stream_id)
      : base_(detail::mix64(detail::mix64(master_seed + detail::kGolden) ^ stream_id)) {}

  u64 next_u64() { return detail::mix64(base_ + (++ctr_) * detail::kGolden); }

  // [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1), never returns an endpoint; safe under log().
  double next_unit_oo() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform in [0, bound), bound >= 1.
  u64 next_index(u64 bound) {
    return static_cast<u64>((static_cast<u128>(next_u64()) * bound) >> 64);
  }

  // Independent sub-stream addressed by (kind, index); does not disturb or
  // depend on this stream's counter.
  RngStream child(u64 kind, u64 index) const {
    return RngStream(base_, detail::mix64(kind * 0xD6E8FEB86659FD93ull + index));
  }

  void skip(u64 n) { ctr_ += n; }
  u64 counter() const { return ctr_; }

 private:
  u64 base_;
  u64 ctr_ = 0;
};

// One normal variate per call (cosine branch), always two draws consumed.
inline double box_muller(RngStream& g, double avg, double std) {
  if (!(std >= 0.0) || !std::isfinite(avg) || !std::isfinite(std))
    throw DomainError("box_muller requires finite avg and std >= 0");
  double u1 = g.next_unit_oo();
  double u2 = g.next_unit();
  double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return avg + std * z;
}

// (mu, sigma) of the log-normal with the requested mean and deviation.
inline std::pair<double, double> lognormal_params(double avg, double std) {
  if (!(avg > 0.0) || !(std >= 0.0) || !std::isfinite(avg) || !std::isfinite(std))
    throw DomainError("lognormal_params requires avg > 0 and std >= 0");
  double s2 = std::log1p((std * std) / (avg * avg));
  double mu = std::log(avg) - 0.5 * s2;
  return {mu, std::sqrt(s2)};
}

// n distinct integers in [1, limit], ascending.  Floyd's sampler when the
// requested fraction is at most half, shuffle-prefix otherwise (bounded by
// 2n memory in that regime).
inline std::vector<u64> rand_inds(RngStream& g, u64 n, u64 limit) {
  if (n > limit) throw CapacityError("rand_inds: n exceeds limit");
  std::vector<u64> out;
  if (n == 0) return out;
  out.reserve(n);
  if (2 * n <= limit) {
    std::unordered_set<u64> seen;
    seen.reserve(static_cast<size_t>(n) * 2);
    for (u64 j = limit - n + 1; j <= limit; ++j) {
      u64 t = 1 + g.next_index(j);
      if (!seen.insert(t).second) seen.insert(j);
    }
    out.assign(seen.begin(), seen.end());
  } else {
    std::vector<u64> pool(limit);
    for (u64 i = 0; i < limit; ++i) pool[i] = i + 1;
    for (u64 i = 0; i < n; ++i) {
      u64 j = i + g.next_index(limit - i);
      std::swap(pool[i], pool[j]);
    }
    out.assign(pool.begin(), pool.begin() + n);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct DistributeOptions {
  double window_lo = 0.95;  // mean-correction window (open interval)
  double window_hi = 1.05;
  unsigned threads = 1;
};

// Ragged result: counts plus, per entry, cnt(i) distinct indices in
// [1, limit] stored flat; inds(i) spans [ind_off[i], ind_off[i+1]).
struct DistributeResult {
  std::vector<u64> cnt;
  std::vector<u64> ind_flat;
  std::vector<u64> ind_off;
  u64 clamped = 0;                  // entries altered by the floor/cap clamp
  bool scaled = false;              // mean correction applied
  bool infeasible_average = false;  // avg > limit was requested

  std::span<const u64> inds(u64 i) const {
    return {ind_flat.data() + ind_off[i], ind_flat.data() + ind_off[i + 1]};
  }
};

namespace detail {
constexpr u64 kStreamDraw = 0x5d;  // per-entry sub-stream kind tags
}

// Draws n counts with the requested mean/deviation shape, corrects the sample
// mean when it drifts outside the window, clamps to [1, min(max, limit)], and
// attaches cnt(i) distinct indices per entry.  Normal branch when avg exceeds
// 3*std, log-normal otherwise.
inline DistributeResult distribute(const RngStream& s, u64 n, double avg, double std,
                                   double maxv, u64 limit,
                                   const DistributeOptions& opts = {}) {
  if (n < 1) throw DomainError("distribute: n must be >= 1");
  if (!(avg >= 1.0)) throw DomainError("distribute: avg must be >= 1");
  if (!(std >= 0.0)) throw DomainError("distribute: std must be >= 0");
  if (!(maxv >= 1.0)) throw DomainError("distribute: max must be >= 1");
  if (limit < 1) throw DomainError("distribute: limit must be >= 1");

  DistributeResult res;
  res.infeasible_average = avg > static_cast<double>(limit);

  const bool normal = avg > 3.0 * std;
  double mu = 0.0, sigma = 0.0;
  if (!normal) std::tie(mu, sigma) = lognormal_params(avg, std);

  res.cnt.assign(n, 0);
  std::vector<u8> floored(n, 0);
  const unsigned threads = opts.threads;

  parallel_chunks(n, threads, [&](unsigned, u64 b, u64 e) {
    for (u64 i = b; i < e; ++i) {
      RngStream si = s.child(detail::kStreamDraw, i);
      double v = normal ? box_muller(si, avg, std)
                        : std::exp(box_muller(si, mu, sigma));
      i64 r = round_half_away(v);
      if (r < 1) {
        r = 1;
        floored[i] = 1;
      }
      res.cnt[i] = static_cast<u64>(r);
    }
  });

  u128 isum = 0;
  for (u64 i = 0; i < n; ++i) isum += res.cnt[i];
  double sample_avg = static_cast<double>(isum) / static_cast<double>(n);
  double ratio = avg / sample_avg;
  if (!(ratio > opts.window_lo && ratio < opts.window_hi)) {
    res.scaled = true;
    parallel_chunks(n, threads, [&](unsigned, u64 b, u64 e) {
      for (u64 i = b; i < e; ++i) {
        i64 r = round_half_away(static_cast<double>(res.cnt[i]) * ratio);
        if (r < 1) {
          r = 1;
          floored[i] = 1;
        } else {
          floored[i] = 0;
        }
        res.cnt[i] = static_cast<u64>(r);
      }
    });
  }

  u64 cap = maxv >= static_cast<double>(limit)
                ? limit
                : std::max<u64>(1, static_cast<u64>(std::floor(maxv)));
  cap = std::min(cap, limit);
  for (u64 i = 0; i < n; ++i) {
    if (res.cnt[i] > cap) {
      res.cnt[i] = cap;
      res.clamped++;
    } else if (floored[i]) {
      res.clamped++;
    }
  }

  res.ind_off.assign(n + 1, 0);
  for (u64 i = 0; i < n; ++i) res.ind_off[i + 1] = res.ind_off[i] + res.cnt[i];
  res.ind_flat.assign(res.ind_off[n], 0);
  parallel_chunks(n, threads, [&](unsigned, u64 b, u64 e) {
    for (u64 i = b; i < e; ++i) {
      RngStream si = s.child(detail::kStreamDraw, i);
      si.skip(2);  // past the value draw
      std::vector<u64> ix = rand_inds(si, res.cnt[i], limit);
      std::copy(ix.begin(), ix.end(), res.ind_flat.begin() + res.ind_off[i]);
    }
  });
  return res;
}

}  // namespace tenkit
