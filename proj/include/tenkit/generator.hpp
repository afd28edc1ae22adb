#pragma once

// ============================================================================
// Synthetic tensor generation.  An order-M tensor (M >= 3) is built in three
// stages along the canonical axes <slice, fiber-position, nonzero-position>,
// where a slice fixes the first M-2 modes and a fiber the first M-1:
//
//   1. pick which slices are nonzero (exact count, density-tiered selection
//      over the linearized first M-2 modes),
//   2. distribute fiber counts over those slices and draw each slice's
//      distinct mode-(M-1) positions,
//   3. distribute nonzero counts over the realized fibers and draw each
//      fiber's distinct mode-M positions; values are uniform in (0,1).
//
// Every entity owns a counter-addressed stream (slice picker = child 1,
// fiber stage = child 2, nonzero stage = child 3, values = child 4 indexed
// by global fiber number), so regenerating with one parameter perturbed
// reuses the same underlying draws: paired runs differ only through the
// parameter, not through sampling noise.
//
// The emitted COO rows are ordered by construction: slice ids ascending,
// positions ascending within slice and fiber.  No duplicate coordinates can
// arise (positions are distinct per entity by construction).
// ============================================================================

#include <array>
#include <string>
#include <vector>

#include "tenkit/coo.hpp"
#include "tenkit/errors.hpp"
#include "tenkit/feature_set.hpp"
#include "tenkit/rng.hpp"
#include "tenkit/stats.hpp"

namespace tenkit {

struct GeneratorSpec {
  std::vector<u64> dims;  // three or more modes
  double d_slc = 1.0;     // fraction of nonzero slices (first M-2 modes fixed)
  double avg_fib = 1.0;   // mean fibers per nonzero slice
  double cv_fib = 0.0;
  double imbal_fib = 0.0;  // (max - avg) / max
  double avg_nz = 1.0;     // mean nonzeros per nonzero fiber
  double cv_nz = 0.0;
  double imbal_nz = 0.0;
  u64 seed = 0;
  unsigned threads = 1;
};

struct GenStats {
  u64 nslc = 0, nfib = 0, nnz = 0;
  u64 clamped_fib = 0, clamped_nz = 0;
  bool scaled_fib = false, scaled_nz = false;
  bool infeasible_average = false;

  double clamp_frac_fib() const { return nslc ? double(clamped_fib) / double(nslc) : 0.0; }
  double clamp_frac_nz() const { return nfib ? double(clamped_nz) / double(nfib) : 0.0; }
};

struct GenResult {
  CooTensor tensor;
  GenStats stats;
};

namespace detail {
// Stream kinds hanging off the generator root stream.
constexpr u64 kStreamSlice = 1;
constexpr u64 kStreamFiber = 2;
constexpr u64 kStreamNz = 3;
constexpr u64 kStreamValue = 4;
}  // namespace detail

inline void validate_spec(const GeneratorSpec& spec) {
  if (spec.dims.size() < 3)
    throw UnsupportedOrderError("generation needs at least order 3, got order " +
                                std::to_string(spec.dims.size()));
  for (u64 d : spec.dims)
    if (d == 0) throw DomainError("generator dims must be positive");
  if (!(spec.d_slc > 0.0 && spec.d_slc <= 1.0))
    throw DomainError("d_slc must lie in (0, 1]");
  for (double v : {spec.avg_fib, spec.avg_nz})
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("averages must be finite and >= 0");
  for (double v : {spec.cv_fib, spec.cv_nz})
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("cv must be finite and >= 0");
  for (double v : {spec.imbal_fib, spec.imbal_nz})
    if (!(v >= 0.0 && v < 1.0)) throw DomainError("imbalance must lie in [0, 1)");
}

// Per-stage distribution parameters, derived once and fed to distribute().
struct StageParams {
  u64 entries = 0;  // how many entities receive a count
  double avg = 0, std = 0, max = 0;
  u64 limit = 0;  // positions available per entity
};

// Number of slice cells: the linearized extent of the first M-2 modes.
inline u64 slice_space(const GeneratorSpec& spec) {
  const std::size_t m = spec.dims.size();
  return prod_u64_checked({spec.dims.data(), m - 2}, "slice space");
}

inline StageParams derive_slice_params(const GeneratorSpec& spec) {
  const std::size_t m = spec.dims.size();
  const u64 space = slice_space(spec);
  StageParams p;
  p.entries = static_cast<u64>(round_half_away(spec.d_slc * double(space)));
  if (p.entries > space) p.entries = space;
  if (p.entries == 0)
    throw EmptySpecError("d_slc=" + format_double_shortest(spec.d_slc) + " rounds to 0 slices");
  p.avg = spec.avg_fib;
  p.std = spec.cv_fib * spec.avg_fib;
  p.max = spec.avg_fib / (1.0 - spec.imbal_fib);
  p.limit = spec.dims[m - 2];
  if (p.avg < 1.0)
    throw InfeasibleSpecError("avg_fib < 1: every nonzero slice needs at least one fiber");
  if (p.avg > double(p.limit))
    throw InfeasibleSpecError("avg_fib=" + format_double_shortest(p.avg) + " exceeds dim " +
                              std::to_string(m - 1) + " (" + std::to_string(p.limit) + ")");
  return p;
}

inline StageParams derive_fiber_params(const GeneratorSpec& spec, u64 realized_nfib) {
  const std::size_t m = spec.dims.size();
  StageParams p;
  p.entries = realized_nfib;
  p.avg = spec.avg_nz;
  p.std = spec.cv_nz * spec.avg_nz;
  p.max = spec.avg_nz / (1.0 - spec.imbal_nz);
  p.limit = spec.dims[m - 1];
  if (p.avg < 1.0)
    throw InfeasibleSpecError("avg_nz < 1: every nonzero fiber needs at least one entry");
  if (p.avg > double(p.limit))
    throw InfeasibleSpecError("avg_nz=" + format_double_shortest(p.avg) + " exceeds dim " +
                              std::to_string(m) + " (" + std::to_string(p.limit) + ")");
  return p;
}

// Exactly n distinct 1-based slice ids out of [1, limit], ascending.  The
// strategy tiers on density: near-full tensors skip sampling entirely, dense
// ones sample the complement, the middle band does one corrected sequential
// scan, and sparse picks fall through to rand_inds' rejection sampling.
inline std::vector<u64> slice_indices(RngStream g, u64 n, u64 limit) {
  if (n > limit) throw CapacityError("more nonzero slices than slices");
  const double d = double(n) / double(limit);
  std::vector<u64> ids;
  if (d > 0.97) {
    ids.resize(limit);
    for (u64 i = 0; i < limit; ++i) ids[i] = i + 1;
    return ids;  // treated as fully dense; the count error is < 3%
  }
  if (d > 0.5) {
    std::vector<u64> empty = rand_inds(g, limit - n, limit);
    ids.reserve(n);
    std::size_t e = 0;
    for (u64 i = 1; i <= limit; ++i) {
      if (e < empty.size() && empty[e] == i) {
        e++;
        continue;
      }
      ids.push_back(i);
    }
    return ids;
  }
  if (d >= 0.1) {
    // Sequential selection: include slot i with prob (still needed / left).
    ids.reserve(n);
    u64 need = n;
    for (u64 i = 1; i <= limit && need > 0; ++i) {
      u64 left = limit - i + 1;
      if (g.next_index(left) < need) {
        ids.push_back(i);
        need--;
      }
    }
    return ids;
  }
  return rand_inds(g, n, limit);
}

inline GenResult generate(const GeneratorSpec& spec) {
  validate_spec(spec);
  const RngStream root(spec.seed, 0);
  const std::size_t order = spec.dims.size();
  GenResult res;
  res.tensor.dims = spec.dims;
  res.tensor.idx.assign(order, {});

  const StageParams sp = derive_slice_params(spec);
  std::vector<u64> slices =
      slice_indices(root.child(detail::kStreamSlice, 0), sp.entries, slice_space(spec));

  DistributeOptions dopt;
  dopt.threads = spec.threads;
  DistributeResult fib = distribute(root.child(detail::kStreamFiber, 0), slices.size(),
                                    sp.avg, sp.std, sp.max, sp.limit, dopt);

  u64 nfib = 0;
  for (u64 c : fib.cnt) nfib += c;
  const StageParams np = derive_fiber_params(spec, nfib);
  DistributeResult nz = distribute(root.child(detail::kStreamNz, 0), nfib, np.avg, np.std,
                                   np.max, np.limit, dopt);

  u64 nnz = 0;
  for (u64 c : nz.cnt) nnz += c;
  for (std::size_t m = 0; m < order; ++m) res.tensor.idx[m].reserve(nnz);
  res.tensor.val.reserve(nnz);

  std::vector<u64> head(order - 2);  // unranked slice coordinates, 0-based
  u64 j = 0;                         // global fiber number
  for (std::size_t i = 0; i < slices.size(); ++i) {
    u64 cell = slices[i] - 1;  // slice ids are 1-based within the linear space
    for (std::size_t m = order - 2; m-- > 0;) {
      head[m] = cell % spec.dims[m];
      cell /= spec.dims[m];
    }
    for (u64 c2 : fib.inds(i)) {
      RngStream vals = root.child(detail::kStreamValue, j);
      for (u64 c3 : nz.inds(j)) {
        for (std::size_t m = 0; m + 2 < order; ++m) res.tensor.idx[m].push_back(head[m]);
        res.tensor.idx[order - 2].push_back(c2 - 1);
        res.tensor.idx[order - 1].push_back(c3 - 1);
        res.tensor.val.push_back(vals.next_unit_oo());
      }
      j++;
    }
  }

  res.stats.nslc = slices.size();
  res.stats.nfib = nfib;
  res.stats.nnz = nnz;
  res.stats.clamped_fib = fib.clamped;
  res.stats.clamped_nz = nz.clamped;
  res.stats.scaled_fib = fib.scaled;
  res.stats.scaled_nz = nz.scaled;
  res.stats.infeasible_average = fib.infeasible_average || nz.infeasible_average;
  return res;
}

// Recovers a GeneratorSpec from extracted features.  The generation axes are
// the canonical modes <1,2,3> for scope 'all' files and the three largest
// modes for scope 'top3'; the slice stage reads the {axis2, axis3} pair with
// its paired fiber family.  `dims_override` (if nonempty) replaces the axis
// dims, e.g. to rescale.
inline GeneratorSpec spec_from_features(const FeatureSet& fs,
                                        const std::vector<u64>& dims_override = {}) {
  std::array<u32, 3> axes{1, 2, 3};
  if (fs.meta.scope == scope_name(Scope::kTop3)) {
    auto m3 = largest3_modes(fs.global.dims);
    axes = {u32(m3[0] + 1), u32(m3[1] + 1), u32(m3[2] + 1)};
  } else if (fs.global.dims.size() != 3) {
    throw IncompleteFeatureError("scope 'all' feature sets must be order 3 to drive generation");
  }
  const u32 pk = std::min(axes[1], axes[2]), pl = std::max(axes[1], axes[2]);

  const Block* nz_slc = nullptr;
  const Block* fib_slc = nullptr;
  const Block* nz_fib = nullptr;
  for (const Block& b : fs.blocks) {
    if (b.kind == Kind::kNzPerSlice && b.modes == std::array<u32, 2>{pk, pl}) nz_slc = &b;
    if (b.kind == Kind::kFibPerSlice && b.modes == std::array<u32, 2>{pk, pl} &&
        b.fiber_mode == axes[2])
      fib_slc = &b;
    if (b.kind == Kind::kNzPerFiber && b.modes[0] == axes[2]) nz_fib = &b;
  }
  if (!nz_slc || !fib_slc || !nz_fib)
    throw IncompleteFeatureError(
        "feature set lacks the {" + std::to_string(pk) + "-" + std::to_string(pl) +
        "} slice pair with fiber mode " + std::to_string(axes[2]) +
        " needed to drive generation");

  GeneratorSpec spec;
  spec.dims = {fs.global.dims[axes[0] - 1], fs.global.dims[axes[1] - 1],
               fs.global.dims[axes[2] - 1]};
  if (!dims_override.empty()) {
    if (dims_override.size() != 3)
      throw DomainError("dims override must have exactly three modes");
    spec.dims = dims_override;
  }
  spec.d_slc = nz_slc->stats.nz_density;
  spec.avg_fib = fib_slc->stats.avg_nz;
  spec.cv_fib = fib_slc->stats.cv_nz;
  spec.imbal_fib = fib_slc->stats.imbal_nz;
  spec.avg_nz = nz_fib->stats.avg_nz;
  spec.cv_nz = nz_fib->stats.cv_nz;
  spec.imbal_nz = nz_fib->stats.imbal_nz;
  return spec;
}

}  // namespace tenkit
