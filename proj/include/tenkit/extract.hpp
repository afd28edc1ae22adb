#pragma once

// ============================================================================
// Structural feature extraction: four interchangeable count builders behind
// one dispatch, assembled into a FeatureSet.
//
//   sort   lexicographic sort of the permuted coordinates, then one linear
//          scan emitting fiber/slice runs.
//   group  two-level counting sort (order-3 only): bucket nonzeros by the
//          slice coordinate, then tally the grouping coordinate per slice
//          with a touched-list reset.  Needs I_p1 + I_p2 words of tally
//          space, hence the memory cap.
//   hash   TallyMap keyed on the linearized fiber coordinates; works for any
//          order and any scope, switches to 128-bit keys when the fiber key
//          space exceeds u64.
//   hybrid per mode order: group when I_p1 * I_p2 < lambda (strictly), sort
//          otherwise.  Falls back to sort (with a note) if the group tallies
//          would blow the cap.
//
// All builders emit identical CountArrays (ids ascending in the mode-order
// linearization) whenever the fiber key space fits u64; statistics are always
// bit-identical because they are reduced with order-independent integer
// accumulators downstream.
// ============================================================================

#include <algorithm>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include "tenkit/coo.hpp"
#include "tenkit/counts.hpp"
#include "tenkit/errors.hpp"
#include "tenkit/feature_set.hpp"
#include "tenkit/parallel.hpp"
#include "tenkit/stats.hpp"
#include "tenkit/tally.hpp"

namespace tenkit {

enum class Method { kHash, kSort, kGroup, kHybrid };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kHash: return "hash";
    case Method::kSort: return "sort";
    case Method::kGroup: return "group";
    case Method::kHybrid: return "hybrid";
  }
  return "?";
}

inline Method method_from_name(const std::string& s) {
  if (s == "hash") return Method::kHash;
  if (s == "sort") return Method::kSort;
  if (s == "group") return Method::kGroup;
  if (s == "hybrid") return Method::kHybrid;
  throw ParseError("unknown method '" + s + "'");
}

struct ExtractOptions {
  Method method = Method::kHybrid;
  Scope scope = Scope::kAllModes;
  double lambda = 1e11;
  unsigned threads = 1;
  // Word budget for the group builder's dense tallies (cnt1/offsets/cnt2).
  u64 group_cap_words = 250'000'000;
};

// I_p1 * I_p2 for the hybrid decision: the product of the slice-fixed dims
// times the grouping dim.  In doubles on purpose; only the magnitude matters.
inline double dispatch_metric(const CooTensor& t, const ModeOrder& mo) {
  double p = 1.0;
  for (std::size_t m = 0; m + 2 < t.order(); ++m) p *= static_cast<double>(t.dims[mo[m]]);
  return p * static_cast<double>(t.dims[mo[t.order() - 2]]);
}

namespace detail {

// Fiber key space (product of all permuted dims except the last).
inline u128 fiber_space(const CooTensor& t, const ModeOrder& mo) {
  u128 p = 1;
  for (std::size_t m = 0; m + 1 < t.order(); ++m) {
    u64 d = t.dims[mo[m]];
    if (p > ~u128{0} / d) throw OverflowError("fiber key space exceeds 128 bits");
    p *= d;
  }
  return p;
}

template <class K>
inline K fiber_key(const CooTensor& t, const ModeOrder& mo, u64 row) {
  K lin = 0;
  for (std::size_t m = 0; m + 1 < t.order(); ++m)
    lin = lin * t.dims[mo[m]] + t.idx[mo[m]][row];
  return lin;
}

// Sorted (fiber key, count) pairs -> the three count arrays.  Slices are runs
// of key / I_o where I_o is the last keyed dim.
template <class K>
inline void emit_from_fiber_pairs(std::vector<std::pair<K, u64>>& pairs, u64 last_dim,
                                  bool want_ids, CountArrays& out) {
  std::sort(pairs.begin(), pairs.end());
  out.n_nz_fib.reserve(pairs.size());
  if (want_ids) out.fiber_ids.reserve(pairs.size());
  std::size_t i = 0;
  while (i < pairs.size()) {
    K slice = pairs[i].first / last_dim;
    u64 nz = 0, fibs = 0;
    for (; i < pairs.size() && pairs[i].first / last_dim == slice; ++i) {
      out.n_nz_fib.push_back(pairs[i].second);
      if (want_ids) out.fiber_ids.push_back(static_cast<u64>(pairs[i].first));
      nz += pairs[i].second;
      fibs++;
    }
    out.n_nz_slc.push_back(nz);
    out.n_fib_slc.push_back(fibs);
    if (want_ids) out.slice_ids.push_back(static_cast<u64>(slice));
  }
}

template <class K>
inline CountArrays hash_counts(const CooTensor& t, const ModeOrder& mo, unsigned threads) {
  const u64 n = t.nnz();
  std::vector<TallyMap<K>> maps(threads ? threads : 1);
  parallel_chunks(n, threads, [&](unsigned worker, u64 begin, u64 end) {
    TallyMap<K>& m = maps[worker];
    for (u64 i = begin; i < end; ++i) m.add(fiber_key<K>(t, mo, i), 1);
  });
  for (std::size_t w = 1; w < maps.size(); ++w) maps[0].merge(maps[w]);

  std::vector<std::pair<K, u64>> pairs;
  pairs.reserve(maps[0].size());
  maps[0].visit([&](K k, u64 v) { pairs.emplace_back(k, v); });

  CountArrays out;
  out.built_by = CountArrays::Path::kHash;
  for (const auto& m : maps) out.aux_words += m.words();
  out.aux_words += static_cast<u64>(pairs.capacity()) * sizeof(pairs[0]) / 8;
  bool want_ids = fiber_space(t, mo) <= u128{~u64{0}};
  emit_from_fiber_pairs(pairs, t.dims[mo[t.order() - 2]], want_ids, out);
  return out;
}

// Whether the group builder's dense tallies fit the word budget.
inline bool group_fits(u64 I1, u64 I2, u64 nnz, u64 cap_words) {
  return I1 <= cap_words && I2 <= cap_words && nnz <= cap_words &&
         2 * I1 + I2 + nnz + 1 <= cap_words;
}

}  // namespace detail

inline CountArrays build_counts_hash(const CooTensor& t, const ModeOrder& mo,
                                     unsigned threads = 1) {
  check_mode_order(mo, t.order());
  threads = resolve_threads(threads);
  if (detail::fiber_space(t, mo) <= u128{~u64{0}})
    return detail::hash_counts<u64>(t, mo, threads);
  return detail::hash_counts<u128>(t, mo, threads);
}

inline CountArrays build_counts_sort(const CooTensor& t, const ModeOrder& mo) {
  check_mode_order(mo, t.order());
  const std::size_t M = t.order();
  const u64 n = t.nnz();
  std::vector<u64> perm = sort_perm(t, mo);

  CountArrays out;
  out.built_by = CountArrays::Path::kSort;
  out.aux_words = n;  // the permutation
  const bool want_ids = detail::fiber_space(t, mo) <= u128{~u64{0}};

  auto same_prefix = [&](u64 a, u64 b, std::size_t upto) {
    for (std::size_t m = 0; m < upto; ++m)
      if (t.idx[mo[m]][a] != t.idx[mo[m]][b]) return false;
    return true;
  };
  auto pack = [&](u64 row, std::size_t upto) {
    u64 lin = 0;
    for (std::size_t m = 0; m < upto; ++m) lin = lin * t.dims[mo[m]] + t.idx[mo[m]][row];
    return lin;
  };

  u64 i = 0;
  while (i < n) {
    u64 slice_nz = 0, slice_fibs = 0;
    u64 s = i;
    while (i < n && same_prefix(perm[s], perm[i], M - 2)) {
      u64 f = i;
      u64 fib_nz = 0;
      while (i < n && same_prefix(perm[f], perm[i], M - 1)) {
        fib_nz++;
        i++;
      }
      out.n_nz_fib.push_back(fib_nz);
      if (want_ids) out.fiber_ids.push_back(pack(perm[f], M - 1));
      slice_nz += fib_nz;
      slice_fibs++;
    }
    out.n_nz_slc.push_back(slice_nz);
    out.n_fib_slc.push_back(slice_fibs);
    if (want_ids) out.slice_ids.push_back(pack(perm[s], M - 2));
  }
  return out;
}

inline CountArrays build_counts_group(const CooTensor& t, const ModeOrder& mo,
                                      u64 cap_words = 250'000'000) {
  check_mode_order(mo, t.order());
  if (t.order() != 3)
    throw UnsupportedCombination("group builder handles order-3 tensors only");
  const u64 I1 = t.dims[mo[0]], I2 = t.dims[mo[1]];
  const u64 n = t.nnz();
  if (!detail::group_fits(I1, I2, n, cap_words))
    throw GroupingMemoryError("group tallies for dims " + std::to_string(I1) + "x" +
                              std::to_string(I2) + " exceed the cap of " +
                              std::to_string(cap_words) + " words");

  const auto& c1 = t.idx[mo[0]];
  const auto& c2 = t.idx[mo[1]];

  // Pass 1: nonzeros per slice, then exclusive prefix as scatter offsets.
  std::vector<u64> cnt1(I1, 0);
  for (u64 i = 0; i < n; ++i) cnt1[c1[i]]++;
  u64 max_slice = 0;
  std::vector<u64> off(I1 + 1, 0);
  for (u64 s = 0; s < I1; ++s) {
    off[s + 1] = off[s] + cnt1[s];
    max_slice = std::max(max_slice, cnt1[s]);
  }

  // Pass 2: group nonzero row ids by slice.
  std::vector<u64> grouped(n);
  {
    std::vector<u64> cursor(off.begin(), off.end() - 1);
    for (u64 i = 0; i < n; ++i) grouped[cursor[c1[i]]++] = i;
    // cursor is freed here; it still counts toward the instrumented footprint.
  }

  // Pass 3: per slice, tally the grouping coordinate; reset only touched cells.
  std::vector<u64> cnt2(I2, 0);
  std::vector<u64> touched;
  touched.reserve(static_cast<std::size_t>(std::min(I2, max_slice)));

  CountArrays out;
  out.built_by = CountArrays::Path::kGroup;
  for (u64 s = 0; s < I1; ++s) {
    if (cnt1[s] == 0) continue;
    touched.clear();
    for (u64 g = off[s]; g < off[s + 1]; ++g) {
      u64 c = c2[grouped[g]];
      if (cnt2[c] == 0) touched.push_back(c);
      cnt2[c]++;
    }
    std::sort(touched.begin(), touched.end());
    for (u64 c : touched) {
      out.n_nz_fib.push_back(cnt2[c]);
      out.fiber_ids.push_back(s * I2 + c);
      cnt2[c] = 0;
    }
    out.n_nz_slc.push_back(cnt1[s]);
    out.n_fib_slc.push_back(touched.size());
    out.slice_ids.push_back(s);
  }
  out.aux_words = cnt1.size() + off.size() + I1 /*cursor*/ + grouped.size() + cnt2.size() +
                  touched.capacity();
  return out;
}

// Runs one mode order under the requested method; hybrid resolves to group or
// sort here.  `notes` (optional) records hybrid cap fallbacks.
inline CountArrays extract_counts(const CooTensor& t, const ModeOrder& mo,
                                  const ExtractOptions& opts,
                                  std::vector<std::string>* notes = nullptr) {
  switch (opts.method) {
    case Method::kHash: return build_counts_hash(t, mo, opts.threads);
    case Method::kSort: return build_counts_sort(t, mo);
    case Method::kGroup: return build_counts_group(t, mo, opts.group_cap_words);
    case Method::kHybrid: break;
  }
  if (t.order() == 3 && dispatch_metric(t, mo) < opts.lambda) {
    if (detail::group_fits(t.dims[mo[0]], t.dims[mo[1]], t.nnz(), opts.group_cap_words))
      return build_counts_group(t, mo, opts.group_cap_words);
    if (notes)
      notes->push_back("group_cap_fallback_sort:mode_order=" + std::to_string(mo[0] + 1) + "," +
                       std::to_string(mo[1] + 1) + "," + std::to_string(mo[2] + 1));
  }
  return build_counts_sort(t, mo);
}

// One extraction pass: which mode order to run and how to label the blocks it
// produces (labels are original 1-based mode ids).
struct RunPlan {
  ModeOrder mo;
  std::array<u32, 2> pair;  // slice pair, ascending
  u32 fiber_mode = 0;
  bool emit_fiber = true;  // nz_per_fiber blocks are deduplicated across runs
};

// Cyclic shifts of the (possibly relabeled) base <1,2,3>.
inline std::vector<RunPlan> plan_runs_3(const std::array<u32, 3>& lbl) {
  std::vector<RunPlan> runs;
  for (std::size_t s = 0; s < 3; ++s) {
    RunPlan r;
    r.mo = {s, (s + 1) % 3, (s + 2) % 3};
    u32 a = lbl[r.mo[1]], b = lbl[r.mo[2]];
    r.pair = {std::min(a, b), std::max(a, b)};
    r.fiber_mode = lbl[r.mo[2]];
    runs.push_back(r);
  }
  return runs;
}

// All-modes scope for order > 3: one run per slice pair {k,l}; the paired
// fiber mode is l, except the wraparound pair {1,M} which pairs with 1.  The
// nz_per_fiber block for mode m is emitted by its canonical pair ({m-1,m},
// and {1,M} for m = 1).
inline std::vector<RunPlan> plan_runs_all(std::size_t M) {
  std::vector<RunPlan> runs;
  for (u32 k = 1; k <= M; ++k) {
    for (u32 l = k + 1; l <= M; ++l) {
      RunPlan r;
      r.pair = {k, l};
      r.fiber_mode = (k == 1 && l == static_cast<u32>(M)) ? 1 : l;
      u32 other = (r.fiber_mode == k) ? l : k;
      for (u32 m = 1; m <= M; ++m)
        if (m != k && m != l) r.mo.push_back(m - 1);
      r.mo.push_back(other - 1);
      r.mo.push_back(r.fiber_mode - 1);
      r.emit_fiber = (r.fiber_mode == 1) ? (k == 1 && l == static_cast<u32>(M))
                                         : (k + 1 == l && l == r.fiber_mode);
      runs.push_back(r);
    }
  }
  return runs;
}

// Projection onto the three largest modes, multiplicity preserved.  Column
// order is by descending size, so the projected base <1,2,3> is the
// size-descending base of the originals.
inline CooTensor project_top3(const CooTensor& t, const std::array<std::size_t, 3>& modes) {
  CooTensor p;
  p.dims = {t.dims[modes[0]], t.dims[modes[1]], t.dims[modes[2]]};
  p.idx = {t.idx[modes[0]], t.idx[modes[1]], t.idx[modes[2]]};
  p.val = t.val;
  return p;
}

inline FeatureSet extract(const CooTensor& t, const ExtractOptions& opts = {}) {
  t.check_shape();
  const std::size_t M = t.order();

  FeatureSet fs;
  fs.meta.method = method_name(opts.method);
  fs.meta.scope = scope_name(opts.scope);
  fs.meta.lambda = opts.lambda;

  const bool top3 = opts.scope == Scope::kTop3;
  if (!top3 && M > 3 && opts.method != Method::kHash)
    throw UnsupportedCombination(
        "scope 'all' on order>3 tensors requires the hash method (got " +
        std::string(method_name(opts.method)) + ")");

  CooTensor proj;
  const CooTensor* w = &t;
  std::vector<RunPlan> runs;
  if (top3) {
    auto m3 = largest3_modes(t.dims);
    proj = project_top3(t, m3);
    w = &proj;
    runs = plan_runs_3({static_cast<u32>(m3[0] + 1), static_cast<u32>(m3[1] + 1),
                        static_cast<u32>(m3[2] + 1)});
  } else if (M == 3) {
    runs = plan_runs_3({1, 2, 3});
  } else {
    runs = plan_runs_all(M);
  }

  for (const RunPlan& r : runs) {
    CountArrays ca = extract_counts(*w, r.mo, opts, &fs.meta.notes);

    std::vector<u64> fixed;
    for (std::size_t m = 0; m + 2 < w->order(); ++m) fixed.push_back(w->dims[r.mo[m]]);
    const u64 n_slc = prod_u64_checked(fixed, "slice count");
    fixed.push_back(w->dims[r.mo[w->order() - 2]]);
    const u64 n_fib = prod_u64_checked(fixed, "fiber count");

    Block bs;
    bs.kind = Kind::kNzPerSlice;
    bs.modes = r.pair;
    bs.stats = compute_kind_stats(ca.n_nz_slc, n_slc);
    fs.blocks.push_back(bs);

    Block bf;
    bf.kind = Kind::kFibPerSlice;
    bf.modes = r.pair;
    bf.fiber_mode = r.fiber_mode;
    bf.stats = compute_kind_stats(ca.n_fib_slc, n_slc);
    fs.blocks.push_back(bf);

    if (r.emit_fiber) {
      Block bn;
      bn.kind = Kind::kNzPerFiber;
      bn.modes = {r.fiber_mode, 0};
      bn.stats = compute_kind_stats(ca.n_nz_fib, n_fib);
      fs.blocks.push_back(bn);
    }
  }

  fs.sort_blocks();
  fs.global = compute_global(t.dims, t.nnz(), fs.blocks);
  fs.refresh_quality_flags();
  return fs;
}

}  // namespace tenkit
