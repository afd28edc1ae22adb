#pragma once

// Brute-force count extraction over dense tallies: one cell per possible
// fiber (and slice) of the permuted tensor.  Exists as the oracle the fast
// methods are checked against; the cell cap keeps it test-sized.

#include <vector>

#include "tenkit/coo.hpp"
#include "tenkit/counts.hpp"
#include "tenkit/errors.hpp"

namespace tenkit {

inline CountArrays reference_extract(const CooTensor& t, const ModeOrder& mo,
                                     u64 cap_cells = 100000000ull) {
  check_mode_order(mo, t.order());
  const std::size_t M = t.order();

  u128 slice_cells = 1, fiber_cells = 1;
  for (std::size_t m = 0; m + 2 < M; ++m) slice_cells *= t.dims[mo[m]];
  fiber_cells = slice_cells * t.dims[mo[M - 2]];
  if (fiber_cells > cap_cells)
    throw OracleCapError("dense tally needs " + std::to_string((double)fiber_cells) +
                         " cells, cap is " + std::to_string(cap_cells));
  const u64 ns = static_cast<u64>(slice_cells);
  const u64 nf = static_cast<u64>(fiber_cells);
  const u64 fdim = t.dims[mo[M - 2]];

  std::vector<u32> fib_tally(nf, 0);
  for (u64 i = 0; i < t.nnz(); ++i) {
    u64 lin = 0;
    for (std::size_t m = 0; m + 1 < M; ++m) lin = lin * t.dims[mo[m]] + t.idx[mo[m]][i];
    fib_tally[lin]++;
  }

  CountArrays out;
  std::vector<u32> slc_tally(ns, 0);
  std::vector<u32> slc_fibs(ns, 0);
  for (u64 f = 0; f < nf; ++f) {
    if (fib_tally[f] == 0) continue;
    out.n_nz_fib.push_back(fib_tally[f]);
    out.fiber_ids.push_back(f);
    slc_tally[f / fdim] += fib_tally[f];
    slc_fibs[f / fdim]++;
  }
  for (u64 s = 0; s < ns; ++s) {
    if (slc_tally[s] == 0) continue;
    out.n_nz_slc.push_back(slc_tally[s]);
    out.n_fib_slc.push_back(slc_fibs[s]);
    out.slice_ids.push_back(s);
  }
  return out;
}

}  // namespace tenkit
