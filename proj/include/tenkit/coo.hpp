#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tenkit/common.hpp"
#include "tenkit/errors.hpp"

namespace tenkit {

// Mode ids are 0-based everywhere inside the library; the 1-based convention
// exists only at the .tns / serialization boundary.
using ModeOrder = std::vector<std::size_t>;

struct CooTensor {
  std::vector<u64> dims;              // size M >= 3
  std::vector<std::vector<u64>> idx;  // M columns of length nnz, 0-based
  std::vector<double> val;            // length nnz

  std::size_t order() const { return dims.size(); }
  u64 nnz() const { return val.size(); }

  // Structural invariants minus the no-duplicate rule (checked at load time;
  // derived working tensors, e.g. mode projections, may carry duplicates).
  void check_shape() const {
    if (dims.size() < 3) throw FormatError("tensor order must be >= 3");
    if (idx.size() != dims.size()) throw FormatError("index column count != order");
    for (std::size_t m = 0; m < dims.size(); ++m) {
      if (dims[m] == 0) throw BoundsError("dimension of mode " + std::to_string(m + 1) + " is 0");
      if (idx[m].size() != val.size()) throw FormatError("index column length != nnz");
      for (u64 x : idx[m])
        if (x >= dims[m])
          throw BoundsError("index out of bounds in mode " + std::to_string(m + 1));
    }
  }
};

inline void check_mode_order(const ModeOrder& mo, std::size_t order) {
  if (mo.size() != order) throw ArityError("mode order length != tensor order");
  std::vector<u8> seen(order, 0);
  for (std::size_t m : mo) {
    if (m >= order || seen[m]) throw ArityError("mode order is not a permutation");
    seen[m] = 1;
  }
}

// Rearranges columns: result column m is input column mo[m].
inline CooTensor permute(const CooTensor& t, const ModeOrder& mo) {
  check_mode_order(mo, t.order());
  CooTensor out;
  out.dims.resize(t.order());
  out.idx.resize(t.order());
  for (std::size_t m = 0; m < t.order(); ++m) {
    out.dims[m] = t.dims[mo[m]];
    out.idx[m] = t.idx[mo[m]];
  }
  out.val = t.val;
  return out;
}

// Stable row permutation sorting by (column mo[0], ..., column mo[M-1]).
inline std::vector<u64> sort_perm(const CooTensor& t, const ModeOrder& mo) {
  check_mode_order(mo, t.order());
  std::vector<u64> perm(t.nnz());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](u64 a, u64 b) {
    for (std::size_t m : mo) {
      if (t.idx[m][a] != t.idx[m][b]) return t.idx[m][a] < t.idx[m][b];
    }
    return false;
  });
  return perm;
}

// Reorders nonzeros in place by the permuted lexicographic key; columns keep
// their identity, values travel with their coordinates.
inline CooTensor sort_by_mode_order(const CooTensor& t, const ModeOrder& mo) {
  std::vector<u64> perm = sort_perm(t, mo);
  CooTensor out;
  out.dims = t.dims;
  out.idx.assign(t.order(), {});
  out.val.resize(t.nnz());
  for (std::size_t m = 0; m < t.order(); ++m) {
    out.idx[m].resize(t.nnz());
    for (u64 i = 0; i < t.nnz(); ++i) out.idx[m][i] = t.idx[m][perm[i]];
  }
  for (u64 i = 0; i < t.nnz(); ++i) out.val[i] = t.val[perm[i]];
  return out;
}

}  // namespace tenkit
