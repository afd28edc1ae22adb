#pragma once

#include <cstdint>
#include <vector>

#include "tenkit/common.hpp"

namespace tenkit {

// Per-mode-order structural count arrays.  For mode order <p1..pM>, a slice
// fixes the first M-2 permuted coordinates and a fiber the first M-1.
//
// INVARIANTS (for arrays produced from the same tensor and mode order)
//   sum(n_nz_slc) == sum(n_nz_fib) == nnz
//   sum(n_fib_slc) == n_nz_fib.size()
//   n_nz_slc.size() == n_fib_slc.size() == number of nonzero slices
struct CountArrays {
  std::vector<u64> n_nz_slc;   // nonzeros per nonzero slice
  std::vector<u64> n_fib_slc;  // nonzero fibers per nonzero slice
  std::vector<u64> n_nz_fib;   // nonzeros per nonzero fiber

  // Compressed identifiers (mode-order-major linearization); populated when
  // the linearized space fits u64, otherwise left empty.
  std::vector<u64> slice_ids;
  std::vector<u64> fiber_ids;

  enum class Path { kNone, kHash, kSort, kGroup } built_by = Path::kNone;
  u64 aux_words = 0;  // instrumented temporary allocation, in 64-bit words
};

}  // namespace tenkit
