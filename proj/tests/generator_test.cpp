#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "tenkit/extract.hpp"
#include "tenkit/frostt.hpp"
#include "tenkit/generator.hpp"

using namespace tenkit;

namespace {

GeneratorSpec base_spec() {
  GeneratorSpec s;
  s.dims = {100, 40, 30};
  s.d_slc = 0.7;
  s.avg_fib = 5;
  s.cv_fib = 0.8;
  s.imbal_fib = 0.7;
  s.avg_nz = 4;
  s.cv_nz = 0.6;
  s.imbal_nz = 0.6;
  s.seed = 42;
  return s;
}

TEST(Derive, SliceStageWorkedExample) {
  GeneratorSpec s;
  s.dims = {10, 20, 30};
  s.d_slc = 0.5;
  s.avg_fib = 4;
  s.cv_fib = 1.0;
  s.imbal_fib = 0.5;
  s.avg_nz = 2;
  StageParams p = derive_slice_params(s);
  EXPECT_EQ(p.entries, 5u);
  EXPECT_DOUBLE_EQ(p.avg, 4.0);
  EXPECT_DOUBLE_EQ(p.std, 4.0);
  EXPECT_DOUBLE_EQ(p.max, 8.0);
  EXPECT_EQ(p.limit, 20u);
}

TEST(Derive, Errors) {
  GeneratorSpec s = base_spec();
  s.dims = {10, 4, 5};
  s.avg_fib = 5;  // more fibers per slice than dim 2 admits
  EXPECT_THROW(derive_slice_params(s), InfeasibleSpecError);
  s.avg_fib = 0.5;
  EXPECT_THROW(derive_slice_params(s), InfeasibleSpecError);
  s.avg_fib = 2;
  s.d_slc = 1e-9;
  EXPECT_THROW(derive_slice_params(s), EmptySpecError);

  GeneratorSpec f = base_spec();
  f.avg_nz = 50;  // exceeds dim 3
  EXPECT_THROW(derive_fiber_params(f, 10), InfeasibleSpecError);

  GeneratorSpec v = base_spec();
  v.dims = {4, 4};
  EXPECT_THROW(validate_spec(v), UnsupportedOrderError);
  v = base_spec();
  v.d_slc = 0.0;
  EXPECT_THROW(validate_spec(v), DomainError);
  v = base_spec();
  v.imbal_nz = 1.0;
  EXPECT_THROW(validate_spec(v), DomainError);
}

TEST(SliceIndices, DensityTiers) {
  RngStream g(9, 9);
  // > 0.97: everything, without consuming randomness.
  std::vector<u64> all = slice_indices(g, 9, 9);
  ASSERT_EQ(all.size(), 9u);
  for (u64 i = 0; i < 9; ++i) EXPECT_EQ(all[i], i + 1);
  EXPECT_EQ(slice_indices(g, 98, 100).size(), 100u);

  for (auto [n, limit] : std::vector<std::pair<u64, u64>>{
           {60, 100}, {30, 100}, {50, 1000}, {1, 17}, {17, 17}}) {
    std::vector<u64> ids = slice_indices(RngStream(33, n), n, limit);
    double d = double(n) / double(limit);
    if (d > 0.97) continue;
    ASSERT_EQ(ids.size(), n) << n << "/" << limit;
    EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
    std::set<u64> uniq(ids.begin(), ids.end());
    EXPECT_EQ(uniq.size(), n);
    EXPECT_GE(ids.front(), 1u);
    EXPECT_LE(ids.back(), limit);
  }
  EXPECT_THROW(slice_indices(g, 5, 4), CapacityError);
}

TEST(SliceIndices, MidBandIsUniform) {
  // Sequential corrected selection should hit every slot equally often.
  const u64 limit = 20, n = 8, reps = 4000;
  std::vector<u64> freq(limit, 0);
  for (u64 r = 0; r < reps; ++r)
    for (u64 id : slice_indices(RngStream(7, r), n, limit)) freq[id - 1]++;
  for (u64 f : freq) EXPECT_NEAR(double(f) / reps, 0.4, 0.035);
}

TEST(Generate, DenseCubeComesOutFull) {
  GeneratorSpec s;
  s.dims = {4, 4, 4};
  s.d_slc = 1.0;
  s.avg_fib = 4;
  s.avg_nz = 4;
  GenResult r = generate(s);
  EXPECT_EQ(r.stats.nslc, 4u);
  EXPECT_EQ(r.stats.nfib, 16u);
  EXPECT_EQ(r.stats.nnz, 64u);
  EXPECT_EQ(r.tensor.nnz(), 64u);
  EXPECT_EQ(r.stats.clamped_fib, 0u);
  EXPECT_EQ(r.stats.clamped_nz, 0u);
  std::set<std::array<u64, 3>> coords;
  for (u64 i = 0; i < 64; ++i)
    coords.insert({r.tensor.idx[0][i], r.tensor.idx[1][i], r.tensor.idx[2][i]});
  EXPECT_EQ(coords.size(), 64u);
}

TEST(Generate, HigherOrderUnranksSliceCells) {
  GeneratorSpec s;
  s.dims = {6, 5, 4, 8, 7};  // slice space 6*5*4 = 120 cells
  s.d_slc = 0.5;
  s.avg_fib = 3;
  s.cv_fib = 0.4;
  s.imbal_fib = 0.5;
  s.avg_nz = 2;
  s.cv_nz = 0.3;
  s.imbal_nz = 0.3;
  s.seed = 11;
  GenResult r = generate(s);
  const CooTensor& t = r.tensor;
  t.check_shape();
  ASSERT_EQ(t.order(), 5u);
  EXPECT_EQ(r.stats.nslc, 60u);  // exactly round(0.5 * 120)

  std::set<std::array<u64, 3>> slice_cells;
  std::set<std::array<u64, 4>> fiber_cells;
  for (u64 i = 0; i < t.nnz(); ++i) {
    for (int m = 0; m < 5; ++m) EXPECT_LT(t.idx[m][i], s.dims[m]);
    slice_cells.insert({t.idx[0][i], t.idx[1][i], t.idx[2][i]});
    fiber_cells.insert({t.idx[0][i], t.idx[1][i], t.idx[2][i], t.idx[3][i]});
    if (i + 1 < t.nnz()) {
      std::array<u64, 5> a, b;
      for (int m = 0; m < 5; ++m) {
        a[m] = t.idx[m][i];
        b[m] = t.idx[m][i + 1];
      }
      EXPECT_LT(a, b);
    }
  }
  EXPECT_EQ(slice_cells.size(), r.stats.nslc);
  EXPECT_EQ(fiber_cells.size(), r.stats.nfib);
  EXPECT_EQ(t.nnz(), r.stats.nnz);

  // The identity mode-order's count arrays must agree with the stage totals.
  ExtractOptions o;
  o.method = Method::kHash;
  CountArrays ca = extract_counts(t, {0, 1, 2, 3, 4}, o);
  EXPECT_EQ(ca.n_nz_slc.size(), r.stats.nslc);
  EXPECT_EQ(ca.n_nz_fib.size(), r.stats.nfib);
  EXPECT_EQ(ca.n_fib_slc.size(), r.stats.nslc);
}

TEST(Generate, DeterministicAndSeedSensitive) {
  GeneratorSpec s = base_spec();
  GenResult a = generate(s);
  GenResult b = generate(s);
  EXPECT_EQ(a.tensor.idx, b.tensor.idx);
  EXPECT_EQ(a.tensor.val, b.tensor.val);

  s.threads = 4;
  GenResult c = generate(s);
  EXPECT_EQ(a.tensor.idx, c.tensor.idx);
  EXPECT_EQ(a.tensor.val, c.tensor.val);

  s.threads = 1;
  s.seed = 43;
  GenResult d = generate(s);
  EXPECT_NE(a.tensor.idx, d.tensor.idx);
}

TEST(Generate, RowsAreSortedDistinctAndInRange) {
  GenResult r = generate(base_spec());
  const CooTensor& t = r.tensor;
  ASSERT_GT(t.nnz(), 0u);
  t.check_shape();
  for (u64 i = 0; i + 1 < t.nnz(); ++i) {
    std::array<u64, 3> a{t.idx[0][i], t.idx[1][i], t.idx[2][i]};
    std::array<u64, 3> b{t.idx[0][i + 1], t.idx[1][i + 1], t.idx[2][i + 1]};
    EXPECT_LT(a, b);  // strictly increasing: sorted and duplicate-free
  }
  for (double v : t.val) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Generate, RealizedMomentsTrackTargets) {
  GeneratorSpec s;
  s.dims = {400, 60, 50};
  s.d_slc = 0.5;
  s.avg_fib = 8;
  s.cv_fib = 0.5;
  s.imbal_fib = 0.8;
  s.avg_nz = 6;
  s.cv_nz = 0.5;
  s.imbal_nz = 0.8;
  s.seed = 7;
  GenResult r = generate(s);
  EXPECT_EQ(r.stats.nslc, 200u);  // exact: round(0.5 * 400)
  double fib_avg = double(r.stats.nfib) / double(r.stats.nslc);
  double nz_avg = double(r.stats.nnz) / double(r.stats.nfib);
  EXPECT_NEAR(fib_avg, 8.0, 0.64);
  EXPECT_NEAR(nz_avg, 6.0, 0.48);
  EXPECT_LT(r.stats.clamp_frac_fib(), 0.05);
  EXPECT_LT(r.stats.clamp_frac_nz(), 0.05);
}

TEST(Generate, NnzStableAcrossSeeds) {
  // Stage sample means concentrate as 1/sqrt(entities); at 1e4 slices the
  // across-seed drift of nnz sits well inside the 1% band.
  GeneratorSpec s = base_spec();
  s.dims = {20000, 100, 60};
  s.d_slc = 0.5;
  s.avg_fib = 5;
  s.cv_fib = 0.3;
  s.avg_nz = 4;
  s.cv_nz = 0.3;
  std::vector<double> nnz;
  for (u64 seed : {1u, 2u, 3u}) {
    s.seed = seed;
    nnz.push_back(double(generate(s).stats.nnz));
  }
  double mean = (nnz[0] + nnz[1] + nnz[2]) / 3;
  double var = 0;
  for (double v : nnz) var += (v - mean) * (v - mean) / 3;
  EXPECT_LE(std::sqrt(var) / mean, 1e-2);
}

TEST(Generate, FrosttRoundTripIsLossless) {
  GenResult r = generate(base_spec());
  std::ostringstream out;
  write_frostt(r.tensor, out);
  std::istringstream in(out.str());
  LoadOptions lo;
  lo.declared_dims = r.tensor.dims;
  CooTensor back = load_frostt(in, lo);
  EXPECT_EQ(back.idx, r.tensor.idx);
  EXPECT_EQ(back.val, r.tensor.val);
}

TEST(SpecRecovery, RoundTripRecoversTargets) {
  GeneratorSpec s;
  s.dims = {150, 45, 35};
  s.d_slc = 0.6;
  s.avg_fib = 6;
  s.cv_fib = 0.5;
  s.imbal_fib = 0.7;
  s.avg_nz = 5;
  s.cv_nz = 0.4;
  s.imbal_nz = 0.6;
  s.seed = 11;
  GenResult r = generate(s);
  FeatureSet fs = extract(r.tensor, {});
  GeneratorSpec back = spec_from_features(fs);
  EXPECT_EQ(back.dims, s.dims);
  EXPECT_DOUBLE_EQ(back.d_slc, double(r.stats.nslc) / 150.0);
  EXPECT_NEAR(back.d_slc, s.d_slc, 0.01);
  EXPECT_NEAR(back.avg_fib, s.avg_fib, 0.5);
  EXPECT_NEAR(back.avg_nz, s.avg_nz, 0.4);
  EXPECT_NEAR(back.cv_fib, s.cv_fib, 0.15);
  EXPECT_NEAR(back.cv_nz, s.cv_nz, 0.15);
}

TEST(SpecRecovery, Top3ScopeUsesLargestAxes) {
  RngStream g(31, 0);
  CooTensor t;
  t.dims = {8, 30, 12, 20};
  t.idx.assign(4, {});
  for (int i = 0; i < 500; ++i) {
    t.idx[0].push_back(g.next_index(8));
    t.idx[1].push_back(g.next_index(30));
    t.idx[2].push_back(g.next_index(12));
    t.idx[3].push_back(g.next_index(20));
    t.val.push_back(1.0);
  }
  ExtractOptions o;
  o.scope = Scope::kTop3;
  GeneratorSpec spec = spec_from_features(extract(t, o));
  EXPECT_EQ(spec.dims, (std::vector<u64>{30, 20, 12}));

  GeneratorSpec scaled = spec_from_features(extract(t, o), {60, 40, 24});
  EXPECT_EQ(scaled.dims, (std::vector<u64>{60, 40, 24}));
}

TEST(SpecRecovery, MissingBlocksAreRejected) {
  GenResult r = generate(base_spec());
  FeatureSet fs = extract(r.tensor, {});
  FeatureSet pruned = fs;
  pruned.blocks.erase(std::remove_if(pruned.blocks.begin(), pruned.blocks.end(),
                                     [](const Block& b) {
                                       return b.kind == Kind::kNzPerFiber && b.modes[0] == 3;
                                     }),
                      pruned.blocks.end());
  EXPECT_THROW(spec_from_features(pruned), IncompleteFeatureError);

  RngStream g(5, 1);
  CooTensor t4;
  t4.dims = {5, 6, 7, 8};
  t4.idx.assign(4, {});
  for (int i = 0; i < 100; ++i) {
    for (int m = 0; m < 4; ++m) t4.idx[m].push_back(g.next_index(t4.dims[m]));
    t4.val.push_back(1.0);
  }
  ExtractOptions o;
  o.method = Method::kHash;
  EXPECT_THROW(spec_from_features(extract(t4, o)), IncompleteFeatureError);
}

}  // namespace
