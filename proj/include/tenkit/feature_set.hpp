#pragma once

// ============================================================================
// FeatureSet: the serializable bundle of global features plus per-(kind,
// mode) statistic blocks.
//
// SERIALIZATION
//   * JSON: lossless object form; doubles round-trip bit-exactly.
//   * CSV : one data row per scalar feature (feature,kind,modes,value) with a
//     leading '#' metadata line carrying everything that is not a scalar
//     feature (full dims, method, scope, fiber associations).  Data row count
//     equals feature_count(order, scope): 11 global rows (three size entries
//     for the largest modes plus 8 scalars) and 15 rows per block.
//   * Mode ids are 1-based externally; slice pairs are written "k-l", k < l.
// ============================================================================

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tenkit/common.hpp"
#include "tenkit/errors.hpp"
#include "tenkit/stats.hpp"

namespace tenkit {

enum class Kind { kNzPerSlice, kFibPerSlice, kNzPerFiber };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::kNzPerSlice: return "nz_per_slice";
    case Kind::kFibPerSlice: return "fib_per_slice";
    case Kind::kNzPerFiber: return "nz_per_fiber";
  }
  return "?";
}

inline Kind kind_from_name(const std::string& s) {
  if (s == "nz_per_slice") return Kind::kNzPerSlice;
  if (s == "fib_per_slice") return Kind::kFibPerSlice;
  if (s == "nz_per_fiber") return Kind::kNzPerFiber;
  throw ParseError("unknown kind '" + s + "'");
}

struct Block {
  Kind kind;
  // 1-based external mode ids; fiber blocks use {m, 0}, slice blocks {k, l}
  // with k < l.
  std::array<u32, 2> modes{0, 0};
  // For fib_per_slice: which fiber family is counted inside each slice.
  u32 fiber_mode = 0;
  KindStats stats;

  std::string modes_label() const {
    if (modes[1] == 0) return std::to_string(modes[0]);
    return std::to_string(modes[0]) + "-" + std::to_string(modes[1]);
  }
  bool operator==(const Block&) const = default;
};

inline bool block_key_less(const Block& a, const Block& b) {
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  if (a.modes[0] != b.modes[0]) return a.modes[0] < b.modes[0];
  return a.modes[1] < b.modes[1];
}

struct FeatureMeta {
  std::string method;
  std::string scope;
  double lambda = 0;
  std::vector<std::string> quality_flags;
  std::vector<std::string> notes;

  bool operator==(const FeatureMeta&) const = default;
};

struct FeatureSet {
  GlobalFeatures global;
  std::vector<Block> blocks;
  FeatureMeta meta;

  bool operator==(const FeatureSet&) const = default;

  void sort_blocks() { std::stable_sort(blocks.begin(), blocks.end(), block_key_less); }

  // Quality flags are derivable: every ratio denominator is zero exactly when
  // a block has no nonzero entries.
  void refresh_quality_flags() {
    meta.quality_flags.clear();
    for (const Block& b : blocks)
      if (b.stats.n_nz == 0)
        meta.quality_flags.push_back(std::string(kind_name(b.kind)) + ":" + b.modes_label() +
                                     ":zero_denominator_ratios_emitted_as_0");
  }

  u64 scalar_count() const { return 11 + 15 * static_cast<u64>(blocks.size()); }
};

// Global features from assembled blocks: fiber/slice totals are summed over
// the covered fiber modes and slice pairs; d_nz uses the full dim product.
inline GlobalFeatures compute_global(const std::vector<u64>& dims, u64 nnz,
                                     const std::vector<Block>& blocks) {
  GlobalFeatures g;
  g.dims = dims;
  g.nnz = nnz;
  g.d_nz = dims.empty() ? 0.0 : static_cast<double>(nnz) / prod_double(dims);
  u128 nfib_all = 0, nslc_all = 0;
  for (const Block& b : blocks) {
    if (b.kind == Kind::kNzPerFiber) {
      nfib_all += b.stats.n_all;
      g.nfib_nz += b.stats.n_nz;
    } else if (b.kind == Kind::kNzPerSlice) {
      nslc_all += b.stats.n_all;
      g.nslc_nz += b.stats.n_nz;
    }
  }
  if (nfib_all > u128{~u64{0}} || nslc_all > u128{~u64{0}})
    throw OverflowError("global fiber/slice totals exceed 64-bit range");
  g.nfib_all = static_cast<u64>(nfib_all);
  g.nslc_all = static_cast<u64>(nslc_all);
  g.d_fib = g.nfib_all ? static_cast<double>(g.nfib_nz) / static_cast<double>(g.nfib_all) : 0.0;
  g.d_slc = g.nslc_all ? static_cast<double>(g.nslc_nz) / static_cast<double>(g.nslc_all) : 0.0;
  return g;
}

namespace detail {

constexpr const char* kStatFields[15] = {
    "n_all", "n_nz", "nz_density", "max",      "min",      "dev",      "sum",     "avg_all",
    "imbal_all", "stDev_all", "cv_all", "avg_nz", "imbal_nz", "stDev_nz", "cv_nz"};

inline nlohmann::ordered_json stats_to_json(const KindStats& s) {
  nlohmann::ordered_json j;
  j["n_all"] = s.n_all;
  j["n_nz"] = s.n_nz;
  j["nz_density"] = s.nz_density;
  j["max"] = s.max;
  j["min"] = s.min;
  j["dev"] = s.dev;
  j["sum"] = s.sum;
  j["avg_all"] = s.avg_all;
  j["imbal_all"] = s.imbal_all;
  j["stDev_all"] = s.stdev_all;
  j["cv_all"] = s.cv_all;
  j["avg_nz"] = s.avg_nz;
  j["imbal_nz"] = s.imbal_nz;
  j["stDev_nz"] = s.stdev_nz;
  j["cv_nz"] = s.cv_nz;
  return j;
}

inline KindStats stats_from_json(const nlohmann::json& j) {
  KindStats s;
  s.n_all = j.at("n_all").get<u64>();
  s.n_nz = j.at("n_nz").get<u64>();
  s.nz_density = j.at("nz_density").get<double>();
  s.max = j.at("max").get<u64>();
  s.min = j.at("min").get<u64>();
  s.dev = j.at("dev").get<u64>();
  s.sum = j.at("sum").get<u64>();
  s.avg_all = j.at("avg_all").get<double>();
  s.imbal_all = j.at("imbal_all").get<double>();
  s.stdev_all = j.at("stDev_all").get<double>();
  s.cv_all = j.at("cv_all").get<double>();
  s.avg_nz = j.at("avg_nz").get<double>();
  s.imbal_nz = j.at("imbal_nz").get<double>();
  s.stdev_nz = j.at("stDev_nz").get<double>();
  s.cv_nz = j.at("cv_nz").get<double>();
  return s;
}

inline double stat_field_value(const KindStats& s, int i) {
  switch (i) {
    case 0: return static_cast<double>(s.n_all);
    case 1: return static_cast<double>(s.n_nz);
    case 2: return s.nz_density;
    case 3: return static_cast<double>(s.max);
    case 4: return static_cast<double>(s.min);
    case 5: return static_cast<double>(s.dev);
    case 6: return static_cast<double>(s.sum);
    case 7: return s.avg_all;
    case 8: return s.imbal_all;
    case 9: return s.stdev_all;
    case 10: return s.cv_all;
    case 11: return s.avg_nz;
    case 12: return s.imbal_nz;
    case 13: return s.stdev_nz;
    case 14: return s.cv_nz;
  }
  return 0;
}

inline bool stat_field_is_integer(int i) {
  return i == 0 || i == 1 || (i >= 3 && i <= 6);
}

}  // namespace detail

inline std::string serialize_json(const FeatureSet& fs) {
  nlohmann::ordered_json j;
  j["format"] = "tenkit-features/1";
  nlohmann::ordered_json g;
  g["dims"] = fs.global.dims;
  g["nnz"] = fs.global.nnz;
  g["d_nz"] = fs.global.d_nz;
  g["nfib_all"] = fs.global.nfib_all;
  g["nslc_all"] = fs.global.nslc_all;
  g["nfib_nz"] = fs.global.nfib_nz;
  g["nslc_nz"] = fs.global.nslc_nz;
  g["d_fib"] = fs.global.d_fib;
  g["d_slc"] = fs.global.d_slc;
  j["global"] = std::move(g);
  j["blocks"] = nlohmann::ordered_json::array();
  for (const Block& b : fs.blocks) {
    nlohmann::ordered_json jb;
    jb["kind"] = kind_name(b.kind);
    if (b.modes[1] == 0)
      jb["modes"] = nlohmann::ordered_json::array({b.modes[0]});
    else
      jb["modes"] = nlohmann::ordered_json::array({b.modes[0], b.modes[1]});
    if (b.kind == Kind::kFibPerSlice) jb["fiber_mode"] = b.fiber_mode;
    jb["stats"] = detail::stats_to_json(b.stats);
    j["blocks"].push_back(std::move(jb));
  }
  nlohmann::ordered_json m;
  m["method"] = fs.meta.method;
  m["scope"] = fs.meta.scope;
  m["lambda"] = fs.meta.lambda;
  m["quality_flags"] = fs.meta.quality_flags;
  m["notes"] = fs.meta.notes;
  j["meta"] = std::move(m);
  return j.dump(2) + "\n";
}

inline FeatureSet deserialize_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad JSON: ") + e.what());
  }
  try {
    FeatureSet fs;
    const auto& g = j.at("global");
    fs.global.dims = g.at("dims").get<std::vector<u64>>();
    fs.global.nnz = g.at("nnz").get<u64>();
    fs.global.d_nz = g.at("d_nz").get<double>();
    fs.global.nfib_all = g.at("nfib_all").get<u64>();
    fs.global.nslc_all = g.at("nslc_all").get<u64>();
    fs.global.nfib_nz = g.at("nfib_nz").get<u64>();
    fs.global.nslc_nz = g.at("nslc_nz").get<u64>();
    fs.global.d_fib = g.at("d_fib").get<double>();
    fs.global.d_slc = g.at("d_slc").get<double>();
    for (const auto& jb : j.at("blocks")) {
      Block b;
      b.kind = kind_from_name(jb.at("kind").get<std::string>());
      auto modes = jb.at("modes").get<std::vector<u32>>();
      if (modes.empty() || modes.size() > 2) throw ParseError("bad modes array");
      b.modes[0] = modes[0];
      b.modes[1] = modes.size() == 2 ? modes[1] : 0;
      if (jb.contains("fiber_mode")) b.fiber_mode = jb.at("fiber_mode").get<u32>();
      b.stats = detail::stats_from_json(jb.at("stats"));
      fs.blocks.push_back(b);
    }
    if (j.contains("meta")) {
      const auto& m = j.at("meta");
      fs.meta.method = m.value("method", "");
      fs.meta.scope = m.value("scope", "");
      fs.meta.lambda = m.value("lambda", 0.0);
      fs.meta.quality_flags = m.value("quality_flags", std::vector<std::string>{});
      fs.meta.notes = m.value("notes", std::vector<std::string>{});
    }
    return fs;
  } catch (const ParseError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad feature JSON: ") + e.what());
  }
}

inline std::string serialize_csv(const FeatureSet& fs) {
  std::string out;
  nlohmann::ordered_json meta;
  meta["dims"] = fs.global.dims;
  meta["method"] = fs.meta.method;
  meta["scope"] = fs.meta.scope;
  meta["lambda"] = fs.meta.lambda;
  meta["quality_flags"] = fs.meta.quality_flags;
  meta["notes"] = fs.meta.notes;
  nlohmann::ordered_json assoc = nlohmann::ordered_json::object();
  for (const Block& b : fs.blocks)
    if (b.kind == Kind::kFibPerSlice) assoc[b.modes_label()] = b.fiber_mode;
  meta["assoc"] = std::move(assoc);
  out += "# tenkit-features/1 " + meta.dump() + "\n";
  out += "feature,kind,modes,value\n";

  auto sel = largest3_modes(fs.global.dims);
  std::array<std::size_t, 3> bymode = sel;
  std::sort(bymode.begin(), bymode.end());
  for (std::size_t m : bymode)
    out += "size_" + std::to_string(m + 1) + ",global," + std::to_string(m + 1) + "," +
           std::to_string(fs.global.dims[m]) + "\n";
  out += "nnz,global,-," + std::to_string(fs.global.nnz) + "\n";
  out += "d_nz,global,-," + format_double_g17(fs.global.d_nz) + "\n";
  out += "nfib_all,global,-," + std::to_string(fs.global.nfib_all) + "\n";
  out += "nslc_all,global,-," + std::to_string(fs.global.nslc_all) + "\n";
  out += "nfib_nz,global,-," + std::to_string(fs.global.nfib_nz) + "\n";
  out += "nslc_nz,global,-," + std::to_string(fs.global.nslc_nz) + "\n";
  out += "d_fib,global,-," + format_double_g17(fs.global.d_fib) + "\n";
  out += "d_slc,global,-," + format_double_g17(fs.global.d_slc) + "\n";

  for (const Block& b : fs.blocks) {
    for (int i = 0; i < 15; ++i) {
      out += std::string(detail::kStatFields[i]) + "," + kind_name(b.kind) + "," +
             b.modes_label() + ",";
      if (detail::stat_field_is_integer(i)) {
        u64 v = 0;
        switch (i) {
          case 0: v = b.stats.n_all; break;
          case 1: v = b.stats.n_nz; break;
          case 3: v = b.stats.max; break;
          case 4: v = b.stats.min; break;
          case 5: v = b.stats.dev; break;
          case 6: v = b.stats.sum; break;
        }
        out += std::to_string(v);
      } else {
        out += format_double_g17(detail::stat_field_value(b.stats, i));
      }
      out += "\n";
    }
  }
  return out;
}

inline FeatureSet deserialize_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  FeatureSet fs;
  bool have_meta = false;
  std::map<std::string, u32> assoc;
  struct Pending {
    std::map<std::string, double> fields;
    std::map<std::string, u64> ints;
  };
  std::map<std::pair<std::string, std::string>, Pending> pending;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto brace = line.find('{');
      if (brace == std::string::npos) continue;
      nlohmann::json meta;
      try {
        meta = nlohmann::json::parse(line.substr(brace));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad CSV metadata: ") + e.what());
      }
      fs.global.dims = meta.at("dims").get<std::vector<u64>>();
      fs.meta.method = meta.value("method", "");
      fs.meta.scope = meta.value("scope", "");
      fs.meta.lambda = meta.value("lambda", 0.0);
      fs.meta.quality_flags = meta.value("quality_flags", std::vector<std::string>{});
      fs.meta.notes = meta.value("notes", std::vector<std::string>{});
      if (meta.contains("assoc"))
        for (auto& [k, v] : meta.at("assoc").items()) assoc[k] = v.get<u32>();
      have_meta = true;
      continue;
    }
    if (line == "feature,kind,modes,value") continue;
    std::array<std::string, 4> cell;
    std::size_t pos = 0;
    for (int c = 0; c < 4; ++c) {
      std::size_t next = c < 3 ? line.find(',', pos) : line.size();
      if (next == std::string::npos) throw ParseError("bad CSV row: " + line);
      cell[c] = line.substr(pos, next - pos);
      pos = next + 1;
    }
    const std::string& feature = cell[0];
    const std::string& kind = cell[1];
    double value = 0;
    try {
      value = std::stod(cell[3]);
    } catch (...) {
      throw ParseError("bad CSV value: " + line);
    }
    if (kind == "global") {
      if (feature.rfind("size_", 0) == 0) continue;  // dims come from metadata
      if (feature == "nnz") fs.global.nnz = static_cast<u64>(std::stoull(cell[3]));
      else if (feature == "d_nz") fs.global.d_nz = value;
      else if (feature == "nfib_all") fs.global.nfib_all = static_cast<u64>(std::stoull(cell[3]));
      else if (feature == "nslc_all") fs.global.nslc_all = static_cast<u64>(std::stoull(cell[3]));
      else if (feature == "nfib_nz") fs.global.nfib_nz = static_cast<u64>(std::stoull(cell[3]));
      else if (feature == "nslc_nz") fs.global.nslc_nz = static_cast<u64>(std::stoull(cell[3]));
      else if (feature == "d_fib") fs.global.d_fib = value;
      else if (feature == "d_slc") fs.global.d_slc = value;
      else throw ParseError("unknown global feature '" + feature + "'");
    } else {
      kind_from_name(kind);  // validates
      bool known = false;
      for (const char* f : detail::kStatFields) known |= feature == f;
      if (!known) throw ParseError("unknown feature '" + feature + "'");
      pending[{kind, cell[2]}].fields[feature] = value;
      // integer fields get an exact u64 reparse alongside the double view
      if (feature == "n_all" || feature == "n_nz" || feature == "max" || feature == "min" ||
          feature == "dev" || feature == "sum")
        pending[{kind, cell[2]}].ints[feature] = static_cast<u64>(std::stoull(cell[3]));
    }
  }
  if (!have_meta) throw ParseError("missing tenkit-features metadata line");

  for (auto& [key, p] : pending) {
    Block b;
    b.kind = kind_from_name(key.first);
    const std::string& modes = key.second;
    auto dash = modes.find('-');
    try {
      if (dash == std::string::npos) {
        b.modes[0] = static_cast<u32>(std::stoul(modes));
      } else {
        b.modes[0] = static_cast<u32>(std::stoul(modes.substr(0, dash)));
        b.modes[1] = static_cast<u32>(std::stoul(modes.substr(dash + 1)));
      }
    } catch (...) {
      throw ParseError("bad modes label '" + modes + "'");
    }
    for (const char* f : detail::kStatFields)
      if (!p.fields.count(f)) throw ParseError("missing field " + std::string(f) +
                                               " for block " + key.first + ":" + modes);
    auto u = [&](const char* f) { return p.ints.at(f); };
    b.stats.n_all = u("n_all");
    b.stats.n_nz = u("n_nz");
    b.stats.max = u("max");
    b.stats.min = u("min");
    b.stats.dev = u("dev");
    b.stats.sum = u("sum");
    b.stats.nz_density = p.fields.at("nz_density");
    b.stats.avg_all = p.fields.at("avg_all");
    b.stats.imbal_all = p.fields.at("imbal_all");
    b.stats.stdev_all = p.fields.at("stDev_all");
    b.stats.cv_all = p.fields.at("cv_all");
    b.stats.avg_nz = p.fields.at("avg_nz");
    b.stats.imbal_nz = p.fields.at("imbal_nz");
    b.stats.stdev_nz = p.fields.at("stDev_nz");
    b.stats.cv_nz = p.fields.at("cv_nz");
    if (b.kind == Kind::kFibPerSlice) {
      auto it = assoc.find(b.modes_label());
      if (it != assoc.end()) b.fiber_mode = it->second;
    }
    fs.blocks.push_back(b);
  }
  fs.sort_blocks();
  return fs;
}

enum class FeatureFormat { kJson, kCsv };

inline std::string serialize(const FeatureSet& fs, FeatureFormat f) {
  return f == FeatureFormat::kJson ? serialize_json(fs) : serialize_csv(fs);
}

inline FeatureSet deserialize(const std::string& text, FeatureFormat f) {
  return f == FeatureFormat::kJson ? deserialize_json(text) : deserialize_csv(text);
}

// Integer features must match exactly; reals within rel_tol (relative to the
// larger magnitude).  Metadata is not compared.  Returns human-readable
// difference descriptions, empty when equivalent.
inline std::vector<std::string> compare_features(const FeatureSet& a, const FeatureSet& b,
                                                 double rel_tol = 1e-12) {
  std::vector<std::string> diffs;
  auto real_ok = [&](double x, double y) {
    if (x == y) return true;
    double scale = std::max(std::abs(x), std::abs(y));
    return std::abs(x - y) <= rel_tol * scale;
  };
  auto chk_u = [&](const std::string& name, u64 x, u64 y) {
    if (x != y)
      diffs.push_back(name + ": " + std::to_string(x) + " vs " + std::to_string(y));
  };
  auto chk_d = [&](const std::string& name, double x, double y) {
    if (!real_ok(x, y))
      diffs.push_back(name + ": " + format_double_g17(x) + " vs " + format_double_g17(y));
  };

  if (a.global.dims != b.global.dims) {
    diffs.push_back("global.dims differ");
    return diffs;
  }
  chk_u("global.nnz", a.global.nnz, b.global.nnz);
  chk_d("global.d_nz", a.global.d_nz, b.global.d_nz);
  chk_u("global.nfib_all", a.global.nfib_all, b.global.nfib_all);
  chk_u("global.nslc_all", a.global.nslc_all, b.global.nslc_all);
  chk_u("global.nfib_nz", a.global.nfib_nz, b.global.nfib_nz);
  chk_u("global.nslc_nz", a.global.nslc_nz, b.global.nslc_nz);
  chk_d("global.d_fib", a.global.d_fib, b.global.d_fib);
  chk_d("global.d_slc", a.global.d_slc, b.global.d_slc);

  if (a.blocks.size() != b.blocks.size()) {
    diffs.push_back("block count: " + std::to_string(a.blocks.size()) + " vs " +
                    std::to_string(b.blocks.size()));
    return diffs;
  }
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    const Block& x = a.blocks[i];
    const Block& y = b.blocks[i];
    std::string tag = std::string(kind_name(x.kind)) + ":" + x.modes_label();
    if (x.kind != y.kind || x.modes != y.modes) {
      diffs.push_back("block key mismatch at position " + std::to_string(i));
      continue;
    }
    if (x.fiber_mode != y.fiber_mode)
      diffs.push_back(tag + ".fiber_mode: " + std::to_string(x.fiber_mode) + " vs " +
                      std::to_string(y.fiber_mode));
    chk_u(tag + ".n_all", x.stats.n_all, y.stats.n_all);
    chk_u(tag + ".n_nz", x.stats.n_nz, y.stats.n_nz);
    chk_d(tag + ".nz_density", x.stats.nz_density, y.stats.nz_density);
    chk_u(tag + ".max", x.stats.max, y.stats.max);
    chk_u(tag + ".min", x.stats.min, y.stats.min);
    chk_u(tag + ".dev", x.stats.dev, y.stats.dev);
    chk_u(tag + ".sum", x.stats.sum, y.stats.sum);
    chk_d(tag + ".avg_all", x.stats.avg_all, y.stats.avg_all);
    chk_d(tag + ".imbal_all", x.stats.imbal_all, y.stats.imbal_all);
    chk_d(tag + ".stDev_all", x.stats.stdev_all, y.stats.stdev_all);
    chk_d(tag + ".cv_all", x.stats.cv_all, y.stats.cv_all);
    chk_d(tag + ".avg_nz", x.stats.avg_nz, y.stats.avg_nz);
    chk_d(tag + ".imbal_nz", x.stats.imbal_nz, y.stats.imbal_nz);
    chk_d(tag + ".stDev_nz", x.stats.stdev_nz, y.stats.stdev_nz);
    chk_d(tag + ".cv_nz", x.stats.cv_nz, y.stats.cv_nz);
  }
  return diffs;
}

}  // namespace tenkit
