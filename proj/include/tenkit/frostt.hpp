#pragma once

// FROSTT-style .tns text I/O: one nonzero per line, M whitespace-separated
// 1-based indices followed by one real value; '#' lines and blank lines are
// skipped.  The order is fixed by the first data line.

#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tenkit/coo.hpp"
#include "tenkit/common.hpp"
#include "tenkit/errors.hpp"

namespace tenkit {

enum class DuplicatePolicy { kReject, kSumMerge };

struct LoadOptions {
  std::optional<std::vector<u64>> declared_dims;
  DuplicatePolicy duplicates = DuplicatePolicy::kReject;
};

namespace detail {

inline bool parse_u64(const std::string& tok, u64& out) {
  if (tok.empty()) return false;
  std::size_t i = tok[0] == '-' ? 1 : 0;
  if (i >= tok.size()) return false;
  u64 v = 0;
  for (; i < tok.size(); ++i) {
    char c = tok[i];
    if (c < '0' || c > '9') return false;
    u64 d = static_cast<u64>(c - '0');
    if (v > (~u64{0} - d) / 10) return false;
    v = v * 10 + d;
  }
  out = tok[0] == '-' ? 0 : v;  // negative indices surface as the out-of-range 0
  return true;
}

}  // namespace detail

inline CooTensor load_frostt(std::istream& in, const LoadOptions& opts = {}) {
  CooTensor t;
  std::size_t order = 0;
  std::string line;
  u64 line_no = 0;
  std::vector<std::string> toks;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    toks.clear();
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) toks.push_back(tok);
    if (order == 0) {
      if (toks.size() < 2)
        throw FormatError("line " + std::to_string(line_no) + ": expected indices and a value");
      order = toks.size() - 1;
      if (order < 3)
        throw FormatError("line " + std::to_string(line_no) + ": tensor order must be >= 3");
      t.idx.assign(order, {});
    } else if (toks.size() != order + 1) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(order + 1) + " fields, got " +
                        std::to_string(toks.size()));
    }
    for (std::size_t m = 0; m < order; ++m) {
      u64 v = 0;
      if (!detail::parse_u64(toks[m], v))
        throw FormatError("line " + std::to_string(line_no) + ": bad index '" + toks[m] + "'");
      if (v == 0)
        throw IndexError("line " + std::to_string(line_no) + ": index must be >= 1");
      t.idx[m].push_back(v - 1);
    }
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(toks[order].c_str(), &end);
    if (end == toks[order].c_str() || *end != '\0')
      throw FormatError("line " + std::to_string(line_no) + ": bad value '" + toks[order] + "'");
    t.val.push_back(v);
  }
  if (order == 0) throw FormatError("empty input: tensor order is undeterminable");

  if (opts.declared_dims) {
    if (opts.declared_dims->size() != order)
      throw FormatError("declared dims arity != tensor order");
    t.dims = *opts.declared_dims;
    for (std::size_t m = 0; m < order; ++m)
      for (u64 x : t.idx[m])
        if (x >= t.dims[m])
          throw BoundsError("index exceeds declared dim in mode " + std::to_string(m + 1));
  } else {
    t.dims.assign(order, 0);
    for (std::size_t m = 0; m < order; ++m)
      for (u64 x : t.idx[m])
        if (x + 1 > t.dims[m]) t.dims[m] = x + 1;
    for (std::size_t m = 0; m < order; ++m)
      if (t.dims[m] == 0) t.dims[m] = 1;
  }

  // Duplicate coordinates: detect via a lexicographic row ordering.
  if (t.nnz() > 1) {
    ModeOrder natural(order);
    std::iota(natural.begin(), natural.end(), 0);
    std::vector<u64> perm = sort_perm(t, natural);
    auto same = [&](u64 a, u64 b) {
      for (std::size_t m = 0; m < order; ++m)
        if (t.idx[m][a] != t.idx[m][b]) return false;
      return true;
    };
    bool any_dup = false;
    for (u64 i = 1; i < perm.size() && !any_dup; ++i) any_dup = same(perm[i - 1], perm[i]);
    if (any_dup) {
      if (opts.duplicates == DuplicatePolicy::kReject)
        throw DuplicateError("duplicate nonzero coordinates in input");
      // Sum-merge into the first occurrence, preserving input order.
      std::vector<u8> drop(t.nnz(), 0);
      for (u64 i = 1; i < perm.size(); ++i) {
        u64 prev = perm[i - 1], cur = perm[i];
        if (same(prev, cur)) {
          u64 keep = std::min(prev, cur), dead = std::max(prev, cur);
          t.val[keep] += t.val[dead];
          drop[dead] = 1;
          perm[i] = keep;
        }
      }
      CooTensor merged;
      merged.dims = t.dims;
      merged.idx.assign(order, {});
      for (u64 i = 0; i < t.nnz(); ++i) {
        if (drop[i]) continue;
        for (std::size_t m = 0; m < order; ++m) merged.idx[m].push_back(t.idx[m][i]);
        merged.val.push_back(t.val[i]);
      }
      t = std::move(merged);
    }
  }
  t.check_shape();
  return t;
}

inline void write_frostt(const CooTensor& t, std::ostream& out) {
  std::string line;
  for (u64 i = 0; i < t.nnz(); ++i) {
    line.clear();
    for (std::size_t m = 0; m < t.order(); ++m) {
      line += std::to_string(t.idx[m][i] + 1);
      line += ' ';
    }
    line += format_value(t.val[i]);
    line += '\n';
    out << line;
  }
}

}  // namespace tenkit
