#pragma once

// Open-addressing counter map used by the hash extraction path.  Keys are
// linearized coordinate tuples (u64, or u128 once the keyed space outgrows 64
// bits); values are occurrence counts.  Linear probing, growth by doubling at
// 0.7 load.  Deliberately minimal: add / merge / visit is all extraction needs.

#include <cstddef>
#include <utility>
#include <vector>

#include "tenkit/common.hpp"

namespace tenkit {

namespace detail {
inline u64 tally_hash(u64 k) { return mix64(k); }
inline u64 tally_hash(u128 k) {
  return mix64(static_cast<u64>(k) ^ mix64(static_cast<u64>(k >> 64)));
}
}  // namespace detail

template <class Key>
class TallyMap {
 public:
  static constexpr std::size_t kInitialBuckets = 100;

  TallyMap() : keys_(kInitialBuckets), vals_(kInitialBuckets), used_(kInitialBuckets, 0) {}

  void add(Key key, u64 inc) {
    if ((size_ + 1) * 10 > buckets() * 7) grow();
    std::size_t i = slot_of(key, keys_, used_);
    if (!used_[i]) {
      used_[i] = 1;
      keys_[i] = key;
      vals_[i] = 0;
      size_++;
    }
    vals_[i] += inc;
  }

  // Folds the other map into this one; counter addition commutes, so the
  // result is independent of merge order.
  void merge(const TallyMap& other) {
    other.visit([&](Key k, u64 v) { add(k, v); });
  }

  template <class Fn>
  void visit(Fn&& fn) const {
    for (std::size_t i = 0; i < buckets(); ++i)
      if (used_[i]) fn(keys_[i], vals_[i]);
  }

  std::size_t size() const { return size_; }
  std::size_t buckets() const { return keys_.size(); }

  // Instrumented footprint in 64-bit words.
  u64 words() const {
    return static_cast<u64>(buckets()) * ((sizeof(Key) + sizeof(u64)) / 8) + buckets() / 8 + 1;
  }

 private:
  static std::size_t slot_of(Key key, const std::vector<Key>& keys,
                             const std::vector<u8>& used) {
    std::size_t cap = keys.size();
    std::size_t i = static_cast<std::size_t>(detail::tally_hash(key) % cap);
    while (used[i] && keys[i] != key) i = (i + 1 == cap) ? 0 : i + 1;
    return i;
  }

  void grow() {
    std::size_t cap = buckets() * 2;
    std::vector<Key> keys(cap);
    std::vector<u64> vals(cap);
    std::vector<u8> used(cap, 0);
    for (std::size_t i = 0; i < buckets(); ++i) {
      if (!used_[i]) continue;
      std::size_t j = slot_of(keys_[i], keys, used);
      keys[j] = keys_[i];
      vals[j] = vals_[i];
      used[j] = 1;
    }
    keys_.swap(keys);
    vals_.swap(vals);
    used_.swap(used);
  }

  std::vector<Key> keys_;
  std::vector<u64> vals_;
  std::vector<u8> used_;
  std::size_t size_ = 0;
};

}  // namespace tenkit
