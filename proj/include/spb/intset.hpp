#pragma once

// Bitset-backed subsets of [0, capacity] with block rank for A(X), plus the
// additive and multiplicative kernels built on top of them.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spb/config.hpp"
#include "spb/parallel.hpp"

namespace spb {

namespace bits {

inline std::uint64_t words_for(std::uint64_t capacity) { return capacity / 64 + 1; }

// 64 bits of `w` starting at bit position `pos` (may be negative or run past
// the end; missing positions read as zero).
inline std::uint64_t window(std::span<const std::uint64_t> w, std::int64_t pos) {
  const std::int64_t nbits = static_cast<std::int64_t>(w.size()) * 64;
  if (pos >= nbits || pos <= -64) return 0;
  if (pos < 0) return w[0] << static_cast<unsigned>(-pos);
  std::uint64_t i = static_cast<std::uint64_t>(pos) >> 6;
  unsigned off = static_cast<unsigned>(pos & 63);
  std::uint64_t lo = w[i] >> off;
  if (off != 0 && i + 1 < w.size()) lo |= w[i + 1] << (64 - off);
  return lo;
}

inline std::uint64_t low_mask(unsigned n) {
  return n >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
}

}  // namespace bits

class IntSet;

/// Mutable bit array used to assemble an IntSet; frozen once complete.
class IntSetBuilder {
 public:
  explicit IntSetBuilder(std::uint64_t capacity) : capacity_(capacity) {
    check_capacity(capacity);
    words_.assign(bits::words_for(capacity), 0);
  }

  std::uint64_t capacity() const { return capacity_; }

  void insert(std::uint64_t x) {
    if (x > capacity_)
      throw range_error("element " + std::to_string(x) + " exceeds capacity " +
                        std::to_string(capacity_));
    words_[x >> 6] |= std::uint64_t{1} << (x & 63);
  }
  // Silently ignores x > capacity; used by kernels that truncate at a limit.
  void insert_if_fits(std::uint64_t x) {
    if (x <= capacity_) words_[x >> 6] |= std::uint64_t{1} << (x & 63);
  }
  bool contains(std::uint64_t x) const {
    return x <= capacity_ && ((words_[x >> 6] >> (x & 63)) & 1U);
  }

  // this |= (src shifted up by `shift`), restricted to output words [wlo, whi).
  void or_shifted(std::span<const std::uint64_t> src, std::uint64_t shift,
                  std::uint64_t wlo, std::uint64_t whi) {
    whi = std::min<std::uint64_t>(whi, words_.size());
    const std::int64_t s = static_cast<std::int64_t>(shift);
    for (std::uint64_t i = wlo; i < whi; ++i)
      words_[i] |= bits::window(src, static_cast<std::int64_t>(i * 64) - s);
  }
  void or_shifted(std::span<const std::uint64_t> src, std::uint64_t shift) {
    or_shifted(src, shift, shift >> 6, words_.size());
  }
  void or_with(const IntSetBuilder& other) {
    std::size_t n = std::min(words_.size(), other.words_.size());
    for (std::size_t i = 0; i < n; ++i) words_[i] |= other.words_[i];
  }

  std::span<std::uint64_t> words() { return words_; }
  std::span<const std::uint64_t> words() const { return words_; }

  inline IntSet freeze() &&;

 private:
  std::uint64_t capacity_;
  std::vector<std::uint64_t> words_;
};

/// Immutable subset of [0, capacity]. Element 0 is representable but never
/// counted by count_upto, matching A(X) = |A ∩ [1, X]|.
class IntSet {
 public:
  static constexpr std::uint64_t kWordsPerBlock = 8;

  IntSet() : IntSet(0, std::vector<std::uint64_t>(1, 0)) {}

  IntSet(std::uint64_t capacity, std::vector<std::uint64_t> words)
      : capacity_(capacity), words_(std::move(words)) {
    if (words_.size() != bits::words_for(capacity_))
      throw format_error("bit array length does not match capacity");
    unsigned tail = static_cast<unsigned>((capacity_ & 63) + 1);
    words_.back() &= bits::low_mask(tail);
    build_rank();
  }

  static IntSet from_elements(std::span<const std::uint64_t> elements,
                              std::uint64_t capacity) {
    IntSetBuilder b(capacity);
    for (auto x : elements) b.insert(x);
    return std::move(b).freeze();
  }
  static IntSet from_elements(std::initializer_list<std::uint64_t> elements,
                              std::uint64_t capacity) {
    std::vector<std::uint64_t> v(elements);
    return from_elements(std::span<const std::uint64_t>(v), capacity);
  }
  static IntSet interval(std::uint64_t lo, std::uint64_t hi, std::uint64_t capacity) {
    IntSetBuilder b(capacity);
    for (std::uint64_t x = lo; x <= hi && x <= capacity; ++x) b.insert(x);
    return std::move(b).freeze();
  }

  std::uint64_t capacity() const { return capacity_; }
  std::span<const std::uint64_t> words() const { return words_; }

  bool contains(std::uint64_t x) const {
    return x <= capacity_ && ((words_[x >> 6] >> (x & 63)) & 1U);
  }

  /// Number of elements in [0, pos).
  std::uint64_t rank(std::uint64_t pos) const {
    if (pos > capacity_) pos = capacity_ + 1;
    std::uint64_t w = pos >> 6;
    std::uint64_t blk = w / kWordsPerBlock;
    std::uint64_t r = block_rank_[blk];
    for (std::uint64_t i = blk * kWordsPerBlock; i < w; ++i) r += std::popcount(words_[i]);
    if (unsigned off = pos & 63; off != 0) r += std::popcount(words_[w] & bits::low_mask(off));
    return r;
  }

  /// A(X) = |A ∩ [1, X]|.
  std::uint64_t count_upto(std::uint64_t X) const {
    if (X > capacity_)
      throw range_error("count_upto: X=" + std::to_string(X) + " exceeds capacity " +
                        std::to_string(capacity_));
    return rank(X + 1) - (contains(0) ? 1 : 0);
  }
  /// |A ∩ [lo, hi]| with hi clipped to capacity; includes 0 when lo = 0.
  std::uint64_t count_range(std::uint64_t lo, std::uint64_t hi) const {
    if (lo > hi || lo > capacity_) return 0;
    hi = std::min(hi, capacity_);
    return rank(hi + 1) - rank(lo);
  }

  std::uint64_t size() const { return block_rank_.back(); }
  bool empty() const { return size() == 0; }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::uint64_t i = 0; i < words_.size(); ++i) {
      std::uint64_t w = words_[i];
      while (w != 0) {
        fn(i * 64 + static_cast<std::uint64_t>(std::countr_zero(w)));
        w &= w - 1;
      }
    }
  }
  std::vector<std::uint64_t> elements() const {
    std::vector<std::uint64_t> out;
    out.reserve(size());
    for_each([&](std::uint64_t x) { out.push_back(x); });
    return out;
  }
  std::vector<std::uint64_t> elements_upto(std::uint64_t hi) const {
    std::vector<std::uint64_t> out;
    for_each([&](std::uint64_t x) {
      if (x <= hi) out.push_back(x);
    });
    return out;
  }

  /// Smallest element >= x, or capacity+1 if none.
  std::uint64_t next(std::uint64_t x) const {
    if (x > capacity_) return capacity_ + 1;
    std::uint64_t i = x >> 6;
    std::uint64_t w = words_[i] & ~bits::low_mask(static_cast<unsigned>(x & 63));
    while (w == 0) {
      if (++i >= words_.size()) return capacity_ + 1;
      w = words_[i];
    }
    return i * 64 + static_cast<std::uint64_t>(std::countr_zero(w));
  }
  std::uint64_t min_element() const { return next(0); }
  std::uint64_t max_element() const {
    for (std::uint64_t i = words_.size(); i-- > 0;)
      if (words_[i] != 0) return i * 64 + 63 - static_cast<std::uint64_t>(std::countl_zero(words_[i]));
    return capacity_ + 1;
  }

  /// Same elements, capacity changed (elements above the new capacity dropped).
  IntSet with_capacity(std::uint64_t capacity) const {
    IntSetBuilder b(capacity);
    auto dst = b.words();
    std::size_t n = std::min(dst.size(), words_.size());
    std::copy_n(words_.begin(), n, dst.begin());
    return std::move(b).freeze();
  }

  friend bool operator==(const IntSet& a, const IntSet& b) {
    return a.capacity_ == b.capacity_ && a.words_ == b.words_;
  }
  bool same_elements(const IntSet& o) const {
    std::size_t n = std::max(words_.size(), o.words_.size());
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t x = i < words_.size() ? words_[i] : 0;
      std::uint64_t y = i < o.words_.size() ? o.words_[i] : 0;
      if (x != y) return false;
    }
    return true;
  }
  bool subset_of(const IntSet& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      std::uint64_t y = i < o.words_.size() ? o.words_[i] : 0;
      if ((words_[i] & ~y) != 0) return false;
    }
    return true;
  }

 private:
  void build_rank() {
    std::uint64_t nblocks = words_.size() / kWordsPerBlock + 1;
    block_rank_.assign(nblocks + 1, 0);
    std::uint64_t acc = 0;
    for (std::uint64_t i = 0; i < words_.size(); ++i) {
      if (i % kWordsPerBlock == 0) block_rank_[i / kWordsPerBlock] = acc;
      acc += std::popcount(words_[i]);
    }
    for (std::uint64_t b = (words_.size() + kWordsPerBlock - 1) / kWordsPerBlock; b <= nblocks; ++b)
      block_rank_[b] = acc;
  }

  std::uint64_t capacity_;
  std::vector<std::uint64_t> words_;
  std::vector<std::uint64_t> block_rank_;  // popcount of words [0, 8*i)
};

inline IntSet IntSetBuilder::freeze() && { return IntSet(capacity_, std::move(words_)); }

inline IntSet make_set(std::span<const std::uint64_t> elements, std::uint64_t capacity) {
  return IntSet::from_elements(elements, capacity);
}

inline IntSet set_union(const IntSet& a, const IntSet& b, std::uint64_t capacity) {
  IntSetBuilder out(capacity);
  auto w = out.words();
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::uint64_t x = i < a.words().size() ? a.words()[i] : 0;
    std::uint64_t y = i < b.words().size() ? b.words()[i] : 0;
    w[i] = x | y;
  }
  return std::move(out).freeze();
}
inline IntSet set_union(const IntSet& a, const IntSet& b) {
  return set_union(a, b, std::max(a.capacity(), b.capacity()));
}

/// {a + b <= limit : a in A, b in B}. Each element of the sparser operand
/// shifts the other operand's words into the output; workers own disjoint
/// output word ranges.
inline IntSet sumset(const IntSet& A, const IntSet& B, std::uint64_t limit) {
  IntSetBuilder out(limit);
  if (A.empty() || B.empty()) return std::move(out).freeze();
  const IntSet& sparse = A.size() <= B.size() ? A : B;
  const IntSet& dense = A.size() <= B.size() ? B : A;
  std::vector<std::uint64_t> shifts = sparse.elements_upto(limit);
  auto src = dense.words();
  const std::uint64_t nwords = out.words().size();
  parallel_for(0, nwords, [&](std::uint64_t wlo, std::uint64_t whi) {
    for (auto s : shifts) {
      if ((s >> 6) >= whi) break;
      out.or_shifted(src, s, std::max(wlo, s >> 6), whi);
    }
  }, 64);
  return std::move(out).freeze();
}

/// {c * a <= limit : a in A}.
inline IntSet dilate(const IntSet& A, std::uint64_t c, std::uint64_t limit) {
  IntSetBuilder out(limit);
  if (c == 0) {
    if (!A.empty()) out.insert(0);
    return std::move(out).freeze();
  }
  A.for_each([&](std::uint64_t a) {
    if (a <= limit / c) out.insert(a * c);
  });
  return std::move(out).freeze();
}

/// {a * b <= limit : a in A, b in B}. Pairs are marked once from the side of
/// the smaller factor: factors a <= sqrt(limit) of A are paired with all of
/// B, and factors b <= sqrt(limit) of B with the large part of A. When A and B
/// share the same bits only a <= b is visited.
inline IntSet product_set(const IntSet& A, const IntSet& B, std::uint64_t limit) {
  IntSetBuilder out(limit);
  if (A.empty() || B.empty()) return std::move(out).freeze();
  if (A.contains(0) || B.contains(0)) out.insert(0);

  const bool same = A.same_elements(B);
  std::vector<std::uint64_t> ea = A.elements_upto(limit);
  std::vector<std::uint64_t> eb = same ? ea : B.elements_upto(limit);
  const std::uint64_t root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(limit)));
  auto small_end = [&](const std::vector<std::uint64_t>& v) {
    return std::upper_bound(v.begin(), v.end(), root);
  };

  // a <= root: every b with a*b <= limit.
  for (auto ia = ea.begin(); ia != small_end(ea); ++ia) {
    std::uint64_t a = *ia;
    if (a == 0) continue;
    std::uint64_t bmax = limit / a;
    auto it = eb.begin();
    if (same) it = std::lower_bound(eb.begin(), eb.end(), a);
    for (; it != eb.end() && *it <= bmax; ++it)
      if (*it != 0) out.insert(a * *it);
  }
  if (same) return std::move(out).freeze();
  // a > root forces b <= root.
  auto a_big = small_end(ea);
  for (auto ib = eb.begin(); ib != small_end(eb); ++ib) {
    std::uint64_t b = *ib;
    if (b == 0) continue;
    std::uint64_t amax = limit / b;
    for (auto it = a_big; it != ea.end() && *it <= amax; ++it) out.insert(*it * b);
  }
  return std::move(out).freeze();
}

/// A^k by iterated product sets; A^1 = A truncated to limit.
inline IntSet power_set_k(const IntSet& A, unsigned k, std::uint64_t limit) {
  if (k == 0) throw precondition_error("power_set_k: k must be >= 1");
  IntSet acc = A.with_capacity(limit);
  for (unsigned i = 1; i < k; ++i) acc = product_set(acc, A, limit);
  return acc;
}

/// Ordered pairs (a, b), a in A ∩ [1,·], b in B ∩ [1,·], with a*b <= X,
/// counted with multiplicity.
inline std::uint64_t pair_count_upto(const IntSet& A, const IntSet& B, std::uint64_t X) {
  if (X > A.capacity() || X > B.capacity())
    throw range_error("pair_count_upto: X exceeds an operand capacity");
  std::uint64_t total = 0;
  for (std::uint64_t a = A.next(1); a <= X; a = A.next(a + 1)) total += B.count_upto(X / a);
  return total;
}

}  // namespace spb
