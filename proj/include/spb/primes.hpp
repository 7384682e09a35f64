#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spb/config.hpp"

namespace spb {

struct PrimeTable {
  std::uint64_t limit = 0;
  std::vector<std::uint64_t> primes;  // all primes <= limit, increasing

  std::uint64_t pi(std::uint64_t x) const {
    return static_cast<std::uint64_t>(std::upper_bound(primes.begin(), primes.end(), x) -
                                      primes.begin());
  }
  // Primes in (lo, hi].
  std::pair<const std::uint64_t*, const std::uint64_t*> in_range(std::uint64_t lo,
                                                                 std::uint64_t hi) const {
    auto b = std::upper_bound(primes.begin(), primes.end(), lo);
    auto e = std::upper_bound(primes.begin(), primes.end(), hi);
    if (e < b) e = b;
    return {primes.data() + (b - primes.begin()), primes.data() + (e - primes.begin())};
  }
};

struct DivisorTable {
  std::uint64_t limit = 0;
  std::vector<std::uint32_t> tau;  // tau[0] unused

  std::uint32_t operator[](std::uint64_t n) const { return tau[n]; }
};

namespace detail {
inline void check_budget(std::uint64_t bytes, const char* what) {
  if (bytes > limits().memory_cap_bytes)
    throw resource_error(std::string(what) + ": needs " + std::to_string(bytes) +
                         " bytes, memory cap is " + std::to_string(limits().memory_cap_bytes));
}
}  // namespace detail

/// Segmented sieve of Eratosthenes over odd numbers.
inline PrimeTable sieve_primes(std::uint64_t limit, std::uint64_t segment = 1 << 18) {
  if (limit < 2) throw precondition_error("sieve_primes: limit must be >= 2");
  // Output alone is ~ limit / ln(limit) words.
  detail::check_budget(static_cast<std::uint64_t>(
                           8.0 * 1.3 * static_cast<double>(limit) / std::log(static_cast<double>(limit))) +
                           segment,
                       "sieve_primes");
  PrimeTable t;
  t.limit = limit;
  t.primes.push_back(2);
  const auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(limit))) + 1;

  std::vector<char> small(root + 1, 1);
  std::vector<std::uint64_t> base;
  for (std::uint64_t i = 3; i <= root; i += 2) {
    if (!small[i]) continue;
    base.push_back(i);
    for (std::uint64_t j = i * i; j <= root; j += 2 * i) small[j] = 0;
  }

  std::vector<char> seg(segment);
  std::vector<std::uint64_t> next(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) next[i] = base[i] * base[i];
  for (std::uint64_t low = 3; low <= limit; low += 2 * segment) {
    std::uint64_t high = std::min(limit, low + 2 * segment - 1);
    std::fill(seg.begin(), seg.end(), 1);
    // seg[i] stands for low + 2i.
    for (std::size_t i = 0; i < base.size(); ++i) {
      std::uint64_t p = base[i];
      if (p * p > high) break;
      std::uint64_t j = next[i];
      for (; j <= high; j += 2 * p) seg[(j - low) / 2] = 0;
      next[i] = j;
    }
    for (std::uint64_t n = low; n <= high; n += 2)
      if (seg[(n - low) / 2]) t.primes.push_back(n);
  }
  return t;
}

/// tau[n] for 1 <= n <= limit by divisor-multiple marking.
inline DivisorTable divisor_counts(std::uint64_t limit) {
  if (limit < 2) throw precondition_error("divisor_counts: limit must be >= 2");
  detail::check_budget((limit + 1) * sizeof(std::uint32_t), "divisor_counts");
  DivisorTable t;
  t.limit = limit;
  t.tau.assign(limit + 1, 0);
  for (std::uint64_t d = 1; d <= limit; ++d)
    for (std::uint64_t m = d; m <= limit; m += d) ++t.tau[m];
  return t;
}

/// Smallest-prime-factor table, used to list divisors quickly.
class FactorTable {
 public:
  explicit FactorTable(std::uint64_t limit) : spf_(limit + 1, 0) {
    detail::check_budget((limit + 1) * sizeof(std::uint32_t), "FactorTable");
    for (std::uint64_t i = 2; i <= limit; ++i) {
      if (spf_[i] != 0) continue;
      for (std::uint64_t j = i; j <= limit; j += i)
        if (spf_[j] == 0) spf_[j] = static_cast<std::uint32_t>(i);
    }
  }
  std::uint64_t limit() const { return spf_.size() - 1; }

  // Unsorted list of all positive divisors of n (n <= limit).
  void divisors(std::uint64_t n, std::vector<std::uint64_t>& out) const {
    out.clear();
    out.push_back(1);
    while (n > 1) {
      std::uint64_t p = spf_[n];
      unsigned e = 0;
      while (n % p == 0) {
        n /= p;
        ++e;
      }
      std::size_t base = out.size();
      std::uint64_t pk = 1;
      for (unsigned k = 1; k <= e; ++k) {
        pk *= p;
        for (std::size_t i = 0; i < base; ++i) out.push_back(out[i] * pk);
      }
    }
  }

 private:
  std::vector<std::uint32_t> spf_;
};

}  // namespace spb
