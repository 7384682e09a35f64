#pragma once

// Exhaustive-loop reference implementations. Deliberately naive: they share no
// code with the kernels they are compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <tuple>
#include <vector>

namespace spb::oracle {

using Vec = std::vector<std::uint64_t>;

inline Vec sumset(const Vec& A, const Vec& B, std::uint64_t limit) {
  std::set<std::uint64_t> s;
  for (auto a : A)
    for (auto b : B)
      if (a + b <= limit) s.insert(a + b);
  return {s.begin(), s.end()};
}

inline Vec product_set(const Vec& A, const Vec& B, std::uint64_t limit) {
  std::set<std::uint64_t> s;
  for (auto a : A)
    for (auto b : B)
      if (a * b <= limit) s.insert(a * b);
  return {s.begin(), s.end()};
}

inline Vec power_set_k(const Vec& A, unsigned k, std::uint64_t limit) {
  Vec acc;
  for (auto a : A)
    if (a <= limit) acc.push_back(a);
  for (unsigned i = 1; i < k; ++i) acc = product_set(acc, A, limit);
  return acc;
}

inline std::uint64_t pair_count(const Vec& A, const Vec& B, std::uint64_t X) {
  std::uint64_t n = 0;
  for (auto a : A)
    for (auto b : B)
      if (a >= 1 && b >= 1 && a * b <= X) ++n;
  return n;
}

inline std::uint64_t count_upto(const Vec& A, std::uint64_t X) {
  return static_cast<std::uint64_t>(std::count_if(A.begin(), A.end(), [&](auto a) { return a >= 1 && a <= X; }));
}

inline std::uint32_t tau(std::uint64_t n) {
  std::uint32_t t = 0;
  for (std::uint64_t d = 1; d <= n; ++d)
    if (n % d == 0) ++t;
  return t;
}

struct Quad {
  std::uint64_t a, b, c, d;
};

/// Every (a, b, c, d) with a<b, c<d, ab + cd = n, ab <= cd, all distinct, and
/// (a, b) < (c, d) lexicographically when ab = cd. Loops over a, b, c and
/// solves for d.
inline std::vector<Quad> decompositions(std::uint64_t n) {
  std::vector<Quad> out;
  for (std::uint64_t a = 1; a < n; ++a)
    for (std::uint64_t b = a + 1; a * b < n; ++b) {
      std::uint64_t rest = n - a * b;
      for (std::uint64_t c = 1; c * c < rest; ++c) {
        if (rest % c) continue;
        std::uint64_t d = rest / c;
        if (a * b > c * d) continue;
        if (a * b == c * d && !(a < c || (a == c && b < d))) continue;
        if (a == c || a == d || b == c || b == d) continue;
        out.push_back({a, b, c, d});
      }
    }
  std::sort(out.begin(), out.end(), [](const Quad& x, const Quad& y) {
    return std::tie(x.a, x.b, x.c, x.d) < std::tie(y.a, y.b, y.c, y.d);
  });
  return out;
}

/// sum over decompositions of prod x_e; x indexed by element.
inline double mu(const std::vector<double>& x, std::uint64_t n) {
  long double s = 0;
  for (auto& q : decompositions(n)) s += static_cast<long double>(x[q.a]) * x[q.b] * x[q.c] * x[q.d];
  return static_cast<double>(s);
}

/// Double loop over unordered pairs of decompositions sharing an element;
/// each adds the product of x over the union of their elements.
inline double delta(const std::vector<double>& x, std::uint64_t n) {
  auto qs = decompositions(n);
  long double s = 0;
  for (std::size_t i = 0; i < qs.size(); ++i)
    for (std::size_t j = i + 1; j < qs.size(); ++j) {
      std::set<std::uint64_t> u{qs[i].a, qs[i].b, qs[i].c, qs[i].d};
      std::size_t before = u.size();
      u.insert({qs[j].a, qs[j].b, qs[j].c, qs[j].d});
      if (u.size() == before + 4) continue;  // disjoint
      long double p = 1;
      for (auto e : u) p *= x[e];
      s += p;
    }
  return static_cast<double>(s);
}

inline double ingham_sum(std::uint64_t n) {
  long double s = 0;
  for (std::uint64_t k = 1; k < n; ++k)
    s += static_cast<long double>(tau(k)) * tau(n - k) / std::sqrt(static_cast<long double>(k) * (n - k));
  return static_cast<double>(s);
}

}  // namespace spb::oracle
