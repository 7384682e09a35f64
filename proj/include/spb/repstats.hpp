#pragma once

// Representations n = ab + cd with a<b, c<d, ab <= cd and a,b,c,d distinct:
// enumeration, counts, first/second moments under the random-set model and
// the analytic sums that accompany them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spb/intset.hpp"
#include "spb/numeric.hpp"
#include "spb/parallel.hpp"
#include "spb/primes.hpp"
#include "spb/randmodel.hpp"

namespace spb {

struct Decomposition {
  std::uint64_t a, b, c, d;
  bool operator==(const Decomposition&) const = default;
};

/// Enumerates canonical decompositions using a shared factor table, so many
/// n can be processed without refactoring from scratch.
class Decomposer {
 public:
  explicit Decomposer(std::uint64_t limit) : ft_(std::max<std::uint64_t>(limit, 2)) {}

  std::uint64_t limit() const { return ft_.limit(); }

  // Pairs (a, b) with a < b and ab = k, ascending in a.
  void factor_pairs(std::uint64_t k, std::vector<std::pair<std::uint64_t, std::uint64_t>>& out,
                    std::vector<std::uint64_t>& scratch) const {
    out.clear();
    ft_.divisors(k, scratch);
    for (auto a : scratch)
      if (a * a < k) out.emplace_back(a, k / a);
    std::sort(out.begin(), out.end());
  }

  /// Calls fn(Decomposition) for each canonical decomposition of n whose
  /// elements all lie in `restrict` (when given). Order: by ab, then (a,b),
  /// then (c,d).
  template <class Fn>
  void for_each(std::uint64_t n, const IntSet* restrict, Fn&& fn) const {
    if (n > limit()) throw range_error("decompositions: n exceeds factor table limit");
    std::vector<std::pair<std::uint64_t, std::uint64_t>> left, right;
    std::vector<std::uint64_t> scratch;
    auto keep = [&](std::vector<std::pair<std::uint64_t, std::uint64_t>>& v) {
      if (restrict == nullptr) return;
      std::erase_if(v, [&](auto& p) { return !restrict->contains(p.first) || !restrict->contains(p.second); });
    };
    for (std::uint64_t k = 2; 2 * k <= n; ++k) {
      factor_pairs(k, left, scratch);
      keep(left);
      if (left.empty()) continue;
      const bool tie = (2 * k == n);
      if (tie) {
        right = left;
      } else {
        factor_pairs(n - k, right, scratch);
        keep(right);
      }
      for (std::size_t i = 0; i < left.size(); ++i) {
        auto [a, b] = left[i];
        for (std::size_t j = tie ? i + 1 : 0; j < right.size(); ++j) {
          auto [c, d] = right[j];
          if (a == c || a == d || b == c || b == d) continue;
          fn(Decomposition{a, b, c, d});
        }
      }
    }
  }

 private:
  FactorTable ft_;
};

inline std::vector<Decomposition> decompositions(std::uint64_t n, const IntSet* restrict = nullptr) {
  if (n == 0) throw precondition_error("decompositions: n must be >= 1");
  std::vector<Decomposition> out;
  Decomposer(n).for_each(n, restrict, [&](const Decomposition& q) { out.push_back(q); });
  return out;
}

/// Number of decompositions with ab < cd strictly (the tie-free count).
inline std::uint64_t strict_count(const std::vector<Decomposition>& qs) {
  return static_cast<std::uint64_t>(
      std::count_if(qs.begin(), qs.end(), [](auto& q) { return q.a * q.b < q.c * q.d; }));
}

/// R(n): canonical decompositions with all four elements in A.
inline std::uint64_t rep_count(std::uint64_t n, const IntSet& A) {
  if (n == 0) throw precondition_error("rep_count: n must be >= 1");
  if (n > A.capacity()) throw range_error("rep_count: n exceeds set capacity");
  std::uint64_t r = 0;
  Decomposer(n).for_each(n, &A, [&](const Decomposition&) { ++r; });
  return r;
}

namespace detail {
inline std::vector<double> probabilities_upto(const RandomSetModel& m, std::uint64_t n) {
  std::vector<double> x(n + 1, 0.0);
  for (std::uint64_t a = 1; a <= n; ++a) x[a] = model_probability(m, a);
  return x;
}
}  // namespace detail

/// E R(n) = sum over decompositions of x_a x_b x_c x_d.
inline double mu_exact(const RandomSetModel& m, std::uint64_t n, const Decomposer* dec = nullptr) {
  m.validate();
  if (n < 4) return 0.0;
  std::optional<Decomposer> own;
  if (dec == nullptr) dec = &own.emplace(n);
  auto x = detail::probabilities_upto(m, n);
  CompensatedSum s;
  dec->for_each(n, nullptr, [&](const Decomposition& q) { s += x[q.a] * x[q.b] * x[q.c] * x[q.d]; });
  return s.value();
}

/// T_n = sum_{0<k<n} tau(k) tau(n-k) / sqrt(k (n-k)).
inline double ingham_sum(std::uint64_t n, const DivisorTable& tau) {
  if (n < 2) throw precondition_error("ingham_sum: n must be >= 2");
  if (n > tau.limit) throw range_error("ingham_sum: n exceeds divisor table");
  CompensatedSum s;
  const double dn = static_cast<double>(n);
  for (std::uint64_t k = 1; k < n; ++k) {
    double dk = static_cast<double>(k);
    s += static_cast<double>(tau[k]) * tau[n - k] / std::sqrt(dk * (dn - dk));
  }
  return s.value();
}
inline double ingham_sum(std::uint64_t n) { return ingham_sum(n, divisor_counts(std::max<std::uint64_t>(n, 2))); }

/// sum_{0<k<n} tau(k) tau(n-k), exact.
inline std::uint64_t ingham_convolution(std::uint64_t n, const DivisorTable& tau) {
  if (n < 2) throw precondition_error("ingham_convolution: n must be >= 2");
  if (n > tau.limit) throw range_error("ingham_convolution: n exceeds divisor table");
  std::uint64_t s = 0;
  for (std::uint64_t k = 1; k < n; ++k) s += std::uint64_t{tau[k]} * tau[n - k];
  return s;
}
inline std::uint64_t ingham_convolution(std::uint64_t n) {
  return ingham_convolution(n, divisor_counts(std::max<std::uint64_t>(n, 2)));
}

/// (6/pi^2) n (ln n)^2 sigma_{-1}(n): the asymptotic main term of the convolution.
inline double ingham_main_term(std::uint64_t n) {
  CompensatedSum sig;
  for (std::uint64_t q = 1; q * q <= n; ++q) {
    if (n % q) continue;
    sig += 1.0 / static_cast<double>(q);
    if (q * q != n) sig += 1.0 / static_cast<double>(n / q);
  }
  const double dn = static_cast<double>(n), L = std::log(dn);
  return 6.0 / (M_PI * M_PI) * dn * L * L * sig.value();
}

/// c^4 / (8 ln(n+1)) * T_n, with c the raw model constant.
inline double mu_divisor_form(const RandomSetModel& m, std::uint64_t n, const DivisorTable& tau) {
  if (n < 2) throw precondition_error("mu_divisor_form: n must be >= 2");
  return std::pow(m.c, 4) / (8.0 * std::log(static_cast<double>(n) + 1.0)) * ingham_sum(n, tau);
}
inline double mu_divisor_form(const RandomSetModel& m, std::uint64_t n) {
  return mu_divisor_form(m, n, divisor_counts(std::max<std::uint64_t>(n, 2)));
}

inline constexpr std::uint64_t kDefaultDeltaCap = 20000;

struct DeltaResult {
  double delta = 0;
  std::uint64_t decompositions = 0;
  // Unordered pairs of distinct decompositions sharing exactly 1, 2, 3 elements.
  std::uint64_t pairs_shared1 = 0, pairs_shared2 = 0, pairs_shared3 = 0;
};

/// Delta_n = sum over unordered pairs of distinct decompositions sharing at
/// least one element of the probability that all their elements are drawn.
///
/// Pairs are never enumerated. For every element subset J (|J| = 1..3) the
/// sum over pairs whose intersection contains J is ((sum w)^2 - sum w^2)/2;
/// inclusion-exclusion over supersets turns these into sums over exact
/// intersections I, and each such pair contributes w_i w_j / prod_{e in I} x_e.
inline DeltaResult delta_exact(const RandomSetModel& m, std::uint64_t n,
                               std::uint64_t cap = kDefaultDeltaCap, bool force = false,
                               const Decomposer* dec = nullptr) {
  m.validate();
  if (n > cap && !force)
    throw precondition_error("delta_exact: n=" + std::to_string(n) + " above cap " +
                             std::to_string(cap) + " (pass force to override)");
  if (n >= (std::uint64_t{1} << 21)) throw precondition_error("delta_exact: n must be < 2^21");
  DeltaResult res;
  if (n < 4) return res;
  std::optional<Decomposer> own;
  if (dec == nullptr) dec = &own.emplace(n);
  auto x = detail::probabilities_upto(m, n);

  struct Single {
    CompensatedSum s, s2, sup;  // sup: exact-intersection sums of strict supersets
    std::uint64_t m = 0;
  };
  struct Quad {
    std::uint32_t e[4];
    double w;
  };
  struct PairSup {
    std::uint64_t p, q;
    double e;
    bool operator<(const PairSup& o) const { return p != o.p ? p < o.p : q < o.q; }
  };
  auto choose2 = [](std::uint64_t v) { return v * (v - 1) / 2; };
  std::vector<Single> single(n + 1);
  std::vector<Quad> quads;
  std::vector<PairSup> pair_sup;
  CompensatedSum delta;
  std::uint64_t c3 = 0, c2 = 0, c1 = 0;

  // Triples: two decompositions share {p, q, r} only if each pairs a different
  // one of them with the fourth element, so a triple has at most three
  // members, found by division. The member whose outside partner is smallest
  // owns the triple.
  auto triple = [&](std::uint64_t p, std::uint64_t q, std::uint64_t r, double w) {
    double ws[3] = {w, 0, 0};
    int m = 1;
    auto other = [&](std::uint64_t partner, std::uint64_t u, std::uint64_t v) {
      if (u * v >= n || (n - u * v) % partner != 0) return true;
      const std::uint64_t y = (n - u * v) / partner;
      if (y == p || y == q || y == r) return true;
      if (partner < p) return false;
      ws[m++] = x[y] * x[p] * x[q] * x[r];
      return true;
    };
    if (!other(q, p, r) || !other(r, p, q) || m < 2) return;
    const double E = ws[0] * ws[1] + ws[0] * ws[2] + ws[1] * ws[2];
    delta += E / (x[p] * x[q] * x[r]);
    std::uint64_t t[3] = {p, q, r};
    std::sort(t, t + 3);
    pair_sup.push_back({t[0], t[1], E});
    pair_sup.push_back({t[0], t[2], E});
    pair_sup.push_back({t[1], t[2], E});
    for (auto v : t) single[v].sup += E;
    c3 += choose2(m);
  };

  dec->for_each(n, nullptr, [&](const Decomposition& d) {
    const double w = x[d.a] * x[d.b] * x[d.c] * x[d.d];
    triple(d.b, d.c, d.d, w);
    triple(d.a, d.c, d.d, w);
    triple(d.d, d.a, d.b, w);
    triple(d.c, d.a, d.b, w);
    Quad qd{{static_cast<std::uint32_t>(d.a), static_cast<std::uint32_t>(d.b), static_cast<std::uint32_t>(d.c),
             static_cast<std::uint32_t>(d.d)},
            w};
    std::sort(qd.e, qd.e + 4);
    for (auto v : qd.e) {
      auto& a = single[v];
      a.s += w;
      a.s2 += w * w;
      ++a.m;
    }
    quads.push_back(qd);
    ++res.decompositions;
  });
  std::sort(pair_sup.begin(), pair_sup.end());

  // Pairs: bucket decompositions by each element that has a larger partner in
  // the pair, then sweep the smaller element with dense accumulators.
  std::vector<std::uint32_t> start(n + 2, 0), order(3 * quads.size());
  for (const auto& qd : quads)
    for (int i = 0; i < 3; ++i) ++start[qd.e[i] + 1];
  for (std::uint64_t v = 0; v <= n; ++v) start[v + 1] += start[v];
  {
    std::vector<std::uint32_t> pos(start.begin(), start.end() - 1);
    for (std::uint32_t k = 0; k < quads.size(); ++k)
      for (int i = 0; i < 3; ++i) order[pos[quads[k].e[i]]++] = k;
  }
  std::vector<double> S(n + 1, 0.0), S2(n + 1, 0.0), sup(n + 1, 0.0);
  std::vector<std::uint32_t> M(n + 1, 0), touched;
  auto ps = pair_sup.begin();
  for (std::uint64_t p = 1; p <= n; ++p) {
    touched.clear();
    for (std::uint32_t k = start[p]; k < start[p + 1]; ++k) {
      const Quad& qd = quads[order[k]];
      int i = 0;
      while (qd.e[i] != p) ++i;
      for (int j = i + 1; j < 4; ++j) {
        const std::uint32_t q = qd.e[j];
        if (M[q]++ == 0) touched.push_back(q);
        S[q] += qd.w;
        S2[q] += qd.w * qd.w;
      }
    }
    for (; ps != pair_sup.end() && ps->p == p; ++ps) sup[ps->q] += ps->e;
    for (auto q : touched) {
      if (M[q] >= 2) {
        const double E = 0.5 * (S[q] * S[q] - S2[q]) - sup[q];
        delta += E / (x[p] * x[q]);
        single[p].sup += E;
        single[q].sup += E;
        c2 += choose2(M[q]);
      }
      S[q] = S2[q] = sup[q] = 0;
      M[q] = 0;
    }
  }

  for (std::uint64_t e = 1; e <= n; ++e) {
    const auto& a = single[e];
    if (a.m < 2) continue;
    const double s = a.s.value();
    delta += (0.5 * (s * s - a.s2.value()) - a.sup.value()) / x[e];
    c1 += choose2(a.m);
  }
  // c3 = P3, c2 = P2 + 3 P3, c1 = P1 + 2 P2 + 3 P3.
  res.pairs_shared3 = c3;
  res.pairs_shared2 = c2 - 3 * c3;
  res.pairs_shared1 = c1 - 2 * res.pairs_shared2 - 3 * c3;
  res.delta = std::max(0.0, delta.value());
  return res;
}

struct JansonBound {
  double raw = 1;      // exp(-mu + delta)
  double value = 1;    // min(1, raw)
  bool clipped = false;
};

inline JansonBound janson_bound(double mu, double delta) {
  if (!(mu >= 0.0) || !(delta >= 0.0)) throw precondition_error("janson_bound: mu and delta must be >= 0");
  JansonBound j;
  j.raw = std::exp(-mu + delta);
  j.clipped = j.raw > 1.0;
  j.value = std::min(1.0, j.raw);
  return j;
}

/// sum over integers j with 1/2 - v <= j <= u - 1/2 of 1/sqrt((u-j)(v+j)).
inline double lem41_sum(double u, double v) {
  if (!(u > 0.0) || !(v > 0.0)) throw precondition_error("lem41_sum: u and v must be positive");
  const auto lo = static_cast<std::int64_t>(std::ceil(0.5 - v));
  const auto hi = static_cast<std::int64_t>(std::floor(u - 0.5));
  CompensatedSum s;
  for (std::int64_t j = lo; j <= hi; ++j) {
    const double dj = static_cast<double>(j);
    s += 1.0 / std::sqrt((u - dj) * (v + dj));
  }
  return s.value();
}

enum class Monotone { Decreasing, Increasing };

struct SumIntegralReport {
  double sum = 0;
  double integral = 0;  // (1/l) * integral over the extended range; may be +inf
  bool holds = false;
  bool divergent = false;  // infinite integral: the inequality holds vacuously
};

/// For f monotone on the extended range and points spaced at least l apart:
/// decreasing f gives sum f(a_i) <= (1/l) int_{a_1 - l}^{a_k} f, increasing f
/// gives sum f(a_i) <= (1/l) int_{a_1}^{a_k + l} f. `integral(lo, hi)` must
/// return the exact integral (or +inf when it diverges).
inline SumIntegralReport monotone_sum_integral_check(
    const std::function<double(double)>& f, const std::function<double(double, double)>& integral,
    std::vector<double> points, double l, Monotone dir = Monotone::Decreasing) {
  if (!(l > 0.0)) throw precondition_error("monotone_sum_integral_check: l must be positive");
  if (points.empty()) throw precondition_error("monotone_sum_integral_check: no points");
  std::sort(points.begin(), points.end());
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i] - points[i - 1] < l)
      throw precondition_error("monotone_sum_integral_check: points closer than l at " +
                               std::to_string(points[i - 1]));
  SumIntegralReport r;
  CompensatedSum s;
  for (double p : points) s += f(p);
  r.sum = s.value();
  const double a = points.front(), b = points.back();
  const double I = dir == Monotone::Decreasing ? integral(a - l, b) : integral(a, b + l);
  r.integral = I / l;
  r.divergent = std::isinf(r.integral);
  r.holds = r.divergent || r.sum <= r.integral * (1 + 1e-12);
  return r;
}

struct RepresentationScan {
  std::uint64_t n_from = 0, n_to = 0;
  std::vector<std::uint64_t> zero;  // n in range with R(n) = 0
};

/// Lists every n in [n_from, n_to] with R(n) = 0 for the set A.
/// Products P = {ab <= n_to : a<b in A} are formed once; n outside P+P has no
/// representation at all, and each n inside is confirmed by searching for a
/// pair of products whose factor pairs are disjoint.
inline RepresentationScan representation_scan(const IntSet& A, std::uint64_t n_from, std::uint64_t n_to) {
  if (n_to > A.capacity()) throw range_error("representation_scan: range exceeds set capacity");
  RepresentationScan out{n_from, n_to, {}};
  if (n_from > n_to) return out;

  // Product -> factor pairs, CSR layout.
  auto el = A.elements_upto(n_to);
  std::erase(el, 0);
  std::vector<std::uint32_t> offs(n_to + 2, 0);
  for (std::size_t i = 0; i < el.size(); ++i)
    for (std::size_t j = i + 1; j < el.size() && el[i] * el[j] <= n_to; ++j) ++offs[el[i] * el[j] + 1];
  for (std::uint64_t p = 1; p <= n_to + 1; ++p) offs[p] += offs[p - 1];
  std::vector<std::pair<std::uint32_t, std::uint32_t>> fac(offs.back());
  {
    auto fill = offs;
    for (std::size_t i = 0; i < el.size(); ++i)
      for (std::size_t j = i + 1; j < el.size() && el[i] * el[j] <= n_to; ++j)
        fac[fill[el[i] * el[j]]++] = {static_cast<std::uint32_t>(el[i]), static_cast<std::uint32_t>(el[j])};
  }
  IntSetBuilder pb(n_to);
  for (std::uint64_t p = 1; p <= n_to; ++p)
    if (offs[p + 1] > offs[p]) pb.insert(p);
  IntSet P = std::move(pb).freeze();
  IntSet PP = sumset(P, P, n_to);

  auto disjoint = [&](std::uint64_t p, std::uint64_t q) {
    for (auto i = offs[p]; i < offs[p + 1]; ++i)
      for (auto j = offs[q]; j < offs[q + 1]; ++j) {
        auto [a, b] = fac[i];
        auto [c, d] = fac[j];
        if (a != c && a != d && b != c && b != d) return true;
      }
    return false;
  };
  for (std::uint64_t n = std::max<std::uint64_t>(n_from, 1); n <= n_to; ++n) {
    bool found = false;
    if (PP.contains(n)) {
      for (std::uint64_t p = P.min_element(); p <= n / 2 && p <= n_to; p = P.next(p + 1)) {
        if (P.contains(n - p) && disjoint(p, n - p)) {
          found = true;
          break;
        }
      }
    }
    if (!found) out.zero.push_back(n);
  }
  if (n_from == 0) out.zero.insert(out.zero.begin(), 0);
  return out;
}

struct RepStats {
  std::uint64_t n = 0;
  std::uint64_t dec_count = 0;
  std::uint64_t dec_count_strict = 0;
  std::optional<std::uint64_t> rep;  // R(n) when a set is supplied
  double mu_exact = 0;
  double mu_divisor_form = 0;
  std::optional<DeltaResult> delta;
  double janson = 1;  // min(1, exp(-mu + delta)); delta taken as 0 when absent
};

struct RepStatsOptions {
  bool with_delta = false;
  std::uint64_t delta_cap = kDefaultDeltaCap;
  bool force = false;
};

/// One row per n in [n_from, n_to], computed in parallel over n.
inline std::vector<RepStats> repstats_batch(const RandomSetModel& m, std::uint64_t n_from,
                                            std::uint64_t n_to, const IntSet* A = nullptr,
                                            const RepStatsOptions& opt = {}) {
  m.validate();
  std::vector<RepStats> rows;
  n_from = std::max<std::uint64_t>(n_from, 1);
  if (n_from > n_to) return rows;
  if (opt.with_delta && n_to > opt.delta_cap && !opt.force)
    throw precondition_error("repstats: n=" + std::to_string(n_to) + " above delta cap " +
                             std::to_string(opt.delta_cap));
  if (A != nullptr && n_to > A->capacity()) throw range_error("repstats: n exceeds set capacity");
  Decomposer dec(n_to);
  auto tau = divisor_counts(std::max<std::uint64_t>(n_to, 2));
  rows.resize(n_to - n_from + 1);
  parallel_for(n_from, n_to + 1, [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t n = lo; n < hi; ++n) {
      RepStats& r = rows[n - n_from];
      r.n = n;
      std::uint64_t cnt = 0, strict = 0, rep = 0;
      dec.for_each(n, nullptr, [&](const Decomposition& q) {
        ++cnt;
        if (q.a * q.b < q.c * q.d) ++strict;
        if (A && A->contains(q.a) && A->contains(q.b) && A->contains(q.c) && A->contains(q.d)) ++rep;
      });
      r.dec_count = cnt;
      r.dec_count_strict = strict;
      if (A) r.rep = rep;
      r.mu_exact = mu_exact(m, n, &dec);
      r.mu_divisor_form = n >= 2 ? mu_divisor_form(m, n, tau) : 0.0;
      double d = 0;
      if (opt.with_delta) {
        r.delta = delta_exact(m, n, opt.delta_cap, true, &dec);
        d = r.delta->delta;
      }
      r.janson = janson_bound(r.mu_exact, d).value;
    }
  });
  return rows;
}

}  // namespace spb
