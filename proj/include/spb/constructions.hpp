#pragma once

// Deterministic and randomized set constructions: the dyadic set T,
// prime-interval sets, greedy additive complements, the A^k + A upper-bound
// construction, the (alpha, beta) construction and one level of the
// almost-basis pipeline.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <fftw3.h>
#include <nlohmann/json.hpp>

#include "spb/intset.hpp"
#include "spb/numeric.hpp"
#include "spb/primes.hpp"
#include "spb/randmodel.hpp"
#include "spb/rng.hpp"

namespace spb {

struct ConstructionManifest {
  std::string kind;
  std::map<std::string, double> params;
  std::optional<nlohmann::json> hypothesis_report;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = kind;
    j["params"] = params;
    if (hypothesis_report) j["hypothesis_report"] = *hypothesis_report;
    if (!extra.empty()) j["extra"] = extra;
    return j;
  }
};

/// Smallest s with s^3 >= v.
inline std::uint64_t icbrt_ceil(std::uint64_t v) {
  auto s = static_cast<std::uint64_t>(std::cbrt(static_cast<double>(v)));
  while (s > 0 && s * s * s >= v) --s;
  while (s * s * s < v) ++s;
  return s;
}
/// Smallest s with s^2 >= v.
inline std::uint64_t isqrt_ceil(std::uint64_t v) {
  auto s = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(v)));
  while (s > 0 && s * s >= v) --s;
  while (s * s < v) ++s;
  return s;
}
/// Largest s with s^2 <= v.
inline std::uint64_t isqrt_floor(std::uint64_t v) {
  auto s = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(v)));
  while (s * s > v) --s;
  while ((s + 1) * (s + 1) <= v) ++s;
  return s;
}

/// Powers of two in [lo, hi].
inline std::vector<std::uint64_t> dyadic_grid(std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::uint64_t> g;
  for (std::uint64_t t = 1; t <= hi && t != 0; t <<= 1)
    if (t >= lo) g.push_back(t);
  return g;
}

// --- dyadic T ---------------------------------------------------------------

/// {2} together with all sums of distinct powers of 4, intersected with [0, limit].
inline IntSet dyadic_T(std::uint64_t limit, bool include_zero = true) {
  if (limit < 2) throw precondition_error("dyadic_T: limit must be >= 2");
  IntSetBuilder b(limit);
  b.insert(2);
  // Spread the bits of m into even positions: base-4 digits in {0, 1}.
  for (std::uint64_t m = 0;; ++m) {
    std::uint64_t v = 0;
    for (unsigned i = 0; (m >> i) != 0; ++i) v |= ((m >> i) & 1U) << (2 * i);
    if (v > limit) break;
    if (v != 0 || include_zero) b.insert(v);
  }
  return std::move(b).freeze();
}

// --- prime-interval sets ------------------------------------------------------

struct BlockRecord {
  std::uint64_t lo = 0, hi = 0;  // primes taken from (lo, hi]
  std::uint64_t quota = 0;
  std::uint64_t available = 0;
  std::uint64_t taken = 0;
  std::string note;  // "", "zero quota", "shortfall", "truncated"
};

inline nlohmann::json to_json(const std::vector<BlockRecord>& v) {
  auto out = nlohmann::json::array();
  for (auto& r : v)
    out.push_back({{"lo", r.lo}, {"hi", r.hi}, {"quota", r.quota}, {"available", r.available},
                   {"taken", r.taken}, {"note", r.note}});
  return out;
}

struct PrimeIntervalSet {
  IntSet set;
  std::vector<BlockRecord> blocks;
};

/// Number of primes taken from (2^l, 2^(l+1)]: floor(2^(l/2) / (2 (l ln 2)^alpha)).
inline std::uint64_t prime_block_quota(double alpha, unsigned l) {
  if (l == 0) return 0;
  double q = std::pow(2.0, l / 2.0) / (2.0 * std::pow(l * std::log(2.0), alpha));
  return static_cast<std::uint64_t>(std::floor(q));
}

/// For every block (2^l, 2^(l+1)] with l >= l0 the smallest quota primes of
/// the block; the block containing `limit` is cut at `limit`. Blocks with a
/// zero quota or too few primes are logged and taken as far as possible.
inline PrimeIntervalSet prime_interval_set(double alpha, std::uint64_t limit, unsigned l0 = 1,
                                           const PrimeTable* primes = nullptr) {
  if (!(alpha >= 0.0)) throw precondition_error("prime_interval_set: alpha must be >= 0");
  if (limit < 4) throw precondition_error("prime_interval_set: limit must be >= 4");
  l0 = std::max(l0, 1U);
  std::optional<PrimeTable> own;
  if (primes == nullptr || primes->limit < limit) primes = &own.emplace(sieve_primes(limit));
  PrimeIntervalSet out;
  IntSetBuilder b(limit);
  for (unsigned l = l0; l < 63 && (std::uint64_t{1} << l) < limit; ++l) {
    BlockRecord r;
    r.lo = std::uint64_t{1} << l;
    r.hi = std::min(r.lo * 2, limit);
    r.quota = prime_block_quota(alpha, l);
    auto [pb, pe] = primes->in_range(r.lo, r.hi);
    r.available = static_cast<std::uint64_t>(pe - pb);
    r.taken = std::min(r.quota, r.available);
    for (std::uint64_t i = 0; i < r.taken; ++i) b.insert(pb[i]);
    if (r.quota == 0)
      r.note = "zero quota";
    else if (r.available < r.quota)
      r.note = r.hi < r.lo * 2 ? "truncated" : "shortfall";
    out.blocks.push_back(r);
  }
  out.set = std::move(b).freeze();
  return out;
}

// --- greedy additive complement ---------------------------------------------

namespace detail {

// corr[b] = sum_s U[s] A[L + s - b] for b in [0, R], by FFT convolution of U
// with A reversed on [0, R]. The spectrum of A is computed once.
class Correlator {
 public:
  Correlator(const IntSet& A, std::uint64_t L, std::uint64_t R) : L_(L), R_(R), M_(R - L + 1) {
    std::uint64_t need = M_ + R_ + 1;
    N_ = std::bit_ceil(need);
    detail::check_budget(N_ * 8 * 4, "lorentz_complement FFT");
    real_ = fftw_alloc_real(N_);
    spec_a_ = fftw_alloc_complex(N_ / 2 + 1);
    spec_u_ = fftw_alloc_complex(N_ / 2 + 1);
    fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(N_), real_, spec_u_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(N_), spec_u_, real_, FFTW_ESTIMATE);
    std::fill(real_, real_ + N_, 0.0);
    for (std::uint64_t i = 0; i <= R_; ++i) real_[i] = A.contains(R_ - i) ? 1.0 : 0.0;
    fftw_execute_dft_r2c(fwd_, real_, spec_a_);
  }
  ~Correlator() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(real_);
    fftw_free(spec_a_);
    fftw_free(spec_u_);
  }
  Correlator(const Correlator&) = delete;
  Correlator& operator=(const Correlator&) = delete;

  // U given as words over offsets [0, M).
  std::vector<std::uint32_t> run(const std::vector<std::uint64_t>& U) {
    std::fill(real_, real_ + N_, 0.0);
    for (std::uint64_t s = 0; s < M_; ++s) real_[s] = (U[s >> 6] >> (s & 63)) & 1U ? 1.0 : 0.0;
    fftw_execute_dft_r2c(fwd_, real_, spec_u_);
    for (std::uint64_t i = 0; i < N_ / 2 + 1; ++i) {
      double ar = spec_a_[i][0], ai = spec_a_[i][1], ur = spec_u_[i][0], ui = spec_u_[i][1];
      spec_u_[i][0] = ar * ur - ai * ui;
      spec_u_[i][1] = ar * ui + ai * ur;
    }
    fftw_execute_dft_c2r(inv_, spec_u_, real_);
    std::vector<std::uint32_t> corr(R_ + 1);
    const double scale = 1.0 / static_cast<double>(N_);
    for (std::uint64_t b = 0; b <= R_; ++b)
      corr[b] = static_cast<std::uint32_t>(std::llround(real_[M_ - 1 + b] * scale));
    return corr;
  }

 private:
  std::uint64_t L_, R_, M_, N_;
  double* real_;
  fftw_complex* spec_a_;
  fftw_complex* spec_u_;
  fftw_plan fwd_, inv_;
};

}  // namespace detail

struct LorentzProfileRow {
  std::uint64_t X = 0;
  std::uint64_t B = 0;     // B(X)
  double bound_sum = 0;    // sum_{n <= X, A(n) >= 1} ln A(n) / A(n)
  double ratio = 0;        // B(X) / bound_sum (0 when the sum vanishes)
};

struct LorentzResult {
  IntSet B;
  std::vector<LorentzProfileRow> profile;
  double fitted_C = 0;  // max ratio over the profile
  std::uint64_t evaluations = 0;
  std::uint64_t refreshes = 0;
};

/// Greedy additive complement: B with A + B ⊇ [start, limit]. Targets are
/// handled per dyadic block; inside a block the shift b covering the most
/// still-uncovered targets is taken (ties to the smaller b) until the block is
/// covered. Gains only shrink, so stale gains are valid upper bounds (lazy
/// evaluation); when too many bounds go stale they are recomputed at once.
inline LorentzResult lorentz_complement(const IntSet& A_in, std::uint64_t limit, std::uint64_t start) {
  if (start > limit) throw precondition_error("lorentz_complement: start exceeds limit");
  const IntSet A = A_in.capacity() == limit ? A_in : A_in.with_capacity(limit);
  if (A.count_upto(limit) < 2)
    throw precondition_error("lorentz_complement: A must have at least 2 elements in [1, limit]");
  const std::uint64_t amin = A.min_element();
  if (start < amin)
    throw construction_error("lorentz_complement: target " + std::to_string(start) +
                             " cannot be covered (smallest element of A is " + std::to_string(amin) + ")");

  LorentzResult res;
  IntSetBuilder covered(limit), B(limit);
  auto aw = A.words();

  for (unsigned j = 0;; ++j) {
    std::uint64_t L = j == 0 ? 0 : (std::uint64_t{1} << j);
    if (L > limit) break;
    std::uint64_t R = std::min(limit, (std::uint64_t{2} << j) - 1);
    if (R < start) continue;
    L = std::max(L, start);
    const std::uint64_t M = R - L + 1, nw = (M + 63) / 64;

    std::vector<std::uint64_t> U(nw, 0);
    std::uint64_t remaining = 0;
    for (std::uint64_t s = 0; s < M; ++s)
      if (!covered.contains(L + s)) {
        U[s >> 6] |= std::uint64_t{1} << (s & 63);
        ++remaining;
      }
    if (remaining == 0) continue;

    std::vector<std::uint64_t> live;  // indices of nonzero words of U
    auto rebuild_live = [&] {
      live.clear();
      for (std::uint64_t i = 0; i < nw; ++i)
        if (U[i]) live.push_back(i);
    };
    rebuild_live();
    auto gain = [&](std::uint64_t b) {
      std::uint64_t g = 0;
      const std::int64_t base = static_cast<std::int64_t>(L) - static_cast<std::int64_t>(b);
      for (auto i : live) g += std::popcount(U[i] & bits::window(aw, base + static_cast<std::int64_t>(i * 64)));
      ++res.evaluations;
      return g;
    };

    struct Entry {
      std::uint64_t gain, b;
      bool operator<(const Entry& o) const { return gain != o.gain ? gain < o.gain : b > o.b; }
    };
    std::priority_queue<Entry> heap;
    std::optional<detail::Correlator> corr;
    const std::uint64_t ncand = R + 1;
    const bool use_fft = static_cast<double>(ncand) * static_cast<double>(nw) > 2e7;
    auto refresh = [&] {
      rebuild_live();
      std::vector<Entry> entries;
      if (use_fft) {
        if (!corr) corr.emplace(A, L, R);
        auto c = corr->run(U);
        for (std::uint64_t b = 0; b <= R; ++b)
          if (c[b]) entries.push_back({c[b], b});
      } else {
        for (std::uint64_t b = 0; b <= R; ++b)
          if (auto g = gain(b)) entries.push_back({g, b});
      }
      heap = std::priority_queue<Entry>(std::less<Entry>(), std::move(entries));
      ++res.refreshes;
    };
    refresh();
    const std::uint64_t stale_limit = std::max<std::uint64_t>(1000, ncand / 50);
    std::uint64_t stale = 0;

    while (remaining > 0) {
      if (heap.empty() || heap.top().gain == 0) {
        std::uint64_t s = 0;
        while (!((U[s >> 6] >> (s & 63)) & 1U)) ++s;
        throw construction_error("lorentz_complement: target " + std::to_string(L + s) + " cannot be covered");
      }
      Entry top = heap.top();
      heap.pop();
      std::uint64_t g = gain(top.b);
      if (g != top.gain) {
        if (g) heap.push({g, top.b});
        if (++stale > stale_limit) {
          refresh();
          stale = 0;
        }
        continue;
      }
      B.insert(top.b);
      const std::int64_t base = static_cast<std::int64_t>(L) - static_cast<std::int64_t>(top.b);
      for (auto i : live) U[i] &= ~bits::window(aw, base + static_cast<std::int64_t>(i * 64));
      remaining -= g;
      covered.or_shifted(aw, top.b);
      std::erase_if(live, [&](std::uint64_t i) { return U[i] == 0; });
    }
  }

  res.B = std::move(B).freeze();

  // Exhaustive check; the greedy is never trusted on its own.
  IntSet S = sumset(A, res.B, limit);
  for (std::uint64_t t = start; t <= limit; ++t)
    if (!S.contains(t)) throw construction_error("lorentz_complement: internal coverage failure at " + std::to_string(t));

  // B(X) against sum_{n <= X} ln A(n) / A(n).
  auto grid = dyadic_grid(2, limit);
  if (grid.empty() || grid.back() != limit) grid.push_back(limit);
  CompensatedSum s;
  std::uint64_t count = 0;
  std::size_t gi = 0;
  for (std::uint64_t n = 1; n <= limit && gi < grid.size(); ++n) {
    if (A.contains(n)) ++count;
    if (count >= 1) s += std::log(static_cast<double>(count)) / static_cast<double>(count);
    if (n == grid[gi]) {
      LorentzProfileRow r{n, res.B.count_upto(n), s.value(), 0.0};
      if (r.bound_sum > 0) {
        r.ratio = static_cast<double>(r.B) / r.bound_sum;
        res.fitted_C = std::max(res.fitted_C, r.ratio);
      }
      res.profile.push_back(r);
      ++gi;
    }
  }
  return res;
}

// --- A^k + A upper-bound construction ----------------------------------------

inline double alpha_k(unsigned k) { return (static_cast<double>(k) - 2.0) / (static_cast<double>(k) + 1.0); }
inline double alpha_kl(unsigned k, unsigned l) {
  return (static_cast<double>(k) + l - 2.0) / (static_cast<double>(k) + l);
}

/// Least n0 with [n0, limit] ⊆ S (0 when S ⊇ [0, limit]; limit+1 if limit ∉ S).
inline std::uint64_t coverage_start(const IntSet& S, std::uint64_t limit) {
  for (std::uint64_t t = limit + 1; t-- > 0;)
    if (!S.contains(t)) return t + 1;
  return 0;
}

struct ThmUbResult {
  IntSet A, P1, B;
  double alpha = 0;
  std::uint64_t complement_start = 0;
  std::uint64_t n0 = 0;  // A^k + A ⊇ [n0, limit]
  LorentzResult lorentz;
  std::vector<BlockRecord> blocks;
  ConstructionManifest manifest;
};

/// A = P1 ∪ B with P1 the prime-interval set for alpha(k) = (k-2)/(k+1) and
/// B a greedy complement of P1^k from the least element of P1^k upward.
inline ThmUbResult build_thm_ub(unsigned k, std::uint64_t limit) {
  if (k < 2) throw precondition_error("build_thm_ub: k must be >= 2");
  ThmUbResult r;
  r.alpha = alpha_k(k);
  auto pis = prime_interval_set(r.alpha, limit);
  r.P1 = std::move(pis.set);
  r.blocks = std::move(pis.blocks);
  IntSet Pk = power_set_k(r.P1, k, limit);
  if (Pk.empty()) throw construction_error("build_thm_ub: P1^k is empty below limit");
  r.complement_start = Pk.min_element();
  r.lorentz = lorentz_complement(Pk, limit, r.complement_start);
  r.B = r.lorentz.B;
  r.A = set_union(r.P1, r.B, limit);
  IntSet S = sumset(power_set_k(r.A, k, limit), r.A, limit);
  r.n0 = coverage_start(S, limit);

  r.manifest.kind = "thm-ub";
  r.manifest.params = {{"k", k}, {"alpha", r.alpha}, {"limit", static_cast<double>(limit)}};
  r.manifest.extra = {{"n0", r.n0},
                      {"complement_start", r.complement_start},
                      {"P1", r.P1.size()},
                      {"B", r.B.size()},
                      {"fitted_C", r.lorentz.fitted_C},
                      {"blocks", to_json(r.blocks)}};
  return r;
}

// --- (alpha, beta) construction ----------------------------------------------

struct AlphaBetaResult {
  IntSet A, A1, B;
  unsigned generations = 0;
  std::vector<BlockRecord> blocks;
  LorentzResult lorentz;
  ConstructionManifest manifest;
};

/// Checks 0 <= 1-beta <= alpha <= beta < 1 and alpha >= 1/3; throws naming the
/// first inequality that fails.
inline void check_alphabeta(double alpha, double beta) {
  constexpr double tol = 1e-12;  // lets 1/3, 2/3 given as decimals through
  if (!(0.0 <= 1.0 - beta + tol)) throw precondition_error("alphabeta: 0 <= 1 - beta fails");
  if (!(1.0 - beta <= alpha + tol)) throw precondition_error("alphabeta: 1 - beta <= alpha fails");
  if (!(alpha <= beta + tol)) throw precondition_error("alphabeta: alpha <= beta fails");
  if (!(beta < 1.0)) throw precondition_error("alphabeta: beta < 1 fails");
  if (!(alpha >= 1.0 / 3.0 - tol)) throw precondition_error("alphabeta: alpha >= 1/3 fails");
}

/// Generations x_{i+1} = x_i^7 with primes placed in (x_i, y_i], y_i = x_{i+1}^(alpha/beta):
/// block [2^j x_i, 2^(j+1) x_i] for 1 <= j <= log2(y_i/x_i) - 1 receives the
/// smallest floor((2^(j+1) x_i)^beta (ln x_i)^(1/3)) primes (implied constant 1).
/// Then A = A1 ∪ B with A1 = P1 ∪ {0,1} and B a greedy complement of A1^2 from 0.
inline AlphaBetaResult build_alphabeta(double alpha, double beta, std::uint64_t x1, std::uint64_t limit) {
  check_alphabeta(alpha, beta);
  if (x1 < 64) throw precondition_error("alphabeta: x1 must be >= 64");
  if (limit < 2 * x1) throw precondition_error("alphabeta: limit must be >= 2 x1");
  AlphaBetaResult r;
  auto primes = sieve_primes(limit);
  IntSetBuilder a1(limit);
  a1.insert(0);
  a1.insert(1);
  double xi = static_cast<double>(x1);
  while (xi <= static_cast<double>(limit)) {
    ++r.generations;
    const double next = std::pow(xi, 7.0);
    const double yi = std::pow(next, alpha / beta);
    const int jmax = static_cast<int>(std::floor(std::log2(yi / xi) - 1.0));
    const double lx = std::pow(std::log(xi), 1.0 / 3.0);
    for (int j = 1; j <= jmax; ++j) {
      const double lo = std::ldexp(xi, j), hi = std::ldexp(xi, j + 1);
      if (lo >= static_cast<double>(limit)) break;
      BlockRecord br;
      br.lo = static_cast<std::uint64_t>(lo);
      br.hi = std::min<std::uint64_t>(static_cast<std::uint64_t>(hi), limit);
      br.quota = static_cast<std::uint64_t>(std::floor(std::pow(hi, beta) * lx));
      // Closed block [lo, hi]: primes in (lo - 1, hi].
      auto [pb, pe] = primes.in_range(br.lo - 1, br.hi);
      br.available = static_cast<std::uint64_t>(pe - pb);
      br.taken = std::min(br.quota, br.available);
      for (std::uint64_t i = 0; i < br.taken; ++i) a1.insert(pb[i]);
      if (br.available < br.quota) br.note = br.hi < static_cast<std::uint64_t>(hi) ? "truncated" : "shortfall";
      r.blocks.push_back(br);
    }
    xi = next;
  }
  r.A1 = std::move(a1).freeze();
  r.lorentz = lorentz_complement(product_set(r.A1, r.A1, limit), limit, 0);
  r.B = r.lorentz.B;
  r.A = set_union(r.A1, r.B, limit);

  r.manifest.kind = "alphabeta";
  r.manifest.params = {{"alpha", alpha}, {"beta", beta}, {"x1", static_cast<double>(x1)},
                       {"limit", static_cast<double>(limit)}};
  r.manifest.extra = {{"generations", r.generations}, {"A1", r.A1.size()}, {"B", r.B.size()},
                      {"fitted_C", r.lorentz.fitted_C}, {"blocks", to_json(r.blocks)}};
  return r;
}

// --- almost-basis pipeline ----------------------------------------------------

struct HypothesisReport {
  bool pass = true;
  bool advisory = false;  // size precondition on n not met; run under relax
  std::uint64_t checked = 0;
  std::uint64_t failures = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // count - threshold
  std::uint64_t witness_x = 0, witness_m = 0, witness_count = 0;
  double witness_threshold = 0;
  std::uint64_t first_failure_x = 0, first_failure_m = 0;  // first failing pair in check order

  nlohmann::json to_json() const {
    return {{"pass", pass},
            {"advisory", advisory},
            {"checked", checked},
            {"failures", failures},
            {"worst_margin", checked ? worst_margin : 0.0},
            {"witness", {{"x", witness_x}, {"m", witness_m}, {"count", witness_count}, {"threshold", witness_threshold}}},
            {"first_failure", {{"x", first_failure_x}, {"m", first_failure_m}}}};
  }
};

/// Whether n > 1e5 * eps^(-9/2).
inline bool neolem_size_ok(std::uint64_t n, double eps) {
  return static_cast<double>(n) > 1e5 * std::pow(eps, -4.5);
}

/// Tests |A ∩ [m-2x, m-x]| > eps x^(2/3) ln(n/x) for x in [n^(1/3), eps n] and
/// m in [2x, 2x/eps], on a grid (x doubling, m in steps of x/4) plus `samples`
/// random pairs. The witness is the first pair of least margin.
inline HypothesisReport neolem_hypothesis_check(const IntSet& A, std::uint64_t n, double eps,
                                                std::uint64_t samples = 0, std::uint64_t seed = 0,
                                                bool relax = false) {
  if (!(eps > 0.0 && eps < 0.5)) throw precondition_error("neolem: eps must lie in (0, 1/2)");
  HypothesisReport rep;
  if (!neolem_size_ok(n, eps)) {
    if (!relax) throw precondition_error("neolem: n must exceed 1e5 * eps^(-9/2) (use relax)");
    rep.advisory = true;
  }
  const std::uint64_t x_lo = icbrt_ceil(n);
  const auto x_hi = static_cast<std::uint64_t>(std::floor(eps * static_cast<double>(n)));
  if (x_lo > x_hi) return rep;
  auto check = [&](std::uint64_t x, std::uint64_t m) {
    const std::uint64_t cnt = A.count_range(m - 2 * x, m - x);
    const double dx = static_cast<double>(x);
    const double thr = eps * std::cbrt(dx * dx) * std::log(static_cast<double>(n) / dx);
    const double margin = static_cast<double>(cnt) - thr;
    ++rep.checked;
    if (!(margin > 0)) {
      if (rep.failures++ == 0) {
        rep.first_failure_x = x;
        rep.first_failure_m = m;
      }
      rep.pass = false;
    }
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.witness_x = x;
      rep.witness_m = m;
      rep.witness_count = cnt;
      rep.witness_threshold = thr;
    }
  };
  auto m_hi_of = [&](std::uint64_t x) {
    return static_cast<std::uint64_t>(std::floor(2.0 * static_cast<double>(x) / eps));
  };
  std::vector<std::uint64_t> xs;
  for (std::uint64_t x = x_lo; x <= x_hi; x *= 2) xs.push_back(x);
  if (xs.back() != x_hi) xs.push_back(x_hi);
  for (auto x : xs) {
    const std::uint64_t step = std::max<std::uint64_t>(1, x / 4), mh = m_hi_of(x);
    for (std::uint64_t m = 2 * x; m <= mh; m += step) check(x, m);
    check(x, mh);
  }
  for (std::uint64_t i = 0; i < samples; ++i) {
    const std::uint64_t x = x_lo + counter_hash(seed, i, 1) % (x_hi - x_lo + 1);
    const std::uint64_t mh = m_hi_of(x);
    const std::uint64_t m = 2 * x + counter_hash(seed, i, 2) % (mh - 2 * x + 1);
    check(x, m);
  }
  return rep;
}

struct DefectRow {
  std::uint64_t t = 0;
  std::uint64_t missing = 0;
  double fraction = 0;  // missing / t
};

/// |[start, t] \ S| at every t of `grid`.
inline std::vector<DefectRow> defect_profile(const IntSet& S, std::uint64_t start,
                                             const std::vector<std::uint64_t>& grid) {
  std::vector<DefectRow> rows;
  for (auto t : grid) {
    std::uint64_t span = t >= start ? t - start + 1 : 0;
    std::uint64_t missing = span - (span ? S.count_range(start, t) : 0);
    rows.push_back({t, missing, static_cast<double>(missing) / static_cast<double>(t)});
  }
  return rows;
}

struct NeolemResult {
  bool accepted = false;
  IntSet B;                  // accepted draw, or the last one tried
  std::uint64_t seed_used = 0;
  unsigned attempts = 0;
  double lambda = 0;
  std::uint64_t c_lo = 0, c_hi = 0;  // sampling range
  std::uint64_t clamped = 0;         // elements whose probability hit 1
  std::vector<DefectRow> profile;
  double worst_ratio = 0;  // max missing / (eps t) over the grid, last draw
  double best_worst_ratio = std::numeric_limits<double>::infinity();  // over all draws

  nlohmann::json to_json() const {
    auto prof = nlohmann::json::array();
    for (auto& r : profile) prof.push_back({{"t", r.t}, {"missing", r.missing}, {"fraction", r.fraction}});
    return {{"accepted", accepted}, {"seed_used", seed_used}, {"attempts", attempts}, {"lambda", lambda},
            {"B", B.size()}, {"range", {c_lo, c_hi}}, {"clamped", clamped}, {"worst_ratio", worst_ratio},
            {"best_worst_ratio", best_worst_ratio}, {"profile", prof}};
  }
};

inline RandomSetModel neolem_model(double eps) { return RandomSetModel{ModelFamily::Neolem, 10.0 / eps, 1.0}; }

/// lambda = sum of y_a = 10 eps^-1 a^(-2/3) over [n^(1/3), 2 eps n] (probabilities
/// capped at 1 when `clamp`).
inline double neolem_lambda(std::uint64_t n, double eps, bool clamp = false) {
  const std::uint64_t lo = icbrt_ceil(n);
  const auto hi = static_cast<std::uint64_t>(std::floor(2.0 * eps * static_cast<double>(n)));
  auto m = neolem_model(eps);
  CompensatedSum s;
  for (std::uint64_t a = lo; a <= hi; ++a) s += clamp ? model_probability(m, a) : m.raw_probability(a);
  return s.value();
}

/// Samples B ⊂ [n^(1/3), 2 eps n] with P(a ∈ B) = y_a and accepts the draw iff
/// |B| <= 2 lambda and |[2n^(1/3), t] \ (A+B)| <= eps t at every power of two
/// t in [2n^(1/3), 2n]. Seeds seed, seed+1, ... are tried up to max_retries times.
inline NeolemResult neolem_complement(const IntSet& A, std::uint64_t n, double eps, std::uint64_t seed,
                                      unsigned max_retries = 4, bool relax = false) {
  if (!(eps > 0.0 && eps < 0.5)) throw precondition_error("neolem: eps must lie in (0, 1/2)");
  if (max_retries == 0) throw precondition_error("neolem: max_retries must be >= 1");
  NeolemResult res;
  auto model = neolem_model(eps);
  res.c_lo = icbrt_ceil(n);
  res.c_hi = static_cast<std::uint64_t>(std::floor(2.0 * eps * static_cast<double>(n)));
  if (res.c_lo > res.c_hi) throw precondition_error("neolem: empty sampling range");
  if (model.raw_probability(res.c_lo) >= 1.0 && !relax)
    throw precondition_error("neolem: y_a >= 1 at a=" + std::to_string(res.c_lo) + " (use relax to cap at 1)");
  for (std::uint64_t a = res.c_lo; a <= res.c_hi && model.raw_probability(a) >= 1.0; ++a) ++res.clamped;
  res.lambda = neolem_lambda(n, eps, true);

  const std::uint64_t cap = 2 * n;
  const std::uint64_t start = icbrt_ceil(8 * n);  // ceil(2 n^(1/3))
  const auto grid = dyadic_grid(start, cap);
  const IntSet Ac = A.capacity() == cap ? A : A.with_capacity(cap);
  for (unsigned r = 0; r < max_retries; ++r) {
    const std::uint64_t s = seed + r;
    IntSet B = sample_range(model, res.c_lo, res.c_hi, s, cap);
    IntSet S = sumset(Ac, B, cap);
    auto prof = defect_profile(S, start, grid);
    double worst = 0;
    bool ok = static_cast<double>(B.size()) <= 2.0 * res.lambda;
    for (auto& row : prof) {
      double ratio = static_cast<double>(row.missing) / (eps * static_cast<double>(row.t));
      worst = std::max(worst, ratio);
      if (ratio > 1.0) ok = false;
    }
    res.attempts = r + 1;
    res.seed_used = s;
    res.B = std::move(B);
    res.profile = std::move(prof);
    res.worst_ratio = worst;
    res.best_worst_ratio = std::min(res.best_worst_ratio, worst);
    if (ok) {
      res.accepted = true;
      break;
    }
  }
  return res;
}

struct Thm53Options {
  unsigned max_retries = 4;
  bool relax = false;            // run below the complement size threshold, capping y_a at 1
  bool allow_shortfall = false;  // take all available primes when an interval has too few
  std::uint64_t hypothesis_samples = 1000;
};

struct Thm53Result {
  IntSet P, B;
  std::vector<BlockRecord> intervals;
  std::uint64_t shortfalls = 0;
  unsigned J = 0;
  HypothesisReport hypothesis;
  NeolemResult complement;
  double size_constant = 0;  // |P| / (eps^(-5/6) sqrt(ln 1/eps) N^(1/3))
  ConstructionManifest manifest;
};

/// J = ceil(ln N^(2/3) / ln eps^-1) - 1.
inline unsigned thm53_J(double eps, std::uint64_t N) {
  double v = std::log(std::pow(static_cast<double>(N), 2.0 / 3.0)) / std::log(1.0 / eps);
  return static_cast<unsigned>(std::ceil(v - 1e-12)) - 1;
}

/// ceil(2 sqrt(eps (eps^(j+2) N)^(2/3) ln eps^-(j+1))).
inline std::uint64_t thm53_quota(double eps, std::uint64_t N, unsigned j) {
  double base = std::pow(eps, j + 2.0) * static_cast<double>(N);
  double v = 2.0 * std::sqrt(eps * std::pow(base, 2.0 / 3.0) * (j + 1.0) * std::log(1.0 / eps));
  return static_cast<std::uint64_t>(std::ceil(v - 1e-9));
}

/// One level: primes from the square-root images of I_{j,r} =
/// [r eps^(j+2) N / 2, (r+1) eps^(j+2) N / 2], then a random complement of P^2.
inline Thm53Result build_thm53_level(double eps, std::uint64_t N, std::uint64_t seed,
                                     const Thm53Options& opt = {}) {
  if (!(eps > 0.0 && eps < 0.5)) throw precondition_error("thm53: eps must lie in (0, 1/2)");
  if (N < 8) throw precondition_error("thm53: N must be >= 8");
  Thm53Result r;
  const std::uint64_t cap = 2 * N;
  check_capacity(cap);
  auto primes = sieve_primes(isqrt_floor(cap) + 1);
  IntSetBuilder pb(cap);
  r.J = thm53_J(eps, N);
  const auto r_lo = static_cast<std::uint64_t>(std::ceil(2.0 / eps - 1e-9));
  const auto r_hi = static_cast<std::uint64_t>(std::floor(4.0 / (eps * eps) + 1e-9));
  for (unsigned j = 0; j <= r.J; ++j) {
    const double width = std::pow(eps, j + 2.0) * static_cast<double>(N) / 2.0;
    const std::uint64_t quota = thm53_quota(eps, N, j);
    for (std::uint64_t rr = r_lo; rr <= r_hi; ++rr) {
      BlockRecord br;
      br.lo = static_cast<std::uint64_t>(std::ceil(std::sqrt(rr * width)));
      br.hi = static_cast<std::uint64_t>(std::floor(std::sqrt((rr + 1) * width)));
      br.quota = quota;
      auto [b, e] = br.hi >= br.lo ? primes.in_range(br.lo - 1, br.hi)
                                   : std::pair<const std::uint64_t*, const std::uint64_t*>{nullptr, nullptr};
      br.available = static_cast<std::uint64_t>(e - b);
      br.taken = std::min(quota, br.available);
      if (br.available < quota) {
        br.note = "shortfall";
        ++r.shortfalls;
        if (!opt.allow_shortfall)
          throw construction_error("thm53: interval j=" + std::to_string(j) + " r=" + std::to_string(rr) +
                                   " has " + std::to_string(br.available) + " primes in [" +
                                   std::to_string(br.lo) + ", " + std::to_string(br.hi) + "], needs " +
                                   std::to_string(quota));
      }
      for (std::uint64_t i = 0; i < br.taken; ++i) pb.insert(b[i]);
      r.intervals.push_back(br);
    }
  }
  r.P = std::move(pb).freeze();
  IntSet P2 = product_set(r.P, r.P, cap);
  r.hypothesis = neolem_hypothesis_check(P2, N, eps, opt.hypothesis_samples, seed, opt.relax);
  r.complement = neolem_complement(P2, N, eps, seed, opt.max_retries, opt.relax);
  r.B = r.complement.B;
  r.size_constant = static_cast<double>(r.P.size()) /
                    (std::pow(eps, -5.0 / 6.0) * std::sqrt(std::log(1.0 / eps)) * std::cbrt(static_cast<double>(N)));

  r.manifest.kind = "thm53-level";
  r.manifest.params = {{"eps", eps}, {"N", static_cast<double>(N)}, {"seed", static_cast<double>(seed)},
                       {"max_retries", opt.max_retries}, {"relax", opt.relax ? 1 : 0},
                       {"allow_shortfall", opt.allow_shortfall ? 1 : 0}};
  r.manifest.hypothesis_report = r.hypothesis.to_json();
  r.manifest.extra = {{"P", r.P.size()}, {"B", r.B.size()}, {"J", r.J}, {"shortfalls", r.shortfalls},
                      {"size_constant", r.size_constant}, {"complement", r.complement.to_json()}};
  return r;
}

}  // namespace spb
