#pragma once

// Embedded self-test: kernels against exhaustive loops, representation
// statistics against brute force, and a Monte Carlo property check of the
// two-variable reciprocal-root sum.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "spb/intset.hpp"
#include "spb/oracle.hpp"
#include "spb/randmodel.hpp"
#include "spb/repstats.hpp"
#include "spb/rng.hpp"

namespace spb {

struct SuiteResult {
  std::string name;
  std::uint64_t checks = 0;
  std::uint64_t failures = 0;
  std::string first_failure;
  bool passed() const { return failures == 0 && checks > 0; }
};

namespace detail {

struct Checker {
  SuiteResult& r;
  void operator()(bool ok, const std::string& what) {
    ++r.checks;
    if (!ok && r.failures++ == 0) r.first_failure = what;
  }
};

// SPB_SELFTEST_FAULT=1 perturbs one reference value so the harness can be
// seen to fail.
inline bool fault_injected() {
  const char* v = std::getenv("SPB_SELFTEST_FAULT");
  return v != nullptr && std::string(v) == "1";
}

inline oracle::Vec random_subset(std::uint64_t seed, std::uint64_t idx, std::uint64_t cap, double density) {
  oracle::Vec v;
  for (std::uint64_t x = 0; x <= cap; ++x)
    if (counter_uniform(seed, idx * (cap + 1) + x, 7) < density) v.push_back(x);
  return v;
}

}  // namespace detail

inline SuiteResult selftest_intset(unsigned instances = 200) {
  SuiteResult r;
  r.name = "intset oracles";
  detail::Checker check{r};
  const bool fault = detail::fault_injected();
  for (unsigned i = 0; i < instances; ++i) {
    const std::uint64_t cap = 20 + counter_hash(11, i) % 300;
    const double da = 0.02 + 0.3 * counter_uniform(12, i), db = 0.02 + 0.3 * counter_uniform(13, i);
    auto va = detail::random_subset(21, i, cap, da), vb = detail::random_subset(22, i, cap, db);
    IntSet A = make_set(va, cap), B = make_set(vb, cap);
    const std::uint64_t lim = cap;
    auto want_sum = oracle::sumset(va, vb, lim);
    if (fault && i == 0) want_sum.push_back(lim + 1);
    check(sumset(A, B, lim).elements() == want_sum, "sumset instance " + std::to_string(i));
    check(product_set(A, B, lim).elements() == oracle::product_set(va, vb, lim), "product_set instance " + std::to_string(i));
    check(power_set_k(A, 3, lim).elements() == oracle::power_set_k(va, 3, lim), "power_set_k instance " + std::to_string(i));
    const std::uint64_t X = counter_hash(14, i) % (cap + 1);
    check(pair_count_upto(A, B, X) == oracle::pair_count(va, vb, X), "pair_count_upto instance " + std::to_string(i));
    check(A.count_upto(X) == oracle::count_upto(va, X), "count_upto instance " + std::to_string(i));
  }
  return r;
}

inline SuiteResult selftest_repstats(std::uint64_t n_max = 120) {
  SuiteResult r;
  r.name = "repstats oracles";
  detail::Checker check{r};
  auto m = s2s2_model(0.5);
  std::vector<double> x(n_max + 1, 0.0);
  for (std::uint64_t a = 1; a <= n_max; ++a) x[a] = model_probability(m, a);
  Decomposer dec(n_max);
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    std::vector<Decomposition> got;
    dec.for_each(n, nullptr, [&](const Decomposition& q) { got.push_back(q); });
    auto want = oracle::decompositions(n);
    bool same = got.size() == want.size();
    std::sort(got.begin(), got.end(), [](auto& p, auto& q) { return std::tie(p.a, p.b, p.c, p.d) < std::tie(q.a, q.b, q.c, q.d); });
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].a == want[i].a && got[i].b == want[i].b && got[i].c == want[i].c && got[i].d == want[i].d;
    check(same, "decompositions n=" + std::to_string(n));
    if (n >= 4) {
      double want_mu = oracle::mu(x, n);
      if (detail::fault_injected() && n == 10) want_mu *= 1.5;
      check(rel_close(mu_exact(m, n, &dec), want_mu, 1e-9), "mu_exact n=" + std::to_string(n));
    }
    if (n % 10 == 0) check(rel_close(delta_exact(m, n, kDefaultDeltaCap, false, &dec).delta, oracle::delta(x, n), 1e-9),
                           "delta_exact n=" + std::to_string(n));
  }
  check(std::abs(ingham_sum(10) - oracle::ingham_sum(10)) < 1e-12, "ingham_sum n=10");
  return r;
}

inline SuiteResult selftest_lem41(unsigned samples = 20000, std::uint64_t seed = 41) {
  SuiteResult r;
  r.name = "lem41 Monte Carlo";
  detail::Checker check{r};
  check(std::abs(lem41_sum(0.5, 0.5) - 2.0) < 1e-12, "lem41_sum(1/2, 1/2) = 2");
  check(std::abs(lem41_sum(2.0, 1.0) - std::sqrt(2.0)) < 1e-12, "lem41_sum(2, 1) = sqrt 2");
  const double bound = detail::fault_injected() ? 1.0 : 12.0;
  for (unsigned i = 0; i < samples; ++i) {
    // Mix of small and large arguments: small ones are where the sum peaks.
    const double su = i % 2 ? 1e4 : 10.0, sv = i % 3 ? 1e4 : 10.0;
    const double u = su * (1.0 - counter_uniform(seed, i, 1)), v = sv * (1.0 - counter_uniform(seed, i, 2));
    check(lem41_sum(u, v) <= bound, "lem41_sum(" + std::to_string(u) + ", " + std::to_string(v) + ")");
  }
  return r;
}

inline std::vector<SuiteResult> run_selftest() {
  return {selftest_intset(), selftest_repstats(), selftest_lem41()};
}

}  // namespace spb
