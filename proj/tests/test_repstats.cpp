#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "spb/oracle.hpp"
#include "spb/repstats.hpp"

using namespace spb;

namespace {

std::vector<double> probs(const RandomSetModel& m, std::uint64_t n) {
  std::vector<double> x(n + 1, 0.0);
  for (std::uint64_t a = 1; a <= n; ++a) x[a] = model_probability(m, a);
  return x;
}

}  // namespace

TEST(Decompositions, Examples) {
  auto d10 = decompositions(10);
  ASSERT_EQ(d10.size(), 1u);
  EXPECT_EQ(d10[0], (Decomposition{1, 4, 2, 3}));
  EXPECT_TRUE(decompositions(3).empty());
  IntSet R = IntSet::from_elements({1, 2, 3, 4}, 20);
  auto d14 = decompositions(14, &R);
  ASSERT_EQ(d14.size(), 1u);
  EXPECT_EQ(d14[0], (Decomposition{1, 2, 3, 4}));
}

TEST(Decompositions, MatchBruteForceAndAreCanonical) {
  Decomposer dec(500);
  for (std::uint64_t n = 1; n <= 500; ++n) {
    std::vector<Decomposition> got;
    dec.for_each(n, nullptr, [&](const Decomposition& q) { got.push_back(q); });
    for (auto& q : got) {
      ASSERT_EQ(q.a * q.b + q.c * q.d, n);
      ASSERT_LT(q.a, q.b);
      ASSERT_LT(q.c, q.d);
      ASSERT_LE(q.a * q.b, q.c * q.d);
      ASSERT_EQ((std::set<std::uint64_t>{q.a, q.b, q.c, q.d}).size(), 4u);
    }
    std::sort(got.begin(), got.end(), [](auto& p, auto& q) {
      return std::tie(p.a, p.b, p.c, p.d) < std::tie(q.a, q.b, q.c, q.d);
    });
    auto want = oracle::decompositions(n);
    ASSERT_EQ(got.size(), want.size()) << "n=" << n;
    for (std::size_t i = 0; i < got.size(); ++i)
      ASSERT_EQ(got[i], (Decomposition{want[i].a, want[i].b, want[i].c, want[i].d})) << "n=" << n;
  }
}

// Every 4-element representation {a,b,c,d} with ab + cd = n is listed once:
// distinct canonical decompositions give distinct (pair, pair) multisets.
TEST(Decompositions, NoDuplicateRepresentations) {
  Decomposer dec(2000);
  for (std::uint64_t n = 4; n <= 2000; ++n) {
    std::set<std::pair<std::pair<std::uint64_t, std::uint64_t>, std::pair<std::uint64_t, std::uint64_t>>> seen;
    std::uint64_t count = 0;
    dec.for_each(n, nullptr, [&](const Decomposition& q) {
      auto p1 = std::make_pair(q.a, q.b), p2 = std::make_pair(q.c, q.d);
      seen.insert({std::min(p1, p2), std::max(p1, p2)});
      ++count;
    });
    ASSERT_EQ(seen.size(), count) << "n=" << n;
  }
}

// Ordered tuples with ab != cd are exactly eight per canonical decomposition.
TEST(Decompositions, EightOrderedTuplesPerCanonical) {
  for (std::uint64_t n = 1; n <= 300; ++n) {
    std::uint64_t ordered = 0;
    for (std::uint64_t a = 1; a <= n; ++a)
      for (std::uint64_t b = 1; a * b < n; ++b)
        for (std::uint64_t c = 1; c <= n - a * b; ++c) {
          const std::uint64_t r = n - a * b;
          if (r % c != 0) continue;
          const std::uint64_t d = r / c;
          std::set<std::uint64_t> all{a, b, c, d};
          if (all.size() == 4 && a * b != c * d) ++ordered;
        }
    std::uint64_t canonical = 0;
    for (auto& q : decompositions(n))
      if (q.a * q.b != q.c * q.d) ++canonical;
    ASSERT_EQ(ordered, 8 * canonical) << n;
  }
}

TEST(RepCount, Examples) {
  EXPECT_EQ(rep_count(14, IntSet::from_elements({1, 2, 3, 4}, 20)), 1u);
  IntSet E = make_set(std::vector<std::uint64_t>{}, 200);
  for (std::uint64_t n = 1; n <= 200; ++n) EXPECT_EQ(rep_count(n, E), 0u);
  IntSet I = IntSet::interval(1, 50, 100);
  std::uint64_t want = 0;
  for (auto& q : oracle::decompositions(100))
    if (q.a <= 50 && q.b <= 50 && q.c <= 50 && q.d <= 50) ++want;
  EXPECT_EQ(rep_count(100, I), want);
  EXPECT_THROW(rep_count(101, I), range_error);
}

TEST(StrictCount, ExcludesTies) {
  // 2*6 + 3*4 = 24 is a tie (ab = cd = 12).
  auto qs = decompositions(24);
  EXPECT_LT(strict_count(qs), qs.size());
}

TEST(Mu, Examples) {
  auto m = s2s2_model(0.5);
  auto x = probs(m, 10);
  EXPECT_NEAR(mu_exact(m, 10), x[1] * x[4] * x[2] * x[3], 1e-15);
  EXPECT_NEAR(mu_exact(m, 10), 0.01117, 5e-5);
  EXPECT_EQ(mu_exact(m, 3), 0.0);
}

TEST(Mu, MatchesOracle) {
  auto m = s2s2_model(0.7);
  auto x = probs(m, 400);
  Decomposer dec(400);
  for (std::uint64_t n = 4; n <= 400; n += 3) EXPECT_TRUE(rel_close(mu_exact(m, n, &dec), oracle::mu(x, n), 1e-12)) << n;
}

TEST(Mu, LogarithmicGrowthWithClamp) {
  auto m = s2s2_model(2.0);
  const std::uint64_t n = 100000;
  double ratio = mu_exact(m, n) / (std::pow(2.0, 4) * std::log(static_cast<double>(n)));
  EXPECT_GE(ratio, 0.2);
}

TEST(Ingham, Examples) {
  EXPECT_NEAR(ingham_sum(10), 13.4447, 1e-4);
  EXPECT_NEAR(ingham_sum(10), oracle::ingham_sum(10), 1e-12);
  EXPECT_EQ(ingham_sum(2), 1.0);
  EXPECT_EQ(ingham_convolution(10), 58u);
  EXPECT_EQ(ingham_convolution(2), 1u);
  for (std::uint64_t n : {37ull, 100ull, 360ull}) EXPECT_NEAR(ingham_sum(n), oracle::ingham_sum(n), 1e-9 * ingham_sum(n));
}

TEST(Ingham, LowerBoundAtDeskScale) {
  double L = std::log(1e5);
  EXPECT_GE(ingham_sum(100000) / (L * L), 6.0 / std::numbers::pi * 0.8);
}

TEST(MuDivisorForm, Example) {
  auto m = s2s2_model(0.5);
  double want = 0.0625 / (8 * std::log(11.0)) * ingham_sum(10);
  EXPECT_NEAR(mu_divisor_form(m, 10), want, 1e-12);
  EXPECT_NEAR(mu_divisor_form(m, 10), 0.04380, 1e-5);
}

TEST(Delta, Examples) {
  auto m = s2s2_model(0.5);
  auto d = delta_exact(m, 10);
  EXPECT_EQ(d.delta, 0.0);
  EXPECT_EQ(d.decompositions, 1u);
  auto x = probs(m, 22);
  EXPECT_TRUE(rel_close(delta_exact(m, 22).delta, oracle::delta(x, 22), 1e-12));
}

TEST(Delta, MatchesOracleAndPairCounts) {
  for (double c : {0.5, 2.0}) {
    auto m = s2s2_model(c);
    auto x = probs(m, 300);
    Decomposer dec(300);
    for (std::uint64_t n = 20; n <= 300; n += 7) {
      auto d = delta_exact(m, n, kDefaultDeltaCap, false, &dec);
      ASSERT_TRUE(rel_close(d.delta, oracle::delta(x, n), 1e-10)) << "c=" << c << " n=" << n;
      // Pair counts by brute force.
      auto qs = oracle::decompositions(n);
      std::uint64_t s[5] = {0, 0, 0, 0, 0};
      for (std::size_t i = 0; i < qs.size(); ++i)
        for (std::size_t j = i + 1; j < qs.size(); ++j) {
          std::set<std::uint64_t> a{qs[i].a, qs[i].b, qs[i].c, qs[i].d};
          int shared = 0;
          for (auto e : {qs[j].a, qs[j].b, qs[j].c, qs[j].d}) shared += a.count(e) ? 1 : 0;
          ++s[shared];
        }
      ASSERT_EQ(d.pairs_shared1, s[1]) << n;
      ASSERT_EQ(d.pairs_shared2, s[2]) << n;
      ASSERT_EQ(d.pairs_shared3, s[3]) << n;
    }
  }
}

TEST(Delta, CapIsEnforced) {
  auto m = s2s2_model(0.5);
  EXPECT_THROW(delta_exact(m, 20001), precondition_error);
  EXPECT_NO_THROW(delta_exact(m, 500, 100, true));
}

TEST(Janson, Values) {
  EXPECT_NEAR(janson_bound(5, 1).value, std::exp(-4.0), 1e-15);
  EXPECT_NEAR(janson_bound(5, 1).value, 0.018316, 1e-6);
  EXPECT_EQ(janson_bound(0, 0).value, 1.0);
  auto j = janson_bound(1, 3);
  EXPECT_TRUE(j.clipped);
  EXPECT_EQ(j.value, 1.0);
  EXPECT_THROW(janson_bound(-1, 0), precondition_error);
}

TEST(Janson, MonotoneInMuAndDelta) {
  for (double mu = 0; mu < 10; mu += 0.5)
    for (double d = 0; d < 10; d += 0.5) {
      EXPECT_LE(janson_bound(mu + 0.5, d).value, janson_bound(mu, d).value);
      EXPECT_GE(janson_bound(mu, d + 0.5).value, janson_bound(mu, d).value);
    }
}

TEST(Lem41, Examples) {
  EXPECT_NEAR(lem41_sum(0.5, 0.5), 2.0, 1e-15);
  EXPECT_NEAR(lem41_sum(2.0, 1.0), std::sqrt(2.0), 1e-12);
  EXPECT_THROW(lem41_sum(0, 1), precondition_error);
}

TEST(Lem41, BoundedOnRandomArguments) {
  double worst = 0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    double u = 1e4 * (1.0 - counter_uniform(4141, i, 1)), v = 1e4 * (1.0 - counter_uniform(4141, i, 2));
    if (i % 4 == 1) u = 4 * (1.0 - counter_uniform(4141, i, 3));
    if (i % 4 == 2) v = 4 * (1.0 - counter_uniform(4141, i, 4));
    worst = std::max(worst, lem41_sum(u, v));
  }
  EXPECT_LE(worst, 12.0);
}

TEST(SumIntegral, ReciprocalIsVacuous) {
  std::vector<double> pts;
  for (int i = 1; i <= 10; ++i) pts.push_back(i);
  auto r = monotone_sum_integral_check([](double u) { return 1.0 / u; },
                                       [](double lo, double hi) {
                                         return lo <= 0 ? std::numeric_limits<double>::infinity() : std::log(hi / lo);
                                       },
                                       pts, 1.0);
  EXPECT_NEAR(r.sum, 2.9289682539682538, 1e-12);
  EXPECT_TRUE(r.divergent);
  EXPECT_TRUE(r.holds);
}

TEST(SumIntegral, Exponential) {
  auto r = monotone_sum_integral_check([](double u) { return std::exp(-u); },
                                       [](double lo, double hi) { return std::exp(-lo) - std::exp(-hi); }, {0, 1, 2}, 1.0);
  EXPECT_NEAR(r.sum, 1.5032, 1e-4);
  EXPECT_NEAR(r.integral, 2.5828, 2e-4);  // e - e^-2
  EXPECT_TRUE(r.holds);
  EXPECT_FALSE(r.divergent);
}

TEST(SumIntegral, IncreasingDirection) {
  auto r = monotone_sum_integral_check([](double u) { return u; },
                                       [](double lo, double hi) { return (hi * hi - lo * lo) / 2; }, {1, 3, 5}, 2.0,
                                       Monotone::Increasing);
  EXPECT_DOUBLE_EQ(r.sum, 9.0);
  EXPECT_DOUBLE_EQ(r.integral, (49.0 - 1.0) / 4.0);
  EXPECT_TRUE(r.holds);
}

TEST(SumIntegral, SpacingViolationRejected) {
  auto f = [](double u) { return std::exp(-u); };
  auto I = [](double lo, double hi) { return std::exp(-lo) - std::exp(-hi); };
  EXPECT_THROW(monotone_sum_integral_check(f, I, {0, 0.5, 2}, 1.0), precondition_error);
  EXPECT_THROW(monotone_sum_integral_check(f, I, {}, 1.0), precondition_error);
}

// Random decreasing step functions, integrated exactly.
TEST(SumIntegral, RandomDecreasingStepFunctions) {
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const int steps = 5 + static_cast<int>(counter_hash(7, t) % 20);
    std::vector<double> breaks{-100.0}, vals;
    double v = 10 * counter_uniform(8, t);
    for (int i = 0; i < steps; ++i) {
      breaks.push_back(breaks.back() + 0.1 + 10 * counter_uniform(9, t * 64 + i));
      vals.push_back(v);
      v *= counter_uniform(10, t * 64 + i);
    }
    vals.push_back(v);
    breaks.push_back(1e9);
    // f = vals[i] on [breaks[i], breaks[i+1]).
    auto f = [&](double u) {
      auto it = std::upper_bound(breaks.begin(), breaks.end(), u);
      std::size_t i = static_cast<std::size_t>(it - breaks.begin()) - 1;
      return vals[std::min(i, vals.size() - 1)];
    };
    auto I = [&](double lo, double hi) {
      double s = 0;
      for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double a = std::max(lo, breaks[i]), b = std::min(hi, breaks[i + 1]);
        if (b > a) s += vals[std::min(i, vals.size() - 1)] * (b - a);
      }
      return s;
    };
    const double l = 0.5 + 3 * counter_uniform(11, t);
    std::vector<double> pts{-50 + 20 * counter_uniform(12, t)};
    for (int i = 0; i < 10; ++i) pts.push_back(pts.back() + l + 5 * counter_uniform(13, t * 16 + i));
    auto r = monotone_sum_integral_check(f, I, pts, l);
    ASSERT_TRUE(r.holds) << "trial " << t << ": " << r.sum << " > " << r.integral;
  }
}

TEST(RepresentationScan, MatchesRepCount) {
  IntSet A = IntSet::from_elements({1, 2, 3, 4, 5, 7, 9, 12, 15, 20, 30}, 400);
  auto scan = representation_scan(A, 1, 400);
  std::vector<std::uint64_t> want;
  for (std::uint64_t n = 1; n <= 400; ++n)
    if (rep_count(n, A) == 0) want.push_back(n);
  EXPECT_EQ(scan.zero, want);
}

TEST(Batch, RowsMatchSingleCalls) {
  auto m = s2s2_model(0.5);
  IntSet A = IntSet::interval(1, 60, 100);
  RepStatsOptions opt;
  opt.with_delta = true;
  auto rows = repstats_batch(m, 10, 100, &A, opt);
  ASSERT_EQ(rows.size(), 91u);
  for (auto& r : rows) {
    EXPECT_EQ(r.dec_count, decompositions(r.n).size());
    EXPECT_EQ(*r.rep, rep_count(r.n, A));
    EXPECT_NEAR(r.mu_exact, mu_exact(m, r.n), 1e-15);
    EXPECT_NEAR(r.delta->delta, delta_exact(m, r.n).delta, 1e-12);
    EXPECT_NEAR(r.janson, janson_bound(r.mu_exact, r.delta->delta).value, 1e-15);
  }
  EXPECT_TRUE(repstats_batch(m, 20, 10).empty());
  opt.delta_cap = 50;
  EXPECT_THROW(repstats_batch(m, 10, 100, nullptr, opt), precondition_error);
}
