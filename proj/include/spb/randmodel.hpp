#pragma once

// Independent Bernoulli random subsets of the positive integers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spb/intset.hpp"
#include "spb/numeric.hpp"
#include "spb/parallel.hpp"
#include "spb/rng.hpp"

namespace spb {

enum class ModelFamily {
  S2S2,    // x_a = c / (sqrt(a) * ln(a+1)^(1/4))
  Neolem,  // y_a = c * a^(-2/3), with c = 10/eps for the random complement
};

inline const char* to_string(ModelFamily f) { return f == ModelFamily::S2S2 ? "S2S2" : "NEOLEM"; }

struct RandomSetModel {
  ModelFamily family = ModelFamily::S2S2;
  double c = 1.0;
  double clamp = 1.0;

  void validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw precondition_error("model: c must be positive");
    if (!(clamp > 0.0 && clamp <= 1.0)) throw precondition_error("model: clamp must lie in (0, 1]");
  }

  double raw_probability(std::uint64_t a) const {
    const double x = static_cast<double>(a);
    if (family == ModelFamily::S2S2) return c / (std::sqrt(x) * std::pow(std::log(x + 1.0), 0.25));
    return c / std::cbrt(x * x);
  }

  nlohmann::json to_json() const {
    return {{"family", to_string(family)}, {"c", c}, {"clamp", clamp}};
  }
};

inline RandomSetModel s2s2_model(double c, double clamp = 1.0) {
  RandomSetModel m{ModelFamily::S2S2, c, clamp};
  m.validate();
  return m;
}

/// min(clamp, raw probability) for a >= 1.
inline double model_probability(const RandomSetModel& m, std::uint64_t a) {
  if (a == 0) throw precondition_error("model_probability: a must be >= 1");
  return std::min(m.clamp, m.raw_probability(a));
}

/// lambda_n = sum_{1 <= a <= n} x_a, compensated.
inline double lambda_upto(const RandomSetModel& m, std::uint64_t n) {
  CompensatedSum s;
  for (std::uint64_t a = 1; a <= n; ++a) s += model_probability(m, a);
  return s.value();
}

/// lambda_1 .. lambda_n in one pass (index 0 holds 0).
inline std::vector<double> lambda_prefix(const RandomSetModel& m, std::uint64_t n) {
  std::vector<double> out(n + 1, 0.0);
  CompensatedSum s;
  for (std::uint64_t a = 1; a <= n; ++a) {
    s += model_probability(m, a);
    out[a] = s.value();
  }
  return out;
}

/// Whether `a` is drawn: u_a < x_a with u_a keyed by (seed, a) only. Raising
/// any x_a can therefore only add elements.
inline bool drawn(const RandomSetModel& m, std::uint64_t seed, std::uint64_t a) {
  return counter_uniform(seed, a) < model_probability(m, a);
}

/// Random subset of [lo, hi] (lo >= 1) stored with the given capacity.
inline IntSet sample_range(const RandomSetModel& m, std::uint64_t lo, std::uint64_t hi,
                           std::uint64_t seed, std::uint64_t capacity) {
  m.validate();
  if (lo == 0) throw precondition_error("sample_range: lo must be >= 1");
  IntSetBuilder out(capacity);
  hi = std::min(hi, capacity);
  if (lo > hi) return std::move(out).freeze();
  // Word-aligned chunks keep workers on disjoint output words.
  parallel_for(lo, hi + 1, [&](std::uint64_t a0, std::uint64_t a1) {
    for (std::uint64_t a = a0; a < a1; ++a)
      if (drawn(m, seed, a)) out.insert(a);
  }, 64);
  return std::move(out).freeze();
}

inline IntSet sample_set(const RandomSetModel& m, std::uint64_t limit, std::uint64_t seed) {
  return sample_range(m, 1, limit, seed, limit);
}

/// The two conflicting conditions on c, reported side by side: 3c^4/(4 pi) > 1
/// (the mu_n constant) and 3 pi c^4 / 4 > 1 (the in-text form).
struct CThresholds {
  double mu_constant = std::pow(4.0 * M_PI / 3.0, 0.25);  // ≈ 1.4306
  double in_text = std::pow(4.0 / (3.0 * M_PI), 0.25);    // ≈ 0.8071

  nlohmann::json to_json(double c) const {
    return {{"mu_constant", mu_constant}, {"c_above_mu_constant", c > mu_constant},
            {"in_text", in_text},         {"c_above_in_text", c > in_text}};
  }
};

struct SampleManifest {
  RandomSetModel model;
  std::uint64_t limit = 0;
  std::uint64_t seed = 0;
  std::string generator = kGeneratorId;
  std::uint64_t realized_count = 0;

  nlohmann::json to_json() const {
    return {{"kind", "sample"},      {"model", model.to_json()},
            {"limit", limit},        {"seed", seed},
            {"generator", generator}, {"realized_count", realized_count},
            {"c_thresholds", CThresholds{}.to_json(model.c)}};
  }
};

/// Failure-probability bound 2 exp(-eps^2 lambda / 4) for the event
/// |A(n) - lambda| > eps * lambda.
inline double chernoff_bound(double eps, double lambda) {
  if (!(eps > 0.0 && eps <= 0.5)) throw precondition_error("chernoff_bound: eps must lie in (0, 1/2]");
  if (!(lambda >= 0.0)) throw precondition_error("chernoff_bound: lambda must be >= 0");
  return 2.0 * std::exp(-eps * eps * lambda / 4.0);
}

struct ConcentrationRow {
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
  std::uint64_t count = 0;
  double lambda = 0;
  double ratio = 0;
  bool within = false;
};

struct ConcentrationPoint {
  std::uint64_t n = 0;
  double lambda = 0;
  double violation_rate = 0;
  double bound = 0;
};

struct ConcentrationReport {
  std::vector<ConcentrationRow> rows;
  std::vector<ConcentrationPoint> points;
  std::uint64_t violations = 0;
  double violation_rate = 0;
  bool rates_within_bounds = true;  // per grid point: empirical rate <= chernoff bound
};

inline ConcentrationReport concentration_check(const RandomSetModel& m, std::uint64_t limit,
                                               const std::vector<std::uint64_t>& seeds, double eps,
                                               std::vector<std::uint64_t> grid) {
  if (grid.size() < 2) throw precondition_error("concentration_check: need at least 2 grid points");
  std::sort(grid.begin(), grid.end());
  if (grid.front() == 0 || grid.back() > limit)
    throw precondition_error("concentration_check: grid must lie in [1, limit]");
  auto lam = lambda_prefix(m, grid.back());

  ConcentrationReport rep;
  std::vector<std::uint64_t> per_point(grid.size(), 0);
  for (auto seed : seeds) {
    IntSet A = sample_set(m, grid.back(), seed);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::uint64_t n = grid[i];
      ConcentrationRow r;
      r.seed = seed;
      r.n = n;
      r.count = A.count_upto(n);
      r.lambda = lam[n];
      r.ratio = static_cast<double>(r.count) / r.lambda;
      r.within = (1 - eps) * r.lambda <= static_cast<double>(r.count) &&
                 static_cast<double>(r.count) <= (1 + eps) * r.lambda;
      if (!r.within) {
        ++rep.violations;
        ++per_point[i];
      }
      rep.rows.push_back(r);
    }
  }
  double trials = static_cast<double>(seeds.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ConcentrationPoint p{grid[i], lam[grid[i]], seeds.empty() ? 0.0 : per_point[i] / trials,
                         chernoff_bound(eps, lam[grid[i]])};
    if (p.violation_rate > p.bound) rep.rates_within_bounds = false;
    rep.points.push_back(p);
  }
  if (!rep.rows.empty()) rep.violation_rate = static_cast<double>(rep.violations) / rep.rows.size();
  return rep;
}

}  // namespace spb
