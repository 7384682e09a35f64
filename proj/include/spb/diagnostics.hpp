#pragma once

// Coverage verification over set expressions, counting profiles, exponent
// estimates, lower-bound checks and deterministic table output.

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spb/constructions.hpp"
#include "spb/intset.hpp"
#include "spb/numeric.hpp"
#include "spb/randmodel.hpp"
#include "spb/repstats.hpp"

namespace spb {

// --- set expressions ----------------------------------------------------------
//
//   expr   := term ('+' term)*
//   term   := factor ('*' factor)*
//   factor := atom ('^' integer)?
//   atom   := identifier | integer | '(' expr ')'
//
// An integer literal stands for the singleton {c}, so "2*A" is the dilation
// {2a} and "A+1" the shift.

struct SetExpr {
  enum class Kind { Name, Literal, Sum, Product, Power };
  Kind kind = Kind::Name;
  std::string name;
  std::uint64_t value = 0;  // literal value or exponent
  std::vector<std::shared_ptr<const SetExpr>> args;

  std::string to_string() const {
    switch (kind) {
      case Kind::Name: return name;
      case Kind::Literal: return std::to_string(value);
      case Kind::Power: return "(" + args[0]->to_string() + ")^" + std::to_string(value);
      default: {
        std::string op = kind == Kind::Sum ? "+" : "*";
        std::string s = "(" + args[0]->to_string();
        for (std::size_t i = 1; i < args.size(); ++i) s += op + args[i]->to_string();
        return s + ")";
      }
    }
  }
};
using SetExprPtr = std::shared_ptr<const SetExpr>;

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : s_(text) {}

  SetExprPtr parse() {
    auto e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw parse_error("expression '" + std::string(s_) + "' at offset " + std::to_string(pos_) + ": " + what);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::uint64_t integer() {
    skip();
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail("expected integer");
    pos_ = static_cast<std::size_t>(p - s_.data());
    return v;
  }
  SetExprPtr nary(SetExpr::Kind k, std::vector<SetExprPtr> args) {
    if (args.size() == 1) return args[0];
    auto e = std::make_shared<SetExpr>();
    e->kind = k;
    e->args = std::move(args);
    return e;
  }
  SetExprPtr expr() {
    std::vector<SetExprPtr> v{term()};
    while (eat('+')) v.push_back(term());
    return nary(SetExpr::Kind::Sum, std::move(v));
  }
  SetExprPtr term() {
    std::vector<SetExprPtr> v{factor()};
    while (eat('*')) v.push_back(factor());
    return nary(SetExpr::Kind::Product, std::move(v));
  }
  SetExprPtr factor() {
    auto a = atom();
    if (eat('^')) {
      auto k = integer();
      if (k == 0) fail("exponent must be >= 1");
      auto e = std::make_shared<SetExpr>();
      e->kind = SetExpr::Kind::Power;
      e->value = k;
      e->args = {a};
      return e;
    }
    return a;
  }
  SetExprPtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    auto e = std::make_shared<SetExpr>();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      e->kind = SetExpr::Kind::Literal;
      e->value = integer();
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t b = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      e->kind = SetExpr::Kind::Name;
      e->name = std::string(s_.substr(b, pos_ - b));
      return e;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline SetExprPtr parse_expr(std::string_view text) { return detail::ExprParser(text).parse(); }

using Bindings = std::map<std::string, IntSet>;

inline IntSet eval_expr(const SetExpr& e, const Bindings& env, std::uint64_t limit) {
  using K = SetExpr::Kind;
  switch (e.kind) {
    case K::Name: {
      auto it = env.find(e.name);
      if (it == env.end()) throw parse_error("unbound set name '" + e.name + "'");
      if (it->second.capacity() < limit)
        throw range_error("set '" + e.name + "' has capacity " + std::to_string(it->second.capacity()) +
                          " below limit " + std::to_string(limit));
      return it->second.with_capacity(limit);
    }
    case K::Literal: {
      IntSetBuilder b(limit);
      b.insert_if_fits(e.value);
      return std::move(b).freeze();
    }
    case K::Power: return power_set_k(eval_expr(*e.args[0], env, limit), static_cast<unsigned>(e.value), limit);
    case K::Sum: {
      IntSet acc = eval_expr(*e.args[0], env, limit);
      for (std::size_t i = 1; i < e.args.size(); ++i) acc = sumset(acc, eval_expr(*e.args[i], env, limit), limit);
      return acc;
    }
    case K::Product: {
      // Literal factors become a dilation of the remaining product.
      std::uint64_t scale = 1;
      std::optional<IntSet> acc;
      for (auto& a : e.args) {
        if (a->kind == K::Literal) {
          // Saturate at limit+1: beyond that only 0 survives the dilation.
          if (a->value == 0 || scale == 0)
            scale = 0;
          else
            scale = a->value > (limit + 1) / scale ? limit + 1 : std::min(scale * a->value, limit + 1);
          continue;
        }
        IntSet v = eval_expr(*a, env, limit);
        acc = acc ? product_set(*acc, v, limit) : std::move(v);
      }
      if (!acc) {
        IntSetBuilder b(limit);
        b.insert_if_fits(scale);
        return std::move(b).freeze();
      }
      return scale == 1 ? std::move(*acc) : dilate(*acc, scale, limit);
    }
  }
  throw parse_error("bad expression node");
}

inline IntSet eval_expr(std::string_view text, const Bindings& env, std::uint64_t limit) {
  return eval_expr(*parse_expr(text), env, limit);
}

/// Name X when the expression has the shape X*X + X (in either order), else "".
inline std::string square_plus_self_name(const SetExpr& e) {
  using K = SetExpr::Kind;
  if (e.kind != K::Sum || e.args.size() != 2) return "";
  auto sq = [](const SetExpr& t) -> std::string {
    if (t.kind == K::Product && t.args.size() == 2 && t.args[0]->kind == K::Name && t.args[1]->kind == K::Name &&
        t.args[0]->name == t.args[1]->name)
      return t.args[0]->name;
    if (t.kind == K::Power && t.value == 2 && t.args[0]->kind == K::Name) return t.args[0]->name;
    return "";
  };
  for (int i = 0; i < 2; ++i) {
    auto& p = *e.args[i];
    auto& q = *e.args[1 - i];
    std::string n = sq(p);
    if (!n.empty() && q.kind == K::Name && q.name == n) return n;
  }
  return "";
}

// --- coverage ----------------------------------------------------------------

struct NecessaryRow {
  std::uint64_t X = 0;
  std::uint64_t count = 0;          // A(X)
  std::uint64_t square_distinct = 0;  // |A^2 ∩ [1, X]|
  std::uint64_t square_pairs = 0;     // ordered pairs (a, b), ab <= X
  bool holds = false;                 // X <= A^2(X) * A(X), distinct form
};

struct CoverageReport {
  std::string expr;
  std::uint64_t start = 0, limit = 0;
  std::uint64_t missing_count = 0;
  std::vector<std::uint64_t> missing;  // first kMissingListMax gaps
  std::vector<DefectRow> profile;      // dyadic t: |[start, t] \ S| / t
  std::vector<NecessaryRow> necessary;  // filled for covering X*X+X expressions

  static constexpr std::size_t kMissingListMax = 1000;
  bool covered() const { return missing_count == 0; }
};

inline CoverageReport coverage_report(std::string_view expr, const Bindings& env, std::uint64_t start,
                                      std::uint64_t limit) {
  if (start > limit) throw precondition_error("coverage_report: start exceeds limit");
  auto tree = parse_expr(expr);
  IntSet S = eval_expr(*tree, env, limit);
  CoverageReport rep;
  rep.expr = std::string(expr);
  rep.start = start;
  rep.limit = limit;
  rep.missing_count = (limit - start + 1) - S.count_range(start, limit);
  for (std::uint64_t t = start; t <= limit && rep.missing.size() < CoverageReport::kMissingListMax; ++t) {
    if (rep.missing.size() == rep.missing_count) break;
    if (!S.contains(t)) rep.missing.push_back(t);
  }
  auto grid = dyadic_grid(std::max<std::uint64_t>(start, 1), limit);
  if (grid.empty() || grid.back() != limit) grid.push_back(limit);
  if (limit >= 1) rep.profile = defect_profile(S, start, grid);

  std::string name = square_plus_self_name(*tree);
  if (!name.empty() && rep.covered()) {
    IntSet A = env.at(name).with_capacity(limit);
    IntSet A2 = product_set(A, A, limit);
    for (auto X : dyadic_grid(1, limit)) {
      NecessaryRow r;
      r.X = X;
      r.count = A.count_upto(X);
      r.square_distinct = A2.count_upto(X);
      r.square_pairs = pair_count_upto(A, A, X);
      r.holds = X <= r.square_distinct * r.count;
      rep.necessary.push_back(r);
    }
  }
  return rep;
}

// --- counting profiles and exponents ----------------------------------------

struct ProfileRow {
  std::uint64_t X = 0;
  std::uint64_t count = 0;
  double normalized = 0;  // A(X) / (X^t (ln X)^s)
};

inline std::vector<ProfileRow> counting_profile(const IntSet& A, const std::vector<std::uint64_t>& grid, double t,
                                                double s) {
  std::vector<ProfileRow> rows;
  for (auto X : grid) {
    if (X > A.capacity()) throw range_error("counting_profile: X exceeds capacity");
    if (X < 2) throw precondition_error("counting_profile: grid points must be >= 2");
    const double dx = static_cast<double>(X);
    ProfileRow r{X, A.count_upto(X), 0};
    r.normalized = static_cast<double>(r.count) / (std::pow(dx, t) * std::pow(std::log(dx), s));
    rows.push_back(r);
  }
  return rows;
}

struct ExponentEstimate {
  double alpha_hat = 0, beta_hat = 0;
  std::vector<std::uint64_t> grid;
  std::vector<double> slopes;     // local slope of window starting at grid[i]
  std::vector<double> residuals;  // RMS residual of each window fit
  unsigned window = 4;
};

/// Least-squares slopes of ln A(X) against ln X over sliding windows of the
/// grid: the largest slope is the upper-exponent proxy, the smallest the
/// lower-exponent proxy. Finite-scale estimates only.
inline ExponentEstimate exponent_estimate(const IntSet& A, std::vector<std::uint64_t> grid, unsigned window = 4) {
  if (grid.size() < 8) throw precondition_error("exponent_estimate: need at least 8 grid points");
  if (A.count_upto(A.capacity()) < 2) throw precondition_error("exponent_estimate: A needs at least 2 elements");
  if (window < 2) throw precondition_error("exponent_estimate: window must be >= 2");
  std::sort(grid.begin(), grid.end());
  ExponentEstimate est;
  est.window = window;
  std::vector<double> lx, ly;
  for (auto X : grid) {
    if (X > A.capacity()) throw range_error("exponent_estimate: X exceeds capacity");
    auto c = A.count_upto(X);
    if (X < 2 || c == 0) continue;
    est.grid.push_back(X);
    lx.push_back(std::log(static_cast<double>(X)));
    ly.push_back(std::log(static_cast<double>(c)));
  }
  if (lx.size() < window) throw precondition_error("exponent_estimate: too few grid points with A(X) > 0");
  est.alpha_hat = std::numeric_limits<double>::infinity();
  est.beta_hat = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + window <= lx.size(); ++i) {
    double mx = 0, my = 0;
    for (unsigned k = 0; k < window; ++k) {
      mx += lx[i + k];
      my += ly[i + k];
    }
    mx /= window;
    my /= window;
    double sxx = 0, sxy = 0;
    for (unsigned k = 0; k < window; ++k) {
      sxx += (lx[i + k] - mx) * (lx[i + k] - mx);
      sxy += (lx[i + k] - mx) * (ly[i + k] - my);
    }
    const double slope = sxy / sxx;
    double rss = 0;
    for (unsigned k = 0; k < window; ++k) {
      double r = ly[i + k] - (my + slope * (lx[i + k] - mx));
      rss += r * r;
    }
    est.slopes.push_back(slope);
    est.residuals.push_back(std::sqrt(rss / window));
    est.alpha_hat = std::min(est.alpha_hat, slope);
    est.beta_hat = std::max(est.beta_hat, slope);
  }
  return est;
}

// --- lower-bound check for A^k + A^l ----------------------------------------

struct EnvelopeRow {
  std::uint64_t X = 0;
  std::uint64_t count = 0;        // A(X)
  double normalized = 0;          // A(X) (ln X)^alpha / sqrt X
  std::uint64_t power_count = 0;  // A^k(X)
  double power_ratio = 0;         // A^k(X) / (sqrt X (ln X)^(k-1-k alpha))
};

struct Thm11Report {
  unsigned k = 0, l = 0;
  double alpha = 0;
  bool vacuous = false;  // A^k + A^l does not cover [start, limit]
  std::uint64_t coverage_missing = 0;
  double floor = 0.1;
  double max_normalized = 0;
  std::uint64_t argmax_X = 0;
  double max_sqrt_ratio = 0;  // max A(X)/sqrt X
  bool exceeds_floor = false;
  std::vector<EnvelopeRow> rows;
};

inline Thm11Report thm11_bound_check(const IntSet& A_in, unsigned k, unsigned l, std::uint64_t limit,
                                     std::uint64_t start = 0, double floor = 0.1) {
  if (k < 1 || l < 1) throw precondition_error("thm11_bound_check: k, l must be >= 1");
  if (limit > A_in.capacity()) throw range_error("thm11_bound_check: limit exceeds capacity");
  Thm11Report rep;
  rep.k = k;
  rep.l = l;
  rep.floor = floor;
  rep.alpha = alpha_kl(k, l);
  IntSet A = A_in.with_capacity(limit);
  IntSet Ak = power_set_k(A, k, limit);
  IntSet S = sumset(Ak, l == k ? Ak : power_set_k(A, l, limit), limit);
  rep.coverage_missing = start <= limit ? (limit - start + 1) - S.count_range(start, limit) : 0;
  rep.vacuous = rep.coverage_missing != 0;
  const double env_pow = static_cast<double>(k) - 1.0 - k * rep.alpha;
  for (auto X : dyadic_grid(2, limit)) {
    const double dx = static_cast<double>(X), lx = std::log(dx), sx = std::sqrt(dx);
    EnvelopeRow r;
    r.X = X;
    r.count = A.count_upto(X);
    r.normalized = static_cast<double>(r.count) * std::pow(lx, rep.alpha) / sx;
    r.power_count = Ak.count_upto(X);
    r.power_ratio = static_cast<double>(r.power_count) / (sx * std::pow(lx, env_pow));
    if (r.normalized > rep.max_normalized) {
      rep.max_normalized = r.normalized;
      rep.argmax_X = X;
    }
    rep.max_sqrt_ratio = std::max(rep.max_sqrt_ratio, static_cast<double>(r.count) / sx);
    rep.rows.push_back(r);
  }
  rep.exceeds_floor = !rep.vacuous && rep.max_normalized > floor;
  return rep;
}

// --- tables -------------------------------------------------------------------

using Cell = std::variant<std::int64_t, std::uint64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw precondition_error("table: row width does not match header");
    rows.push_back(std::move(row));
  }
};

/// Shortest round-trip text for doubles, decimal for integers.
inline std::string format_cell(const Cell& c) {
  return std::visit(
      [](auto&& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          if (v.find_first_of(",\"\n") == std::string::npos) return v;
          std::string q = "\"";
          for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          return q + "\"";
        } else if constexpr (std::is_same_v<T, double>) {
          if (std::isnan(v)) return "nan";
          if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
          char buf[64];
          auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
          return std::string(buf, p);
        } else {
          return std::to_string(v);
        }
      },
      c);
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_cell(r[i]);
    out += "\n";
  }
  return out;
}

/// (x, y, series) triples: column `x_col` against every other numeric column.
inline std::string to_plotdata(const Table& t, std::size_t x_col = 0) {
  if (x_col >= t.columns.size() && !t.columns.empty()) throw precondition_error("plotdata: bad x column");
  std::string out = "x,y,series\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c == x_col) continue;
    for (auto& r : t.rows) {
      if (std::holds_alternative<std::string>(r[c])) continue;
      out += format_cell(r[x_col]) + "," + format_cell(r[c]) + "," + t.columns[c] + "\n";
    }
  }
  return out;
}

namespace detail {
inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open for writing: " + path);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw io_error("write failed: " + path);
}
}  // namespace detail

inline void emit_csv(const Table& t, const std::string& path) { detail::write_text(path, to_csv(t)); }
inline void emit_plotdata(const Table& t, const std::string& path, std::size_t x_col = 0) {
  detail::write_text(path, to_plotdata(t, x_col));
}

// Standard tables.

inline Table defect_table(const std::vector<DefectRow>& rows) {
  Table t{{"t", "missing_count", "missing_fraction"}, {}};
  for (auto& r : rows) t.add({r.t, r.missing, r.fraction});
  return t;
}

inline Table profile_table(const std::vector<ProfileRow>& rows) {
  Table t{{"X", "count", "normalized"}, {}};
  for (auto& r : rows) t.add({r.X, r.count, r.normalized});
  return t;
}

inline Table exponent_table(const ExponentEstimate& e) {
  Table t{{"grid", "slope", "residual", "alpha_hat", "beta_hat"}, {}};
  for (std::size_t i = 0; i < e.slopes.size(); ++i)
    t.add({e.grid[i], e.slopes[i], e.residuals[i], e.alpha_hat, e.beta_hat});
  return t;
}

inline Table repstats_table(const std::vector<RepStats>& rows) {
  Table t{{"n", "dec_count", "R_n", "mu_exact", "mu_divisor_form", "delta", "janson"}, {}};
  for (auto& r : rows)
    t.add({r.n, r.dec_count, r.rep ? Cell{*r.rep} : Cell{std::string()}, r.mu_exact, r.mu_divisor_form,
           r.delta ? Cell{r.delta->delta} : Cell{std::string()}, r.janson});
  return t;
}

inline Table concentration_table(const ConcentrationReport& rep) {
  Table t{{"seed", "n", "A_n", "lambda_n", "ratio"}, {}};
  for (auto& r : rep.rows) t.add({r.seed, r.n, r.count, r.lambda, r.ratio});
  return t;
}

}  // namespace spb
