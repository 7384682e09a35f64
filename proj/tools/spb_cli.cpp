// spb: construct, sample, verify and measure thin sum-product bases.
//
// Exit codes: 0 success / covered, 1 usage or input error, 2 verified failure.

#include <openssl/evp.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spb/constructions.hpp"
#include "spb/diagnostics.hpp"
#include "spb/randmodel.hpp"
#include "spb/repstats.hpp"
#include "spb/selftest.hpp"
#include "spb/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0, kUsage = 1, kFailed = 2;

struct verified_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw spb::io_error("cannot open for hashing: " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof buf);
    if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(f.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char h[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(h, sizeof h, "%02x", md[i]);
    hex += h;
  }
  return hex;
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string stem_of(const std::string& out) {
  return out.size() > 4 && out.ends_with(".spb") ? out.substr(0, out.size() - 4) : out;
}

// Collects what a run produced; written as the run manifest at the end.
struct Run {
  std::vector<std::string> argv;
  std::string config;
  json seeds = json::array();
  json construction;
  json summary = json::object();
  std::vector<std::string> outputs;
  std::string started = utc_now();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void write(const std::string& path) const {
    json j;
    j["schema"] = "manifest_v1";
    j["tool_version"] = spb::kVersion;
    j["generator"] = spb::kGeneratorId;
    j["command"] = argv;
    j["config"] = config;
    j["seeds"] = seeds;
    if (!construction.is_null()) j["construction"] = construction;
    j["summary"] = summary;
    j["started"] = started;
    j["finished"] = utc_now();
    j["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    j["limits"] = {{"threads", spb::limits().threads}, {"memory_cap_bytes", spb::limits().memory_cap_bytes}};
    auto outs = json::array();
    for (auto& p : outputs) outs.push_back({{"path", p}, {"sha256", sha256_file(p)}, {"bytes", fs::file_size(p)}});
    j["outputs"] = outs;
    std::ofstream f(path);
    if (!f) throw spb::io_error("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
  }
};

void write_set(Run& run, const std::string& path, const spb::IntSet& A, const json& manifest) {
  spb::write_set_file(path, A, manifest);
  run.outputs.push_back(path);
}

void write_csv(Run& run, const std::string& path, const spb::Table& t) {
  spb::emit_csv(t, path);
  run.outputs.push_back(path);
}

spb::RandomSetModel parse_model(const std::string& spec) {
  spb::RandomSetModel m;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw spb::precondition_error("model: expected key=value, got '" + item + "'");
    std::string k = item.substr(0, eq), v = item.substr(eq + 1);
    double x = 0;
    try {
      x = std::stod(v);
    } catch (const std::exception&) {
      throw spb::precondition_error("model: bad number '" + v + "'");
    }
    if (k == "c")
      m.c = x;
    else if (k == "clamp")
      m.clamp = x;
    else
      throw spb::precondition_error("model: unknown key '" + k + "'");
  }
  m.validate();
  return m;
}

// --- subcommands ---------------------------------------------------------------

struct ConstructOpts {
  std::string kind, out, manifest, report, input;
  std::uint64_t limit = 1000000, start = 0, x1 = 64, N = 1000000, seed = 1, samples = 1000;
  unsigned k = 2, l0 = 1, retries = 4;
  double alpha = 0.25, beta = 0.5, eps = 0.25;
  bool exclude_zero = false, relax = false, allow_shortfall = false;
};

int cmd_construct(const ConstructOpts& o, Run& run) {
  json cm;
  int status = kOk;
  if (o.kind == "dyadic") {
    spb::IntSet T = spb::dyadic_T(o.limit, !o.exclude_zero);
    spb::ConstructionManifest m{"dyadic", {{"limit", static_cast<double>(o.limit)}, {"include_zero", o.exclude_zero ? 0 : 1}}, std::nullopt};
    cm = m.to_json();
    write_set(run, o.out, T, cm);
    run.summary = {{"count", T.size()}};
  } else if (o.kind == "prime-interval") {
    auto p = spb::prime_interval_set(o.alpha, o.limit, o.l0);
    spb::ConstructionManifest m{"prime-interval", {{"alpha", o.alpha}, {"limit", static_cast<double>(o.limit)}, {"l0", o.l0}}, std::nullopt};
    m.extra = {{"blocks", spb::to_json(p.blocks)}};
    cm = m.to_json();
    write_set(run, o.out, p.set, cm);
    run.summary = {{"count", p.set.size()}};
  } else if (o.kind == "lorentz") {
    if (o.input.empty()) throw spb::precondition_error("construct lorentz: --input is required");
    auto in = spb::read_set_file(o.input);
    auto res = spb::lorentz_complement(in.set, o.limit, o.start);
    spb::ConstructionManifest m{"lorentz", {{"limit", static_cast<double>(o.limit)}, {"start", static_cast<double>(o.start)}}, std::nullopt};
    m.extra = {{"input_sha256", sha256_file(o.input)}, {"B", res.B.size()}, {"fitted_C", res.fitted_C}};
    cm = m.to_json();
    write_set(run, o.out, res.B, cm);
    if (!o.report.empty()) {
      spb::Table t{{"X", "B_X", "bound_sum", "ratio"}, {}};
      for (auto& r : res.profile) t.add({r.X, r.B, r.bound_sum, r.ratio});
      write_csv(run, o.report, t);
    }
    run.summary = {{"count", res.B.size()}, {"fitted_C", res.fitted_C}};
  } else if (o.kind == "thm-ub") {
    auto r = spb::build_thm_ub(o.k, o.limit);
    cm = r.manifest.to_json();
    write_set(run, o.out, r.A, cm);
    // Coverage of A^k + A on [n0, limit], attached as the report.
    std::string expr = "A^" + std::to_string(o.k) + "+A";
    auto cov = spb::coverage_report(expr, {{"A", r.A}}, r.n0, o.limit);
    if (!o.report.empty()) write_csv(run, o.report, spb::defect_table(cov.profile));
    run.summary = {{"count", r.A.size()}, {"n0", r.n0}, {"P1", r.P1.size()}, {"B", r.B.size()},
                   {"expr", expr}, {"covered_from_n0", cov.covered()}};
    if (!cov.covered()) status = kFailed;
  } else if (o.kind == "alphabeta") {
    auto r = spb::build_alphabeta(o.alpha, o.beta, o.x1, o.limit);
    cm = r.manifest.to_json();
    write_set(run, o.out, r.A, cm);
    run.summary = {{"count", r.A.size()}, {"generations", r.generations}, {"A1", r.A1.size()}, {"B", r.B.size()}};
  } else if (o.kind == "thm53-level") {
    spb::Thm53Options opt;
    opt.max_retries = o.retries;
    opt.relax = o.relax;
    opt.allow_shortfall = o.allow_shortfall;
    opt.hypothesis_samples = o.samples;
    run.seeds.push_back(o.seed);
    auto r = spb::build_thm53_level(o.eps, o.N, o.seed, opt);
    cm = r.manifest.to_json();
    spb::IntSet A0 = spb::set_union(r.P, r.B);
    write_set(run, o.out, A0, cm);
    write_set(run, stem_of(o.out) + ".P.spb", r.P, cm);
    write_set(run, stem_of(o.out) + ".B.spb", r.B, cm);
    if (!o.report.empty()) write_csv(run, o.report, spb::defect_table(r.complement.profile));
    run.summary = {{"P", r.P.size()}, {"B", r.B.size()}, {"accepted", r.complement.accepted},
                   {"worst_ratio", r.complement.worst_ratio}, {"hypothesis_pass", r.hypothesis.pass},
                   {"shortfalls", r.shortfalls}};
    if (!r.complement.accepted) status = kFailed;
  } else {
    throw spb::precondition_error("unknown construction kind '" + o.kind +
                                  "' (dyadic, prime-interval, lorentz, thm-ub, alphabeta, thm53-level)");
  }
  run.construction = cm;
  return status;
}

struct SampleOpts {
  double c = 2.0, clamp = 1.0;
  std::uint64_t limit = 1000000, seed = 1;
  std::string out, manifest;
};

int cmd_sample(const SampleOpts& o, Run& run) {
  spb::RandomSetModel m{spb::ModelFamily::S2S2, o.c, o.clamp};
  m.validate();
  spb::IntSet A = spb::sample_set(m, o.limit, o.seed);
  spb::SampleManifest sm{m, o.limit, o.seed, spb::kGeneratorId, A.count_upto(o.limit)};
  run.seeds.push_back(o.seed);
  run.construction = sm.to_json();
  write_set(run, o.out, A, sm.to_json());
  double lam = spb::lambda_upto(m, o.limit);
  run.summary = {{"lambda", lam}, {"count", sm.realized_count}};
  return kOk;
}

struct VerifyOpts {
  std::string expr, report, manifest;
  std::vector<std::string> sets;
  std::uint64_t start = 0, limit = 0;
};

int cmd_verify(const VerifyOpts& o, Run& run) {
  spb::Bindings env;
  for (auto& s : o.sets) {
    auto eq = s.find('=');
    std::string name = eq == std::string::npos ? "A" : s.substr(0, eq);
    std::string path = eq == std::string::npos ? s : s.substr(eq + 1);
    env.emplace(name, spb::read_set_file(path).set);
  }
  std::uint64_t limit = o.limit;
  if (limit == 0) {
    if (env.empty()) throw spb::precondition_error("verify: --limit is required without --sets");
    limit = env.begin()->second.capacity();
    for (auto& [n, s] : env) limit = std::min(limit, s.capacity());
  }
  auto rep = spb::coverage_report(o.expr, env, o.start, limit);
  if (!o.report.empty()) write_csv(run, o.report, spb::defect_table(rep.profile));
  run.summary = {{"expr", o.expr}, {"start", o.start}, {"limit", limit}, {"missing_count", rep.missing_count}};
  if (rep.covered()) {
    std::cout << "COVERED\n";
    return kOk;
  }
  std::cout << "GAPS " << rep.missing_count << " (first gap " << rep.missing.front() << ")\n";
  run.summary["first_gap"] = rep.missing.front();
  return kFailed;
}

struct StatsOpts {
  std::string set, model = "c=2.0", out, manifest;
  std::uint64_t n_from = 1, n_to = 0, delta_cap = spb::kDefaultDeltaCap;
  bool delta = false, force = false;
};

int cmd_stats(const StatsOpts& o, Run& run) {
  auto m = parse_model(o.model);
  std::optional<spb::IntSet> A;
  if (!o.set.empty()) A = spb::read_set_file(o.set).set;
  if (o.delta && o.n_to > o.delta_cap && !o.force) {
    std::cerr << "stats: delta requested up to n=" << o.n_to << " above cap " << o.delta_cap
              << "; pass --force to override\n";
    return kFailed;
  }
  if (o.delta && o.n_to > o.delta_cap) std::cerr << "warning: delta above cap, this may take long\n";
  spb::RepStatsOptions opt{o.delta, o.delta_cap, o.force};
  auto rows = spb::repstats_batch(m, o.n_from, o.n_to, A ? &*A : nullptr, opt);
  write_csv(run, o.out, spb::repstats_table(rows));
  run.summary = {{"rows", rows.size()}, {"model", m.to_json()}};
  return kOk;
}

int cmd_selftest() {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (auto& s : spb::run_selftest()) {
    std::cout << (s.passed() ? "PASS " : "FAIL ") << s.name << " (" << s.checks << " checks";
    if (s.failures) std::cout << ", " << s.failures << " failed, first: " << s.first_failure;
    std::cout << ")\n";
    ok = ok && s.passed();
  }
  std::cout << "elapsed " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  return ok ? kOk : kFailed;
}

int run_cli(const std::vector<std::string>& args);

// Re-executes a recorded command with every output redirected into a scratch
// directory and compares the SPB1 artifacts byte for byte.
int cmd_replay(const std::string& manifest_path, const std::string& workdir) {
  std::ifstream f(manifest_path);
  if (!f) throw spb::io_error("cannot open manifest: " + manifest_path);
  json j = json::parse(f);
  if (j.value("schema", "") != "manifest_v1") throw spb::format_error("replay: unsupported manifest schema");
  std::vector<std::string> argv = j.at("command").get<std::vector<std::string>>();
  fs::path dir = workdir.empty() ? fs::temp_directory_path() / ("spb-replay-" + std::to_string(::getpid())) : fs::path(workdir);
  fs::create_directories(dir);
  auto remap = [&](const std::string& p) { return (dir / fs::path(p).filename()).string(); };
  std::vector<std::string> recorded;
  for (auto& o : j.at("outputs")) recorded.push_back(o.at("path").get<std::string>());
  recorded.push_back(manifest_path);
  for (std::size_t i = 1; i < argv.size(); ++i)
    for (auto& p : recorded)
      if (argv[i] == p) argv[i] = remap(p);
  // A manifest path left implicit follows --out into the scratch directory.
  bool has_manifest_flag = std::find(argv.begin(), argv.end(), "--manifest") != argv.end();
  if (!has_manifest_flag) {
    argv.push_back("--manifest");
    argv.push_back(remap(manifest_path));
  }
  int rc = run_cli(argv);
  std::cout << "replayed exit code " << rc << "\n";
  bool same = true;
  for (auto& o : j.at("outputs")) {
    std::string p = o.at("path").get<std::string>();
    if (!p.ends_with(".spb")) continue;  // CSV values may differ in the last float digit across platforms
    std::string h = fs::exists(remap(p)) ? sha256_file(remap(p)) : "missing";
    bool eq = h == o.at("sha256").get<std::string>();
    std::cout << (eq ? "MATCH " : "MISMATCH ") << p << "\n";
    same = same && eq;
  }
  std::cout << (same ? "REPLAY OK" : "REPLAY MISMATCH") << "\n";
  return same ? kOk : kFailed;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Thin sum-product bases: constructions, random models and verification"};
  app.set_version_flag("--version", std::string(spb::kVersion));
  app.set_config("--config", "", "key=value configuration file (flags win)");
  app.require_subcommand(1);

  ConstructOpts co;
  auto* c = app.add_subcommand("construct", "Build a set and write it as SPB1 with a manifest");
  c->add_option("kind", co.kind, "Construction to build")
      ->required()
      ->check(CLI::IsMember({"dyadic", "prime-interval", "lorentz", "thm-ub", "alphabeta", "thm53-level"}));
  c->add_option("--out", co.out, "Output SPB1 path")->required();
  c->add_option("--manifest", co.manifest, "Run manifest path (default <out>.manifest.json)");
  c->add_option("--report", co.report, "CSV report path");
  c->add_option("--limit", co.limit, "Largest element");
  c->add_option("--start", co.start, "First target (lorentz)");
  c->add_option("--input", co.input, "Input set (lorentz)");
  c->add_option("--k", co.k, "Power k (thm-ub)")->check(CLI::Range(2u, 16u));
  c->add_option("--alpha", co.alpha, "alpha (prime-interval, alphabeta)");
  c->add_option("--beta", co.beta, "beta (alphabeta)");
  c->add_option("--x1", co.x1, "First generation x1 (alphabeta)");
  c->add_option("--l0", co.l0, "First dyadic block exponent (prime-interval)");
  c->add_option("--eps", co.eps, "epsilon (thm53-level)");
  c->add_option("--N", co.N, "Level size N (thm53-level)");
  c->add_option("--seed", co.seed, "First seed (thm53-level)");
  c->add_option("--retries", co.retries, "Maximum complement draws (thm53-level)");
  c->add_option("--samples", co.samples, "Random hypothesis probes (thm53-level)");
  c->add_flag("--exclude-zero", co.exclude_zero, "Leave 0 out of T (dyadic)");
  c->add_flag("--relax", co.relax, "Run below the complement size threshold, capping probabilities at 1");
  c->add_flag("--allow-shortfall", co.allow_shortfall, "Take all primes of intervals with too few");

  SampleOpts so;
  auto* s = app.add_subcommand("sample", "Draw a random set from the model");
  s->add_option("--c", so.c, "Model constant c")->required();
  s->add_option("--clamp", so.clamp, "Probability cap in (0, 1]");
  s->add_option("--limit", so.limit, "Largest element");
  s->add_option("--seed", so.seed, "Seed");
  s->add_option("--out", so.out, "Output SPB1 path")->required();
  s->add_option("--manifest", so.manifest, "Run manifest path (default <out>.manifest.json)");

  VerifyOpts vo;
  auto* v = app.add_subcommand("verify", "Check that a set expression covers [start, limit]");
  v->add_option("--expr", vo.expr, "Expression, e.g. A*A+A or 2*A+A")->required();
  v->add_option("--sets", vo.sets, "NAME=path bindings (a bare path binds A)")->required();
  v->add_option("--start", vo.start, "First target");
  v->add_option("--limit", vo.limit, "Last target (default: smallest capacity)");
  v->add_option("--report", vo.report, "Coverage CSV (t, missing_count, missing_fraction)");
  v->add_option("--manifest", vo.manifest, "Run manifest path");

  StatsOpts to;
  auto* st = app.add_subcommand("stats", "Representation statistics per n as CSV");
  st->add_option("--set", to.set, "Set for R(n)");
  st->add_option("--model", to.model, "Model as c=..,clamp=..");
  st->add_option("--n-from", to.n_from, "First n");
  st->add_option("--n-to", to.n_to, "Last n")->required();
  st->add_flag("--delta", to.delta, "Also compute Delta_n");
  st->add_option("--delta-cap", to.delta_cap, "Largest n for Delta without --force");
  st->add_flag("--force", to.force, "Allow Delta above the cap");
  st->add_option("--out", to.out, "Output CSV")->required();
  st->add_option("--manifest", to.manifest, "Run manifest path (default <out>.manifest.json)");

  app.add_subcommand("selftest", "Run the embedded oracle and property suites");

  std::string replay_manifest, replay_dir;
  auto* rp = app.add_subcommand("replay", "Re-run a manifest and compare artifact hashes");
  rp->add_option("--manifest", replay_manifest, "Run manifest to replay")->required();
  rp->add_option("--workdir", replay_dir, "Directory for replayed outputs");

  std::vector<const char*> cargv;
  for (auto& a : args) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  Run run;
  run.argv = args;
  run.config = app.config_to_str(true, false);
  try {
    int rc = kOk;
    std::string manifest;
    if (*c) {
      rc = cmd_construct(co, run);
      manifest = co.manifest.empty() ? co.out + ".manifest.json" : co.manifest;
    } else if (*s) {
      rc = cmd_sample(so, run);
      manifest = so.manifest.empty() ? so.out + ".manifest.json" : so.manifest;
    } else if (*v) {
      rc = cmd_verify(vo, run);
      manifest = vo.manifest;
    } else if (*st) {
      rc = cmd_stats(to, run);
      manifest = to.manifest.empty() ? to.out + ".manifest.json" : to.manifest;
    } else if (app.got_subcommand("selftest")) {
      return cmd_selftest();
    } else if (*rp) {
      return cmd_replay(replay_manifest, replay_dir);
    }
    for (auto& [k, val] : run.summary.items()) std::cout << k << "=" << val.dump() << "\n";
    if (!manifest.empty() && (rc == kOk || !run.outputs.empty())) run.write(manifest);
    return rc;
  } catch (const spb::construction_error& e) {
    std::cerr << "construction failed: " << e.what() << "\n";
    return kFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args);
}
