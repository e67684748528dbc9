#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dlacs/cli.hpp"
#include "dlacs/oracle_checks.hpp"

namespace dlacs::cli {

namespace {

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void prepare_out(const CommonOptions& opts) {
  std::error_code ec;
  std::filesystem::create_directories(opts.out, ec);
  if (ec) throw std::runtime_error("cannot create " + opts.out.string() + ": " + ec.message());
}

Report start_report(const std::string& command, std::uint64_t seed, const RunConfig* cfg, const CommonOptions& opts) {
  Report r;
  r.command = command;
  r.seed = seed;
  r.timing = opts.timing;
  if (cfg) r.config = cfg->given;
  if (opts.replicas) r.config.emplace_back("--replicas", std::to_string(*opts.replicas));
  return r;
}

int finish(Report& report, const CommonOptions& opts) {
  report.outputs.push_back("report.json");
  write_file(opts.out / "report.json", report_json(report));
  return report.pass() ? 0 : 1;
}

template <class F>
CheckReport timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckReport r = f();
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::uint64_t replicas_of(const RunConfig& cfg, const CommonOptions& opts) { return opts.replicas.value_or(cfg.replicas); }

std::vector<double> simulate_grid(const RunConfig& cfg) {
  const SimConfig& s = cfg.sim;
  if (s.mode == Mode::discrete) {
    std::vector<double> g;
    if (s.steps == 0) return g;
    const std::uint32_t stride = std::max<std::uint32_t>(1, s.steps / cfg.grid);
    for (std::uint32_t k = 0; k <= s.steps; k += stride) g.push_back(k);
    if (g.back() != s.steps) g.push_back(s.steps);
    return g;
  }
  if (s.horizon == 0.0) return {};
  return cfg.grid_kind == GridKind::geometric ? geometric_grid(s.horizon, cfg.grid) : uniform_grid(s.horizon, cfg.grid);
}

/// Weighted A load at the root at each grid time, in either mode.
class RootLoad : public Observer {
 public:
  RootLoad(std::span<const double> grid, bool discrete) : grid_(grid), discrete_(discrete), load_(grid.size(), 0.0) {}
  void on_start(const SimState& s) override {
    if (discrete_) record(s, 0.0);
  }
  void on_grid(const SimState& s, std::size_t, double t) override { record(s, t); }
  const std::vector<double>& load() const { return load_; }

 private:
  void record(const SimState& s, double t) {
    while (next_ < grid_.size() && grid_[next_] < t) ++next_;
    if (next_ < grid_.size() && grid_[next_] == t) load_[next_++] = static_cast<double>(s.weighted_a(kRoot));
  }
  std::span<const double> grid_;
  bool discrete_;
  std::vector<double> load_;
  std::size_t next_ = 0;
};

/// Pooled ratio mean sum(x) / sum(n) with a replica-level delta-method stderr.
CurveRow pooled_mean(const std::vector<double>& x, const std::vector<double>& n) {
  CurveRow row;
  CompensatedSum sx, sn;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.add(x[i]);
    sn.add(n[i]);
  }
  row.n = static_cast<std::uint64_t>(sn.value());
  if (sn.value() == 0.0) {
    row.estimate = std::nan("");
    row.std_error = std::nan("");
    return row;
  }
  const double r = sx.value() / sn.value();
  const double R = static_cast<double>(x.size());
  const double nbar = sn.value() / R;
  CompensatedSum ss;
  for (std::size_t i = 0; i < x.size(); ++i) ss.add((x[i] - r * n[i]) * (x[i] - r * n[i]));
  row.estimate = r;
  row.std_error = R > 1 ? std::sqrt(ss.value() / (R * (R - 1))) / nbar : std::nan("");
  return row;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, const CommonOptions& opts) {
  prepare_out(opts);
  const std::uint64_t seed = resolve_seed(opts, &cfg);
  const std::uint64_t replicas = replicas_of(cfg, opts);
  const std::vector<double> grid = simulate_grid(cfg);
  const bool discrete = cfg.sim.mode == Mode::discrete;

  struct Replica {
    LifespanSample life;
    std::vector<double> load;
    double W = 0.0, V = 0.0;
    double sa = 0, na = 0, sb = 0, nb = 0;
  };
  auto reps = run_replicas<Replica>(replicas, opts.jobs, [&](std::size_t i) {
    SimConfig c = cfg.sim;
    c.seed = stream_seed(seed, i);
    RootLoad load(grid, discrete);
    RootAccumulator acc;
    Observer* obs[] = {&load, &acc};
    const SimState s = run(c, obs, grid);
    Replica r;
    r.life = {s.origin_species[kRoot] == Species::A, a_lifespan(s, kRoot)};
    r.load = load.load();
    r.W = acc.W();
    r.V = acc.V();
    for (OriginId o = 0; o < s.origin_count(); ++o) {
      if (!s.death_time[o]) continue;
      if (s.origin_species[o] == Species::A) {
        r.sa += s.partner_size[o];
        r.na += 1;
      } else {
        r.sb += s.partner_size[o];
        r.nb += 1;
      }
    }
    return r;
  });

  Report report = start_report("simulate", seed, &cfg, opts);
  std::vector<CurveRow> survival;
  std::vector<CurveRow> density;
  std::vector<LifespanSample> lives;
  for (const auto& r : reps) lives.push_back(r.life);
  const bool any_a = std::any_of(lives.begin(), lives.end(), [](const LifespanSample& l) { return l.root_is_a; });
  if (!grid.empty() && any_a) {
    const SurvivalCurve curve = survival_estimate(lives, grid, true);
    for (std::size_t j = 0; j < grid.size(); ++j)
      survival.push_back({grid[j], curve.survival[j].estimate, curve.survival[j].std_error, curve.survival[j].n});
  }
  for (std::size_t j = 0; j < grid.size(); ++j) {
    std::vector<double> col;
    for (const auto& r : reps) col.push_back(r.load[j]);
    const EstimateCI e = estimate_mean(col);
    density.push_back({grid[j], e.mean, e.empty ? std::nan("") : e.std_error, e.n});
  }
  std::ostringstream curves, dens, sizes;
  write_curve_csv(curves, survival);
  write_curve_csv(dens, density);
  write_file(opts.out / "curves.csv", curves.str());
  write_file(opts.out / "density.csv", dens.str());

  std::vector<double> sa, na, sb, nb;
  for (const auto& r : reps) {
    sa.push_back(r.sa);
    na.push_back(r.na);
    sb.push_back(r.sb);
    nb.push_back(r.nb);
  }
  const CurveRow a = pooled_mean(sa, na);
  const CurveRow b = pooled_mean(sb, nb);
  sizes << "species,mean,stderr,n\n";
  sizes << "A," << format_number(a.estimate) << ',' << format_number(a.std_error) << ',' << a.n << '\n';
  sizes << "B," << format_number(b.estimate) << ',' << format_number(b.std_error) << ',' << b.n << '\n';
  write_file(opts.out / "sizes.csv", sizes.str());
  report.outputs = {"curves.csv", "density.csv", "sizes.csv"};

  CheckReport audit;
  audit.name = "occupation_audit";
  audit.rule = cfg.sim.cap_M.is_unlimited() ? "W >= V >= 0 in every replica"
                                            : "W >= V >= 0 and V >= W / (2M) in every replica";
  audit.replicas = replicas;
  audit.pass = true;
  std::vector<double> ws, vs;
  std::uint64_t bad = 0;
  for (const auto& r : reps) {
    ws.push_back(r.W);
    vs.push_back(r.V);
    bool ok = r.W >= r.V && r.V >= 0.0;
    if (!cfg.sim.cap_M.is_unlimited()) ok = ok && r.V * 2.0 * cfg.sim.cap_M.value() >= r.W;
    bad += !ok;
  }
  const EstimateCI ew = estimate_mean(ws);
  const EstimateCI ev = estimate_mean(vs);
  audit.add("mean_W", ew.mean);
  audit.add("stderr_W", ew.empty ? std::nan("") : ew.std_error);
  audit.add("mean_V", ev.mean);
  audit.add("stderr_V", ev.empty ? std::nan("") : ev.std_error);
  audit.add("violations", static_cast<double>(bad));
  audit.tolerance("violations", 0);
  audit.pass = bad == 0;
  report.checks.push_back(audit);
  return finish(report, opts);
}

int cmd_sweep(const RunConfig& cfg, const CommonOptions& opts) {
  prepare_out(opts);
  SweepConfig sc;
  sc.cfg = cfg.sim;
  sc.p_values = cfg.p_values;
  sc.replicas = replicas_of(cfg, opts);
  sc.seed = resolve_seed(opts, &cfg);
  sc.jobs = opts.jobs;
  Report report = start_report("sweep", sc.seed, &cfg, opts);
  std::vector<SweepPoint> points;
  report.checks.push_back(timed([&] {
    points = run_sweep(sc);
    return check_sweep_monotone(sc, points);
  }));
  std::ostringstream csv;
  csv << "p,survival,survival_stderr,occupancy,occupancy_stderr,n\n";
  for (const auto& pt : points)
    csv << format_number(pt.p) << ',' << format_number(pt.survival.mean) << ','
        << format_number(pt.survival.empty ? std::nan("") : pt.survival.std_error) << ','
        << format_number(pt.occupancy.mean) << ','
        << format_number(pt.occupancy.empty ? std::nan("") : pt.occupancy.std_error) << ',' << pt.survival.n << '\n';
  write_file(opts.out / "sweep.csv", csv.str());
  report.outputs = {"sweep.csv"};
  return finish(report, opts);
}

int cmd_pc(const RunConfig& cfg, const CommonOptions& opts) {
  prepare_out(opts);
  PcConfig pc;
  pc.cfg = cfg.sim;
  pc.p_lo = cfg.p_lo;
  pc.p_hi = cfg.p_hi;
  pc.tol_p = cfg.tol_p;
  pc.replicas = replicas_of(cfg, opts);
  pc.budget = cfg.budget;
  pc.window_factor = cfg.window_factor;
  pc.t_max = cfg.t_max;
  pc.seed = resolve_seed(opts, &cfg);
  pc.jobs = opts.jobs;
  Report report = start_report("pc", pc.seed, &cfg, opts);
  PcResult result;
  report.checks.push_back(timed([&] {
    result = pc_bisect(pc);
    return check_pc_bracket(pc, result, cfg.pc_lower, cfg.pc_upper);
  }));
  std::ostringstream csv;
  csv << "p,replicas,r,r_stderr,r_survival,r_survival_stderr,mean_stop_time,capped_runs\n";
  for (const auto& pt : result.evaluated)
    csv << format_number(pt.p) << ',' << pt.replicas << ',' << format_number(pt.r.empty ? std::nan("") : pt.r.mean) << ','
        << format_number(pt.r.empty ? std::nan("") : pt.r.std_error) << ','
        << format_number(pt.r_survival.empty ? std::nan("") : pt.r_survival.mean) << ','
        << format_number(pt.r_survival.empty ? std::nan("") : pt.r_survival.std_error) << ','
        << format_number(pt.mean_stop_time) << ',' << pt.capped_runs << '\n';
  write_file(opts.out / "pc.csv", csv.str());
  report.outputs = {"pc.csv"};
  return finish(report, opts);
}

int cmd_couple(const RunConfig& cfg, const CommonOptions& opts) {
  if (cfg.graph != "cycle") throw ConfigError(0, "couple: graph must be cycle");
  const SimConfig& s = cfg.sim;
  if (s.p != 0.5 || s.lambda_A != 1.0 || s.lambda_B != 1.0 || !s.cap_M.is_unlimited() || !s.cap_N.is_unlimited() ||
      s.mode != Mode::continuous)
    throw ConfigError(0, "couple: the arrow construction needs p=0.5, lambda_A=lambda_B=1, M=N=inf, continuous mode");
  prepare_out(opts);
  TwoThirdsConfig tc;
  tc.n = cfg.n;
  tc.times = cfg.times.empty() ? std::vector<double>{s.horizon} : cfg.times;
  std::sort(tc.times.begin(), tc.times.end());
  tc.times.erase(std::unique(tc.times.begin(), tc.times.end()), tc.times.end());
  tc.gate_time = tc.times.back();
  tc.crw_time = tc.times.back();
  tc.replicas = replicas_of(cfg, opts);
  tc.seed = resolve_seed(opts, &cfg);
  tc.jobs = opts.jobs;
  Report report = start_report("couple", tc.seed, &cfg, opts);
  CoupledEnsemble e;
  const auto t0 = std::chrono::steady_clock::now();
  e = run_coupled_ensemble(tc);
  const double build = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (auto check : {check_two_thirds, check_goodness_convergence, check_crw_density}) {
    CheckReport r = timed([&] { return check(tc, e); });
    r.wall_seconds += build / 3.0;
    report.checks.push_back(std::move(r));
  }
  std::vector<CurveRow> ratio, crw;
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    std::uint64_t occ = 0, good = 0;
    for (const auto& smp : e.samples[k]) {
      occ += smp.crw;
      good += smp.dlacs;
    }
    const ProportionCI r = estimate_proportion(good, occ);
    const ProportionCI c = estimate_proportion(occ, e.samples[k].size());
    ratio.push_back({e.times[k], occ ? r.estimate : std::nan(""), occ ? r.std_error : std::nan(""), occ});
    crw.push_back({e.times[k], c.estimate, c.std_error, e.samples[k].size()});
  }
  std::ostringstream a, b;
  write_curve_csv(a, ratio);
  write_curve_csv(b, crw);
  write_file(opts.out / "curves.csv", a.str());
  write_file(opts.out / "crw.csv", b.str());
  report.outputs = {"curves.csv", "crw.csv"};
  return finish(report, opts);
}

int cmd_plot(const RunConfig& cfg, const CommonOptions& opts) {
  prepare_out(opts);
  SimConfig s = cfg.sim;
  s.seed = resolve_seed(opts, &cfg);
  const SpaceTimeImage img = record_spacetime(s, cfg.grid);
  std::ostringstream ppm, svg;
  write_ppm(ppm, img);
  write_svg(svg, img);
  write_file(opts.out / "spacetime.ppm", ppm.str());
  write_file(opts.out / "spacetime.svg", svg.str());
  Report report = start_report("plot", s.seed, &cfg, opts);
  report.outputs = {"spacetime.ppm", "spacetime.svg"};
  return finish(report, opts);
}

// ---------------------------------------------------------------------------

namespace {

struct SuiteEntry {
  const char* name;
  bool oracle;
};

constexpr SuiteEntry kSuite[] = {
    {"wt_identity", false},         {"weighted_density", false},     {"vt_density_bound", false},
    {"mass_transport", false},      {"tracer_monotonicity", false},  {"two_thirds_ratio", false},
    {"goodness_convergence", false}, {"crw_density", false},         {"pc_bracket", false},
    {"ratio_cross_identity", false}, {"sweep_monotone", false},      {"determinism", false},
    {"gate_exactness", true},       {"engine_vs_naive", true},       {"k2_exact", true},
};

}  // namespace

std::vector<std::string> verify_check_names(bool oracles) {
  std::vector<std::string> out;
  for (const auto& e : kSuite)
    if (oracles || !e.oracle) out.emplace_back(e.name);
  return out;
}

std::vector<CheckReport> run_checks(const VerifyOptions& v, const CommonOptions& opts, std::ostream& log) {
  const std::vector<std::string> known = verify_check_names(true);
  std::vector<std::string> wanted = v.checks.empty() ? verify_check_names(v.oracles) : v.checks;
  for (const auto& name : wanted) {
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw std::invalid_argument("unknown check '" + name + "'");
    const bool is_oracle = std::any_of(std::begin(kSuite), std::end(kSuite),
                                       [&](const SuiteEntry& e) { return e.oracle && name == e.name; });
    if (is_oracle && !v.oracles) throw std::invalid_argument("check '" + name + "' needs --oracles");
  }
  auto want = [&](const char* name) { return std::find(wanted.begin(), wanted.end(), name) != wanted.end(); };
  // Seeds derive from --seed when given, otherwise each check keeps its default.
  auto seed_for = [&](std::uint64_t fallback, std::uint64_t salt) {
    return opts.seed ? stream_seed(*opts.seed, salt) : fallback;
  };
  auto reps_for = [&](std::uint64_t fallback) { return opts.replicas.value_or(fallback); };

  std::map<std::string, CheckReport> done;
  auto record = [&](CheckReport r) {
    log << (r.pass ? "PASS " : "FAIL ") << r.name << '\n' << std::flush;
    done[r.name] = std::move(r);
  };

  if (want("wt_identity") || want("weighted_density")) {
    WtConfig c = default_wt_config();
    c.replicas = reps_for(c.replicas);
    c.seed = seed_for(c.seed, 1);
    c.jobs = opts.jobs;
    std::vector<WtResult> res;
    const auto t0 = std::chrono::steady_clock::now();
    res = run_wt(c);
    const double build = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (want("wt_identity")) {
      CheckReport r = timed([&] { return check_wt_identity(c, res); });
      r.wall_seconds += build;
      record(std::move(r));
    }
    if (want("weighted_density")) record(timed([&] { return check_weighted_density(res); }));
  }
  if (want("vt_density_bound")) {
    VtConfig c = default_vt_config();
    c.replicas = reps_for(c.replicas);
    c.seed = seed_for(c.seed, 2);
    c.jobs = opts.jobs;
    record(timed([&] {
      const auto grid = geometric_grid(c.cfg.horizon, c.levels);
      return check_vt_bound(c, run_root_ensemble(c.cfg, grid, c.replicas, c.seed, c.jobs));
    }));
  }
  if (want("mass_transport")) {
    MtpConfig c = default_mtp_config();
    c.replicas = reps_for(c.replicas);
    c.seed = seed_for(c.seed, 3);
    c.jobs = opts.jobs;
    record(timed([&] { return check_mtp(c, run_root_ensemble(c.cfg, {}, c.replicas, c.seed, c.jobs)); }));
  }
  if (want("tracer_monotonicity")) {
    MonotonicityConfig c = default_monotonicity_config();
    c.replicas = reps_for(c.replicas);
    c.seed = seed_for(c.seed, 4);
    c.jobs = opts.jobs;
    record(timed([&] { return check_monotonicity(c, run_monotonicity(c)); }));
  }
  if (want("two_thirds_ratio") || want("goodness_convergence") || want("crw_density")) {
    TwoThirdsConfig c;
    c.replicas = reps_for(c.replicas);
    c.seed = seed_for(c.seed, 5);
    c.jobs = opts.jobs;
    const auto t0 = std::chrono::steady_clock::now();
    const CoupledEnsemble e = run_coupled_ensemble(c);
    const double build = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool first = true;
    for (auto [name, fn] : {std::pair{"two_thirds_ratio", &check_two_thirds},
                            std::pair{"goodness_convergence", &check_goodness_convergence},
                            std::pair{"crw_density", &check_crw_density}}) {
      if (!want(name)) continue;
      CheckReport r = timed([&] { return fn(c, e); });
      if (first) r.wall_seconds += build;
      first = false;
      record(std::move(r));
    }
  }
  if (want("pc_bracket")) {
    PcConfig c = default_pc_config();
    c.seed = seed_for(c.seed, 6);
    c.jobs = opts.jobs;
    record(timed([&] { return check_pc_bracket(c, pc_bisect(c)); }));
  }
  if (want("ratio_cross_identity")) {
    CrossIdentityConfig c = default_cross_identity_config();
    c.replicas = reps_for(c.replicas);
    c.pc.seed = seed_for(c.pc.seed, 7);
    c.pc.jobs = opts.jobs;
    record(timed([&] { return check_ratio_cross_identity(c); }));
  }
  if (want("sweep_monotone")) {
    SweepConfig c = default_sweep_config();
    c.seed = seed_for(c.seed, 8);
    c.jobs = opts.jobs;
    record(timed([&] { return check_sweep_monotone(c, run_sweep(c)); }));
  }
  if (want("determinism")) {
    SimConfig c;
    c.topology = std::make_shared<const Topology>(Topology::cycle(100));
    c.horizon = 20.0;
    c.seed = seed_for(9, 9);
    record(timed([&] { return check_determinism(c); }));
  }
  if (want("gate_exactness")) {
    oracle::GateExactnessConfig c;
    c.seed = seed_for(c.seed, 10);
    record(timed([&] { return oracle::check_gate_exactness(c); }));
  }
  if (want("engine_vs_naive")) {
    oracle::NaiveComparisonConfig c;
    c.replicas = reps_for(c.replicas);
    c.seed = seed_for(c.seed, 11);
    c.jobs = opts.jobs;
    record(timed([&] { return oracle::check_engine_vs_naive(c); }));
  }
  if (want("k2_exact")) {
    oracle::K2ComparisonConfig c;
    c.replicas = reps_for(c.replicas);
    c.seed = seed_for(c.seed, 12);
    c.jobs = opts.jobs;
    record(timed([&] { return oracle::check_k2_exact(c); }));
  }

  std::vector<CheckReport> out;
  for (const auto& e : kSuite)
    if (auto it = done.find(e.name); it != done.end()) out.push_back(std::move(it->second));
  return out;
}

int cmd_verify(const VerifyOptions& v, const CommonOptions& given, std::ostream& log) {
  CommonOptions opts = given;
  if (!opts.seed && std::getenv("DLACS_SEED")) opts.seed = resolve_seed(given, nullptr);
  prepare_out(opts);
  Report report = start_report("verify", opts.seed.value_or(0), nullptr, opts);
  if (!opts.seed) report.config.emplace_back("seeds", "per-check defaults");
  if (!v.checks.empty()) {
    std::string joined;
    for (const auto& c : v.checks) joined += (joined.empty() ? "" : ",") + c;
    report.config.emplace_back("--checks", joined);
  }
  if (v.oracles) report.config.emplace_back("--oracles", "true");
  report.checks = run_checks(v, opts, log);
  return finish(report, opts);
}

}  // namespace dlacs::cli
