#include "dlacs/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace dlacs {

unsigned default_jobs() noexcept {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::shared_ptr<const Topology> share(Topology t) { return std::make_shared<const Topology>(std::move(t)); }

std::size_t grid_index(std::span<const double> grid, double t) {
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid[i] - t) <= 1e-9 * std::max(1.0, t)) return i;
  throw std::invalid_argument("time " + fmt(t) + " is not on the grid");
}

bool alive_after(const RootReplica& r, double t) { return r.root_a && (!r.tau || *r.tau > t); }

/// f = constant * prod_i mean(x_i)^e_i with e_i = +-1, delta-method stderr.
RatioEstimate product_ratio(const std::vector<std::vector<double>>& x, const std::vector<int>& e, double constant) {
  RatioEstimate out;
  const std::size_t k = x.size();
  const std::size_t n = x.empty() ? 0 : x[0].size();
  if (n < 2) return out;
  std::vector<double> m(k);
  for (std::size_t i = 0; i < k; ++i) {
    CompensatedSum s;
    for (double v : x[i]) s.add(v);
    m[i] = s.value() / static_cast<double>(n);
    if (e[i] < 0 && m[i] == 0.0) return out;
  }
  double f = constant;
  for (std::size_t i = 0; i < k; ++i) f *= e[i] > 0 ? m[i] : 1.0 / m[i];
  // Relative gradient e_i / m_i; var(f) = f^2 g' S g / n.
  std::vector<double> g(k);
  for (std::size_t i = 0; i < k; ++i) g[i] = m[i] == 0.0 ? 0.0 : e[i] / m[i];
  CompensatedSum quad;
  for (std::size_t r = 0; r < n; ++r) {
    double lin = 0.0;
    for (std::size_t i = 0; i < k; ++i) lin += g[i] * (x[i][r] - m[i]);
    quad.add(lin * lin);
  }
  const double var = f * f * quad.value() / static_cast<double>(n - 1) / static_cast<double>(n);
  out.mean = f;
  out.std_error = std::sqrt(std::max(0.0, var));
  out.empty = false;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Ensemble run_root_ensemble(const SimConfig& cfg, std::span<const double> grid, std::uint64_t replicas,
                           std::uint64_t master_seed, unsigned jobs) {
  cfg.validate();
  Ensemble e;
  e.grid.assign(grid.begin(), grid.end());
  e.replicas = run_replicas<RootReplica>(replicas, jobs, [&](std::size_t i) {
    SimConfig c = cfg;
    c.seed = stream_seed(master_seed, i);
    RootAccumulator acc;
    Observer* obs[] = {&acc};
    const SimState s = run(c, obs, grid);
    RootReplica r;
    r.root_a = s.origin_species[kRoot] == Species::A;
    r.tau = a_lifespan(s, kRoot);
    r.W_grid = acc.W_at_grid();
    r.V_grid = acc.V_at_grid();
    r.grid = acc.grid();
    r.W = acc.W();
    r.V = acc.V();
    if (s.death_time[kRoot]) (r.root_a ? r.s_a0 : r.s_b0) = s.partner_size[kRoot];
    return r;
  });
  return e;
}

SurvivalCurve unconditional_survival(const Ensemble& e) {
  std::vector<LifespanSample> samples;
  samples.reserve(e.replicas.size());
  for (const auto& r : e.replicas) samples.push_back({r.root_a, r.root_a ? r.tau : std::optional<double>(0.0)});
  return survival_estimate(samples, e.grid, false);
}

WtConfig default_wt_config() {
  WtConfig w;
  auto topo = share(Topology::cycle(100));
  SimConfig base;
  base.topology = topo;
  base.horizon = 50.0;
  SimConfig sym = base;
  SimConfig stat = base;
  stat.p = 0.7;
  stat.lambda_B = 0.0;
  SimConfig capped = base;
  capped.cap_M = Cap::at(1);
  capped.cap_N = Cap::at(1);
  w.cases = {{"symmetric", sym}, {"stationary_B", stat}, {"capped_M1_N1", capped}};
  return w;
}

std::vector<WtResult> run_wt(const WtConfig& cfg) {
  if (cfg.checkpoints.empty()) throw std::invalid_argument("wt: no checkpoints");
  const double horizon = *std::max_element(cfg.checkpoints.begin(), cfg.checkpoints.end());
  const std::vector<double> grid = uniform_grid(horizon, cfg.grid_points);
  std::vector<WtResult> out;
  for (std::size_t c = 0; c < cfg.cases.size(); ++c) {
    SimConfig sc = cfg.cases[c].cfg;
    sc.horizon = horizon;
    out.push_back({cfg.cases[c].label, run_root_ensemble(sc, grid, cfg.replicas, stream_seed(cfg.seed, c), cfg.jobs)});
  }
  return out;
}

CheckReport check_wt_identity(const WtConfig& cfg, std::span<const WtResult> results) {
  CheckReport rep;
  rep.name = "wt_identity";
  rep.rule = "95% CIs of mean W_T and of the trapezoid survival integral overlap, and mean W_T >= P(no annihilation by T) T - 3 sigma";
  rep.pass = true;
  for (const auto& res : results) {
    const auto& e = res.ensemble;
    rep.replicas += e.replicas.size();
    for (double T : cfg.checkpoints) {
      const std::size_t idx = grid_index(e.grid, T);
      std::vector<double> w;
      std::vector<double> integral;
      std::vector<double> alive;
      std::vector<double> ind(idx + 1);
      const std::span<const double> ts(e.grid.data(), idx + 1);
      for (const auto& r : e.replicas) {
        w.push_back(r.W_grid[idx]);
        for (std::size_t j = 0; j <= idx; ++j) ind[j] = alive_after(r, e.grid[j]) ? 1.0 : 0.0;
        integral.push_back(trapezoid(ts, ind));
        alive.push_back(alive_after(r, T) ? 1.0 : 0.0);
      }
      const EstimateCI ew = estimate_mean(w);
      const EstimateCI ei = estimate_mean(integral);
      const EstimateCI ea = estimate_mean(alive);
      const bool overlap = intervals_overlap(ew.lo(), ew.hi(), ei.lo(), ei.hi());
      const double sigma = std::sqrt(ew.std_error * ew.std_error + T * T * ea.std_error * ea.std_error);
      const bool bound = ew.mean >= ea.mean * T - 3.0 * sigma;
      const std::string key = res.label + "@T=" + fmt(T);
      rep.add(key + ".mean_W", ew.mean);
      rep.add(key + ".stderr_W", ew.std_error);
      rep.add(key + ".survival_integral", ei.mean);
      rep.add(key + ".stderr_integral", ei.std_error);
      rep.add(key + ".P_not_annihilated", ea.mean);
      rep.add(key + ".lower_bound", ea.mean * T - 3.0 * sigma);
      if (!overlap) rep.notes.push_back(key + ": intervals do not overlap");
      if (!bound) rep.notes.push_back(key + ": occupation-time lower bound violated");
      rep.pass = rep.pass && overlap && bound;
    }
  }
  rep.tolerance("ci_level", 0.95);
  rep.tolerance("sigma_multiplier", 3.0);
  return rep;
}

CheckReport check_weighted_density(std::span<const WtResult> results) {
  CheckReport rep;
  rep.name = "weighted_density";
  rep.rule = "paired mean of (weighted A load at root - 1{tau > t}) within 3 stderr of 0 at every tenth grid time";
  rep.pass = true;
  for (const auto& res : results) {
    const auto& e = res.ensemble;
    rep.replicas += e.replicas.size();
    const std::size_t stride = std::max<std::size_t>(1, (e.grid.size() - 1) / 10);
    double worst = 0.0;
    for (std::size_t j = 0; j < e.grid.size(); j += stride) {
      std::vector<double> d;
      d.reserve(e.replicas.size());
      for (const auto& r : e.replicas)
        d.push_back(static_cast<double>(r.grid[j].weighted) - (alive_after(r, e.grid[j]) ? 1.0 : 0.0));
      const EstimateCI ed = estimate_mean(d);
      const double z = ed.std_error > 0 ? std::abs(ed.mean) / ed.std_error : (ed.mean == 0.0 ? 0.0 : INFINITY);
      worst = std::max(worst, z);
      if (z > 3.0) {
        rep.pass = false;
        rep.notes.push_back(res.label + ": t=" + fmt(e.grid[j]) + " differs by " + fmt(z) + " stderr");
      }
    }
    rep.add(res.label + ".max_abs_z", worst);
  }
  rep.tolerance("max_abs_z", 3.0);
  return rep;
}

VtConfig default_vt_config() {
  VtConfig v;
  v.cfg.topology = share(Topology::torus(20, 3));
  v.cfg.p = 0.8;
  v.cfg.horizon = 20.0;
  return v;
}

CheckReport check_vt_bound(const VtConfig& cfg, const Ensemble& e) {
  CheckReport rep;
  rep.name = "vt_density_bound";
  rep.rule = "mean A-cluster count at root >= P(tau > t)^2 / (1 + 2 D t) - 3 sigma at every grid time";
  rep.replicas = e.replicas.size();
  rep.pass = true;
  const double D = cfg.cfg.topology->degree();
  const SurvivalCurve surv = unconditional_survival(e);
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < e.grid.size(); ++j) {
    const double t = e.grid[j];
    std::vector<double> count;
    count.reserve(e.replicas.size());
    for (const auto& r : e.replicas) count.push_back(r.grid[j].clusters);
    const EstimateCI ec = estimate_mean(count);
    const double P = surv.survival[j].estimate;
    const double se_p = surv.survival[j].std_error;
    const double rhs = P * P / (1.0 + 2.0 * D * t);
    const double se_rhs = 2.0 * P * se_p / (1.0 + 2.0 * D * t);
    const double sigma = std::sqrt(ec.std_error * ec.std_error + se_rhs * se_rhs);
    const double margin = ec.mean - (rhs - 3.0 * sigma);
    min_margin = std::min(min_margin, margin);
    rep.add("t=" + fmt(t) + ".density", ec.mean);
    rep.add("t=" + fmt(t) + ".bound", rhs);
    if (margin < 0.0) {
      rep.pass = false;
      rep.notes.push_back("bound violated at t=" + fmt(t));
    }
  }
  rep.add("min_margin", min_margin);
  rep.tolerance("sigma_multiplier", 3.0);
  rep.tolerance("degree", D);
  return rep;
}

MtpConfig default_mtp_config() {
  MtpConfig m;
  m.cfg.topology = share(Topology::torus(16, 2));
  m.cfg.horizon = 50.0;
  return m;
}

CheckReport check_mtp(const MtpConfig&, const Ensemble& e) {
  CheckReport rep;
  rep.name = "mass_transport";
  rep.rule = "|mean(S(a_0) - S(b_0))| <= 3 stderr (unconditional sizes, 0 when not annihilated)";
  rep.replicas = e.replicas.size();
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> d;
  for (const auto& r : e.replicas) {
    a.push_back(r.s_a0);
    b.push_back(r.s_b0);
    d.push_back(static_cast<double>(r.s_a0) - static_cast<double>(r.s_b0));
  }
  const EstimateCI ea = estimate_mean(a);
  const EstimateCI eb = estimate_mean(b);
  const EstimateCI ed = estimate_mean(d);
  rep.add("mean_S_a0", ea.mean);
  rep.add("stderr_S_a0", ea.std_error);
  rep.add("mean_S_b0", eb.mean);
  rep.add("stderr_S_b0", eb.std_error);
  rep.add("mean_difference", ed.mean);
  rep.add("stderr_difference", ed.std_error);
  rep.tolerance("sigma_multiplier", 3.0);
  rep.pass = !ed.empty && std::abs(ed.mean) <= 3.0 * ed.std_error + 1e-15;
  return rep;
}

// ---------------------------------------------------------------------------

MonotonicityConfig default_monotonicity_config() {
  MonotonicityConfig m;
  m.cfg.topology = share(Topology::cycle(50));
  m.cfg.horizon = 100.0;
  return m;
}

std::vector<TracerRun> run_monotonicity(const MonotonicityConfig& cfg) {
  return run_replicas<TracerRun>(cfg.replicas, cfg.jobs, [&](std::size_t i) {
    SimConfig c = cfg.cfg;
    c.seed = stream_seed(cfg.seed, i);
    return run_with_tracer(c, cfg.extra_site);
  });
}

CheckReport check_monotonicity(const MonotonicityConfig& cfg, std::span<const TracerRun> runs) {
  CheckReport rep;
  rep.name = "tracer_monotonicity";
  rep.rule = "tau <= tau_plus in every replica";
  rep.replicas = runs.size();
  std::uint64_t violations = 0;
  std::uint64_t consistent = 0;
  std::uint64_t touched = 0;
  std::uint64_t differ = 0;
  for (const auto& r : runs) {
    violations += !lifespan_le(r.tau, r.tau_plus);
    consistent += r.tracer_consistent;
    touched += r.root_touched;
    differ += r.tau != r.tau_plus;
  }
  rep.add("violations", static_cast<double>(violations));
  rep.add("tracer_consistent", static_cast<double>(consistent));
  rep.add("root_touched", static_cast<double>(touched));
  rep.add("lifespans_differ", static_cast<double>(differ));
  rep.tolerance("violations", 0);
  rep.notes.push_back("caps M=" + cfg.cfg.cap_M.to_string() + " N=" + cfg.cfg.cap_N.to_string());
  rep.pass = violations == 0 && !runs.empty();
  return rep;
}

// ---------------------------------------------------------------------------

CoupledEnsemble run_coupled_ensemble(const TwoThirdsConfig& cfg) {
  if (cfg.times.empty()) throw std::invalid_argument("coupled ensemble: no times");
  auto topo = share(Topology::cycle(cfg.n));
  const double horizon = *std::max_element(cfg.times.begin(), cfg.times.end());
  auto per = run_replicas<std::vector<CoupledSample>>(cfg.replicas, cfg.jobs, [&](std::size_t i) {
    const ArrowStream arrows = generate_arrows(topo, horizon, stream_seed(cfg.seed, i));
    const auto outs = run_coupled(arrows, cfg.times, true);
    std::vector<CoupledSample> s(outs.size());
    for (std::size_t k = 0; k < outs.size(); ++k) {
      s[k].crw = outs[k].crw_occupied;
      s[k].dlacs = outs[k].dlacs_occupied;
      s[k].leaves = outs[k].leaf_count;
      s[k].shape_goodness = outs[k].tree ? goodness_probability(*outs[k].tree) : std::nan("");
    }
    return s;
  });
  CoupledEnsemble e;
  e.times = cfg.times;
  e.samples.assign(cfg.times.size(), std::vector<CoupledSample>(cfg.replicas));
  for (std::size_t i = 0; i < per.size(); ++i)
    for (std::size_t k = 0; k < cfg.times.size(); ++k) e.samples[k][i] = per[i][k];
  return e;
}

namespace {
std::size_t time_index(const CoupledEnsemble& e, double t) { return grid_index(e.times, t); }
}  // namespace

CheckReport check_two_thirds(const TwoThirdsConfig& cfg, const CoupledEnsemble& e) {
  constexpr double kTarget = 2.0 / 3.0;
  constexpr double kTol = 0.05;
  CheckReport rep;
  rep.name = "two_thirds_ratio";
  rep.rule = "95% Wilson CI of P(xi_t(0) != 0)/P(zeta_t(0) = 1) and 95% CI of mean tree goodness meet [2/3-0.05, 2/3+0.05] at the gate time";
  rep.replicas = cfg.replicas;
  rep.pass = false;
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    std::uint64_t occ = 0;
    std::uint64_t good = 0;
    std::vector<double> q;
    for (const auto& s : e.samples[k]) {
      occ += s.crw;
      good += s.dlacs;
      if (s.crw) q.push_back(s.shape_goodness);
    }
    const ProportionCI ratio = estimate_proportion(good, occ);
    const EstimateCI eq = estimate_mean(q);
    const std::string key = "t=" + fmt(e.times[k]);
    rep.add(key + ".ratio", ratio.estimate);
    rep.add(key + ".ratio_lo", ratio.lo);
    rep.add(key + ".ratio_hi", ratio.hi);
    rep.add(key + ".P_good", eq.mean);
    rep.add(key + ".P_good_stderr", eq.std_error);
    rep.add(key + ".crw_occupied", static_cast<double>(occ));
    if (k == time_index(e, cfg.gate_time)) {
      const bool r_ok = occ > 0 && intervals_overlap(ratio.lo, ratio.hi, kTarget - kTol, kTarget + kTol);
      const bool q_ok = !eq.empty && intervals_overlap(eq.lo(), eq.hi(), kTarget - kTol, kTarget + kTol);
      rep.pass = r_ok && q_ok;
      if (!r_ok) rep.notes.push_back("ratio interval misses the target band");
      if (!q_ok) rep.notes.push_back("goodness interval misses the target band");
    }
  }
  rep.tolerance("target", kTarget);
  rep.tolerance("half_width", kTol);
  rep.add("mean_field_reference", kTarget);
  return rep;
}

CheckReport check_goodness_convergence(const TwoThirdsConfig& cfg, const CoupledEnsemble& e) {
  CheckReport rep;
  rep.name = "goodness_convergence";
  rep.rule = "|P(good | leaves >= k) - 2/3| <= 1/k + 3 stderr at the gate time";
  rep.replicas = cfg.replicas;
  const auto& col = e.samples[time_index(e, cfg.gate_time)];
  std::vector<GoodnessSample> samples;
  for (const auto& s : col)
    if (s.crw) samples.push_back({s.leaves, s.dlacs});
  rep.pass = true;
  for (std::uint32_t k : cfg.ks) {
    const DeviationReport d = goodness_convergence_check(k, samples);
    const std::string key = "k=" + std::to_string(k);
    rep.add(key + ".n", static_cast<double>(d.n));
    rep.add(key + ".estimate", d.estimate);
    rep.add(key + ".deviation", d.deviation);
    rep.add(key + ".bound", d.bound);
    if (!d.sufficient) rep.notes.push_back(key + ": fewer than two samples");
    rep.pass = rep.pass && d.pass;
  }
  rep.tolerance("sigma_multiplier", 3.0);
  return rep;
}

CheckReport check_crw_density(const TwoThirdsConfig& cfg, const CoupledEnsemble& e) {
  CheckReport rep;
  rep.name = "crw_density";
  rep.rule = "95% Wilson CI of P(zeta_t(0) = 1) meets (pi t)^(-1/2) (1 +- 0.15)";
  rep.replicas = cfg.replicas;
  const auto& col = e.samples[time_index(e, cfg.crw_time)];
  std::uint64_t occ = 0;
  for (const auto& s : col) occ += s.crw;
  const ProportionCI pr = estimate_proportion(occ, col.size());
  const double ref = 1.0 / std::sqrt(std::numbers::pi * cfg.crw_time);
  rep.add("estimate", pr.estimate);
  rep.add("lo", pr.lo);
  rep.add("hi", pr.hi);
  rep.add("reference", ref);
  rep.add("relative_error", pr.estimate / ref - 1.0);
  rep.tolerance("relative", 0.15);
  rep.pass = intervals_overlap(pr.lo, pr.hi, 0.85 * ref, 1.15 * ref);
  return rep;
}

// ---------------------------------------------------------------------------

PcConfig default_pc_config() {
  PcConfig c;
  c.cfg.topology = share(Topology::cycle(2000));
  c.cfg.lambda_B = 0.0;
  c.cfg.cap_M = Cap::unlimited();
  return c;
}

SimState run_until_quiet(const SimConfig& cfg, double window, double t_max, bool* capped) {
  if (cfg.mode != Mode::continuous) throw std::invalid_argument("run_until_quiet: continuous mode only");
  if (!(window > 0.0) || !(t_max >= 0.0)) throw std::invalid_argument("run_until_quiet: bad window or t_max");
  SimState s = init_state(cfg);
  const Topology& topo = *cfg.topology;
  double last = 0.0;
  bool hit_cap = false;
  for (;;) {
    const auto ev = next_event(s, cfg);
    if (!ev) break;  // absorbed
    const double t = s.clock + ev->dt;
    const double quiet_at = last + window;
    if (quiet_at <= t_max && t > quiet_at) {
      s.clock = quiet_at;
      break;
    }
    if (t > t_max) {
      s.clock = t_max;
      hit_cap = true;
      break;
    }
    s.clock = t;
    const std::size_t before = s.annihilation_log.size();
    move_cluster(s, ev->mover, topo.sample_neighbor(s.clusters[ev->mover].location, s.rng), cfg);
    ++s.events;
    if (s.annihilation_log.size() != before) last = t;
  }
  if (capped) *capped = hit_cap;
  return s;
}

namespace {

struct RatioReplica {
  double sum_sa = 0, n_a_ann = 0, sum_sb = 0, n_b_ann = 0, n_a = 0, n_b = 0;
  double root_sa = 0, root_a_ann = 0, root_sb = 0, root_b_ann = 0, root_a = 0, root_b = 0;
  double stop = 0;
  bool capped = false;
};

}  // namespace

RatioPoint ratio_at(double p, const PcConfig& cfg, std::uint64_t replicas, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("ratio_at: p must lie in (0, 1)");
  SimConfig base = cfg.cfg;
  base.p = p;
  base.mode = Mode::continuous;
  base.validate();
  const double window = cfg.window_factor * base.vertex_count();
  auto reps = run_replicas<RatioReplica>(replicas, cfg.jobs, [&](std::size_t i) {
    SimConfig c = base;
    c.seed = stream_seed(seed, i);
    bool capped = false;
    const SimState s = run_until_quiet(c, window, cfg.t_max, &capped);
    RatioReplica r;
    for (OriginId o = 0; o < s.origin_count(); ++o) {
      const bool is_a = s.origin_species[o] == Species::A;
      const bool ann = s.death_time[o].has_value();
      (is_a ? r.n_a : r.n_b) += 1;
      if (ann) {
        (is_a ? r.n_a_ann : r.n_b_ann) += 1;
        (is_a ? r.sum_sa : r.sum_sb) += s.partner_size[o];
      }
    }
    const bool root_is_a = s.origin_species[kRoot] == Species::A;
    const bool root_ann = s.death_time[kRoot].has_value();
    (root_is_a ? r.root_a : r.root_b) = 1;
    if (root_ann) {
      (root_is_a ? r.root_a_ann : r.root_b_ann) = 1;
      (root_is_a ? r.root_sa : r.root_sb) = s.partner_size[kRoot];
    }
    r.stop = s.clock;
    r.capped = capped;
    return r;
  });
  auto column = [&](double RatioReplica::*field) {
    std::vector<double> v;
    v.reserve(reps.size());
    for (const auto& r : reps) v.push_back(r.*field);
    return v;
  };
  const double odds = p / (1.0 - p);
  RatioPoint pt;
  pt.p = p;
  pt.replicas = replicas;
  using R = RatioReplica;
  pt.r = product_ratio({column(&R::sum_sa), column(&R::n_a_ann), column(&R::sum_sb), column(&R::n_b_ann)},
                       {1, -1, -1, 1}, odds);
  pt.r_survival = product_ratio({column(&R::n_b_ann), column(&R::n_b), column(&R::n_a_ann), column(&R::n_a)},
                                {1, -1, -1, 1}, 1.0);
  pt.r_root = product_ratio({column(&R::root_sa), column(&R::root_a_ann), column(&R::root_sb), column(&R::root_b_ann)},
                            {1, -1, -1, 1}, odds);
  pt.r_root_survival = product_ratio(
      {column(&R::root_b_ann), column(&R::root_b), column(&R::root_a_ann), column(&R::root_a)}, {1, -1, -1, 1}, 1.0);
  CompensatedSum stop;
  for (const auto& r : reps) {
    stop.add(r.stop);
    pt.capped_runs += r.capped;
  }
  pt.mean_stop_time = reps.empty() ? 0.0 : stop.value() / static_cast<double>(reps.size());
  return pt;
}

PcResult pc_bisect(const PcConfig& cfg) {
  if (!(cfg.p_lo > 0.0 && cfg.p_lo < cfg.p_hi && cfg.p_hi < 1.0)) throw std::invalid_argument("pc: need 0 < p_lo < p_hi < 1");
  if (!(cfg.tol_p > 0.0)) throw std::invalid_argument("pc: tol_p must be positive");
  if (cfg.replicas < 2) throw std::invalid_argument("pc: at least two replicas per point");
  PcResult res;
  std::uint64_t calls = 0;

  // Evaluate p, doubling replicas until the interval excludes 1 or the budget ends.
  auto evaluate = [&](double p) -> std::optional<RatioPoint> {
    std::uint64_t reps = cfg.replicas;
    for (;;) {
      if (res.replicas_used + reps > cfg.budget) return std::nullopt;
      RatioPoint pt = ratio_at(p, cfg, reps, stream_seed(cfg.seed, calls++));
      res.replicas_used += reps;
      res.evaluated.push_back(pt);
      if (!pt.r.empty && (pt.r.hi() < 1.0 || pt.r.lo() > 1.0)) return pt;
      reps *= 2;
    }
  };

  res.lo = cfg.p_lo;
  res.hi = cfg.p_hi;
  const auto lo = evaluate(cfg.p_lo);
  const auto hi = evaluate(cfg.p_hi);
  if (!lo || !hi) {
    res.budget_exhausted = true;
  } else if (!(lo->r.mean < 1.0 && hi->r.mean > 1.0)) {
    res.bracket_invalid = true;
  } else {
    while (res.hi - res.lo > cfg.tol_p) {
      const double mid = 0.5 * (res.lo + res.hi);
      const auto pt = evaluate(mid);
      if (!pt) {
        res.budget_exhausted = true;
        break;
      }
      (pt->r.mean < 1.0 ? res.lo : res.hi) = mid;
    }
  }

  std::vector<std::pair<double, double>> by_p;
  for (const auto& pt : res.evaluated)
    if (!pt.r.empty) by_p.emplace_back(pt.p, pt.r.mean);
  std::sort(by_p.begin(), by_p.end());
  for (std::size_t i = 1; i < by_p.size(); ++i)
    if (by_p[i].first > by_p[i - 1].first && by_p[i].second < by_p[i - 1].second) res.non_monotone.push_back(by_p[i]);
  return res;
}

CheckReport check_pc_bracket(const PcConfig& cfg, const PcResult& result, double lower, double upper) {
  CheckReport rep;
  rep.name = "pc_bracket";
  rep.rule = "bisection bracket for r(p) = 1 lies inside (" + fmt(lower) + ", " + fmt(upper) + ") and is not flagged";
  rep.replicas = result.replicas_used;
  rep.add("p_lo", result.lo);
  rep.add("p_hi", result.hi);
  rep.add("mean_field_reference", 2.0 / 3.0);
  rep.add("evaluations", static_cast<double>(result.evaluated.size()));
  rep.add("non_monotone_points", static_cast<double>(result.non_monotone.size()));
  std::uint64_t capped = 0;
  for (const auto& pt : result.evaluated) {
    rep.add("r(p=" + fmt(pt.p) + ",n=" + std::to_string(pt.replicas) + ")", pt.r.mean);
    capped += pt.capped_runs;
  }
  rep.add("capped_runs", static_cast<double>(capped));
  rep.tolerance("tol_p", cfg.tol_p);
  rep.tolerance("lower", lower);
  rep.tolerance("upper", upper);
  if (result.budget_exhausted) rep.notes.push_back("replica budget exhausted");
  if (result.bracket_invalid) rep.notes.push_back("end points do not bracket r = 1");
  for (const auto& [p, r] : result.non_monotone) rep.notes.push_back("r decreases at p=" + fmt(p));
  if (capped > 0) rep.notes.push_back("some runs hit t_max before going quiet");
  rep.pass = !result.budget_exhausted && !result.bracket_invalid && result.lo > lower && result.hi < upper;
  return rep;
}

CrossIdentityConfig default_cross_identity_config() {
  CrossIdentityConfig c;
  c.pc = default_pc_config();
  c.pc.cfg.topology = share(Topology::cycle(200));
  c.pc.seed = 19;
  return c;
}

CheckReport check_ratio_cross_identity(const CrossIdentityConfig& cfg, std::vector<RatioPoint>* points) {
  CheckReport rep;
  rep.name = "ratio_cross_identity";
  rep.rule = "root size form and root survival form of the critical ratio have overlapping 95% CIs at every p";
  rep.pass = true;
  PcConfig pc = cfg.pc;
  pc.t_max = cfg.horizon;
  pc.window_factor = 2.0 * cfg.horizon / pc.cfg.vertex_count() + 1.0;  // never quiet before the horizon
  for (std::size_t i = 0; i < cfg.p_values.size(); ++i) {
    const RatioPoint pt = ratio_at(cfg.p_values[i], pc, cfg.replicas, stream_seed(pc.seed, i));
    rep.replicas += pt.replicas;
    const std::string key = "p=" + fmt(pt.p);
    rep.add(key + ".size_form", pt.r_root.mean);
    rep.add(key + ".size_form_stderr", pt.r_root.std_error);
    rep.add(key + ".survival_form", pt.r_root_survival.mean);
    rep.add(key + ".survival_form_stderr", pt.r_root_survival.std_error);
    rep.add(key + ".pooled", pt.r.mean);
    const bool ok = !pt.r_root.empty && !pt.r_root_survival.empty &&
                    intervals_overlap(pt.r_root.lo(), pt.r_root.hi(), pt.r_root_survival.lo(), pt.r_root_survival.hi());
    if (!ok) rep.notes.push_back(key + ": forms disagree");
    rep.pass = rep.pass && ok;
    if (points) points->push_back(pt);
  }
  rep.tolerance("ci_level", 0.95);
  return rep;
}

// ---------------------------------------------------------------------------

SweepConfig default_sweep_config() {
  SweepConfig c;
  c.cfg.topology = share(Topology::cycle(2000));
  c.cfg.lambda_B = 0.0;
  c.cfg.mode = Mode::discrete;
  c.cfg.steps = 2000;
  return c;
}

double a_survival_fraction(const SimState& s) {
  std::uint64_t a = 0;
  std::uint64_t alive = 0;
  for (OriginId o = 0; o < s.origin_count(); ++o) {
    if (s.origin_species[o] != Species::A) continue;
    ++a;
    alive += !s.death_time[o].has_value();
  }
  return a == 0 ? 0.0 : static_cast<double>(alive) / static_cast<double>(a);
}

std::vector<SweepPoint> run_sweep(const SweepConfig& cfg) {
  std::vector<SweepPoint> out;
  for (std::size_t k = 0; k < cfg.p_values.size(); ++k) {
    SimConfig base = cfg.cfg;
    base.p = cfg.p_values[k];
    base.validate();
    const auto vals = run_replicas<std::pair<double, double>>(cfg.replicas, cfg.jobs, [&](std::size_t i) {
      SimConfig c = base;
      c.seed = stream_seed(stream_seed(cfg.seed, k), i);
      const SimState s = run(c);
      double occ = 0;
      for (VertexId v = 0; v < s.site_index.size(); ++v) occ += s.count_a(v) > 0;
      return std::pair<double, double>{a_survival_fraction(s), occ / static_cast<double>(s.site_index.size())};
    });
    std::vector<double> surv;
    std::vector<double> occ;
    for (const auto& [a, b] : vals) {
      surv.push_back(a);
      occ.push_back(b);
    }
    out.push_back({base.p, estimate_mean(surv), estimate_mean(occ)});
  }
  return out;
}

CheckReport check_sweep_monotone(const SweepConfig& cfg, std::span<const SweepPoint> points) {
  CheckReport rep;
  rep.name = "sweep_monotone";
  rep.rule = "mean fraction of A particles alive after the last step is non-decreasing in p";
  rep.replicas = cfg.replicas * points.size();
  rep.pass = !points.empty();
  for (std::size_t i = 0; i < points.size(); ++i) {
    rep.add("p=" + fmt(points[i].p) + ".survival", points[i].survival.mean);
    if (i > 0 && points[i].survival.mean < points[i - 1].survival.mean) {
      rep.pass = false;
      rep.notes.push_back("decrease between p=" + fmt(points[i - 1].p) + " and p=" + fmt(points[i].p));
    }
  }
  rep.tolerance("steps", cfg.cfg.steps);
  return rep;
}

CheckReport check_determinism(const SimConfig& cfg) {
  CheckReport rep;
  rep.name = "determinism";
  rep.rule = "two runs with the same config and seed give identical annihilation logs and final clusters";
  rep.replicas = 2;
  const SimState a = run(cfg);
  const SimState b = run(cfg);
  bool same = a.annihilation_log.size() == b.annihilation_log.size() && a.events == b.events;
  for (std::size_t i = 0; same && i < a.annihilation_log.size(); ++i) {
    const auto& x = a.annihilation_log[i];
    const auto& y = b.annihilation_log[i];
    same = x.time == y.time && x.location == y.location && x.a_cluster.constituents == y.a_cluster.constituents &&
           x.b_cluster.constituents == y.b_cluster.constituents;
  }
  for (int k = 0; same && k < 2; ++k) {
    same = a.live[k].size() == b.live[k].size();
    for (std::size_t i = 0; same && i < a.live[k].size(); ++i) {
      const Cluster& x = a.clusters[a.live[k][i]];
      const Cluster& y = b.clusters[b.live[k][i]];
      same = x.location == y.location && x.size == y.size && x.bravery == y.bravery;
    }
  }
  rep.add("annihilations", static_cast<double>(a.annihilation_log.size()));
  rep.add("events", static_cast<double>(a.events));
  rep.pass = same;
  return rep;
}

}  // namespace dlacs
