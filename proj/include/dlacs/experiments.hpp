// Replica ensembles and the named checks built on them.
//
// Every ensemble derives replica i's seed as stream_seed(master, i) and
// stores results by replica index, so reports are identical for any number
// of worker threads.
#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dlacs/engine.hpp"
#include "dlacs/graphical.hpp"
#include "dlacs/observables.hpp"
#include "dlacs/tracer.hpp"

namespace dlacs {

unsigned default_jobs() noexcept;

/// fn(i) for every i in [0, count), spread over `jobs` threads (0 = all
/// cores). The first exception thrown by any replica is rethrown.
template <class T, class F>
std::vector<T> run_replicas(std::size_t count, unsigned jobs, F&& fn) {
  std::vector<T> out(count);
  if (jobs == 0) jobs = default_jobs();
  if (jobs > count) jobs = static_cast<unsigned>(count > 0 ? count : 1);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> guard(failure_lock);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

struct CheckReport {
  std::string name;
  bool pass = false;
  /// The tolerance rule in words.
  std::string rule;
  /// Ordered (label, value) pairs.
  std::vector<std::pair<std::string, double>> observed;
  std::vector<std::pair<std::string, double>> tolerances;
  std::uint64_t replicas = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> notes;

  void add(std::string label, double value) { observed.emplace_back(std::move(label), value); }
  void tolerance(std::string label, double value) { tolerances.emplace_back(std::move(label), value); }
};

// ---------------------------------------------------------------------------
// Engine ensembles observed at the root

struct RootReplica {
  bool root_a = false;
  /// Root lifespan; nullopt when alive at the horizon (or for a B start, see root_a).
  std::optional<double> tau;
  std::vector<double> W_grid;
  std::vector<double> V_grid;
  std::vector<RootGridPoint> grid;
  double W = 0.0;
  double V = 0.0;
  /// Partner size of the root origin when annihilated by the horizon, else 0.
  std::uint32_t s_a0 = 0;
  std::uint32_t s_b0 = 0;
};

struct Ensemble {
  std::vector<double> grid;
  std::vector<RootReplica> replicas;
};

/// Continuous-mode runs of `cfg` with per-replica seeds.
Ensemble run_root_ensemble(const SimConfig& cfg, std::span<const double> grid, std::uint64_t replicas,
                           std::uint64_t master_seed, unsigned jobs);

/// Unconditional P(tau > t) at each grid time (tau = 0 for a B start).
SurvivalCurve unconditional_survival(const Ensemble& e);

struct WtCase {
  std::string label;
  SimConfig cfg;
};

struct WtConfig {
  std::vector<WtCase> cases;
  std::vector<double> checkpoints{10.0, 50.0};
  std::uint32_t grid_points = 200;
  std::uint64_t replicas = 10000;
  std::uint64_t seed = 20240501;
  unsigned jobs = 0;
};

/// cycle(100), horizon 50: symmetric uncapped, stationary B at p = 0.7,
/// and symmetric caps M = N = 1.
WtConfig default_wt_config();

struct WtResult {
  std::string label;
  Ensemble ensemble;
};

std::vector<WtResult> run_wt(const WtConfig& cfg);

/// Mean W_T against the trapezoid integral of the survival curve (overlapping
/// 95% intervals), and mean W_T >= P(root never annihilated by T) T - 3 sigma.
CheckReport check_wt_identity(const WtConfig& cfg, std::span<const WtResult> results);
/// E[weighted A load at the root at t] against P(tau > t), within 3 sigma
/// at every grid time.
CheckReport check_weighted_density(std::span<const WtResult> results);

struct VtConfig {
  SimConfig cfg;
  std::uint32_t levels = 10;
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 7;
  unsigned jobs = 0;
};

/// torus(20, 3), p = 0.8, M = N = infinity, T = 20.
VtConfig default_vt_config();

/// E[A clusters at the root at t] >= P(tau > t)^2 / (1 + 2 D t) - 3 sigma.
CheckReport check_vt_bound(const VtConfig& cfg, const Ensemble& e);

struct MtpConfig {
  SimConfig cfg;
  std::uint64_t replicas = 10000;
  std::uint64_t seed = 11;
  unsigned jobs = 0;
};

/// torus(16, 2), symmetric, uncapped, horizon 50.
MtpConfig default_mtp_config();

/// Unconditional E[S(a_0)] = E[S(b_0)] within 3 sigma of the paired difference.
CheckReport check_mtp(const MtpConfig& cfg, const Ensemble& e);

// ---------------------------------------------------------------------------
// Tracer coupling

struct MonotonicityConfig {
  SimConfig cfg;
  VertexId extra_site = 1;
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 5;
  unsigned jobs = 0;
};

/// cycle(50), horizon 100, symmetric, uncapped.
MonotonicityConfig default_monotonicity_config();

std::vector<TracerRun> run_monotonicity(const MonotonicityConfig& cfg);
/// Pass iff tau <= tau_plus in every replica.
CheckReport check_monotonicity(const MonotonicityConfig& cfg, std::span<const TracerRun> runs);

// ---------------------------------------------------------------------------
// Coupled arrow construction

struct CoupledSample {
  bool crw = false;
  bool dlacs = false;
  std::uint32_t leaves = 0;
  /// Goodness probability of the root tree's shape over fresh marks; NaN if vacant.
  double shape_goodness = 0.0;
};

struct CoupledEnsemble {
  std::vector<double> times;
  /// samples[k][i]: replica i at times[k].
  std::vector<std::vector<CoupledSample>> samples;
};

struct TwoThirdsConfig {
  std::uint32_t n = 2000;
  std::vector<double> times{500.0, 1000.0};
  double gate_time = 500.0;
  double crw_time = 1000.0;
  std::vector<std::uint32_t> ks{2, 4, 8};
  std::uint64_t replicas = 20000;
  std::uint64_t seed = 3;
  unsigned jobs = 0;
};

CoupledEnsemble run_coupled_ensemble(const TwoThirdsConfig& cfg);

/// Ratio P(xi_t(0) != 0) / P(zeta_t(0) = 1) at every time; passes iff the
/// Wilson interval at gate_time meets [2/3 - 0.05, 2/3 + 0.05] and so does
/// the interval for the mean shape goodness.
CheckReport check_two_thirds(const TwoThirdsConfig& cfg, const CoupledEnsemble& e);
/// |P(good | leaves >= k) - 2/3| <= 1/k + 3 stderr at gate_time, every k.
CheckReport check_goodness_convergence(const TwoThirdsConfig& cfg, const CoupledEnsemble& e);
/// Wilson interval for P(zeta_t(0) = 1) at crw_time meets (pi t)^(-1/2) (1 +- 0.15).
CheckReport check_crw_density(const TwoThirdsConfig& cfg, const CoupledEnsemble& e);

// ---------------------------------------------------------------------------
// Critical density

/// Estimate with a 95% interval from the delta method.
struct RatioEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  bool empty = true;
  double lo(double z = 1.96) const noexcept { return mean - z * std_error; }
  double hi(double z = 1.96) const noexcept { return mean + z * std_error; }
};

struct RatioPoint {
  double p = 0.0;
  std::uint64_t replicas = 0;
  /// (p/(1-p)) E[S(a)|a annihilated] / E[S(b)|b annihilated], pooled over
  /// all origins (valid by transitivity).
  RatioEstimate r;
  /// P(b annihilated | b) / P(a annihilated | a), pooled.
  RatioEstimate r_survival;
  /// Root-only versions of the two forms.
  RatioEstimate r_root;
  RatioEstimate r_root_survival;
  /// Mean stopping time and how many runs hit t_max.
  double mean_stop_time = 0.0;
  std::uint64_t capped_runs = 0;
};

struct PcConfig {
  SimConfig cfg;
  double p_lo = 0.5;
  double p_hi = 0.9;
  double tol_p = 0.025;
  /// Replicas per first evaluation of a point.
  std::uint64_t replicas = 4;
  /// Total replica budget for the whole bisection.
  std::uint64_t budget = 256;
  /// Quiet window is window_factor * vertex_count time units.
  double window_factor = 0.01;
  double t_max = 2000.0;
  std::uint64_t seed = 13;
  unsigned jobs = 0;
};

/// cycle(2000), lambda_B = 0, M = infinity, continuous time.
PcConfig default_pc_config();

/// Runs until no annihilation has happened for the quiet window (or t_max).
SimState run_until_quiet(const SimConfig& cfg, double window, double t_max, bool* capped = nullptr);

RatioPoint ratio_at(double p, const PcConfig& cfg, std::uint64_t replicas, std::uint64_t seed);

struct PcResult {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<RatioPoint> evaluated;
  /// Budget ran out before every midpoint separated from 1.
  bool budget_exhausted = false;
  /// The end points did not bracket r = 1.
  bool bracket_invalid = false;
  /// Evaluated points ordered by p whose means decrease somewhere.
  std::vector<std::pair<double, double>> non_monotone;
  std::uint64_t replicas_used = 0;
};

PcResult pc_bisect(const PcConfig& cfg);

/// Bracket inside (lower, upper) and not flagged.
CheckReport check_pc_bracket(const PcConfig& cfg, const PcResult& result, double lower = 0.55,
                             double upper = 0.85);
struct CrossIdentityConfig {
  PcConfig pc;
  std::vector<double> p_values{0.6, 0.7, 0.8};
  /// Fixed horizon; runs are not stopped early.
  double horizon = 40.0;
  std::uint64_t replicas = 2000;
};

/// cycle(200), lambda_B = 0, M = infinity.
CrossIdentityConfig default_cross_identity_config();

/// Root size form and root survival form agree (overlapping 95% intervals)
/// at every p.
CheckReport check_ratio_cross_identity(const CrossIdentityConfig& cfg, std::vector<RatioPoint>* points = nullptr);

// ---------------------------------------------------------------------------
// Discrete-time sweep

struct SweepPoint {
  double p = 0.0;
  /// Fraction of initial A particles alive after the last step.
  EstimateCI survival;
  /// Fraction of sites holding an A cluster after the last step.
  EstimateCI occupancy;
};

struct SweepConfig {
  SimConfig cfg;
  std::vector<double> p_values{0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};
  std::uint64_t replicas = 4;
  std::uint64_t seed = 17;
  unsigned jobs = 0;
};

/// cycle(2000), discrete mode, 2000 steps, lambda_B = 0, M = infinity.
SweepConfig default_sweep_config();

double a_survival_fraction(const SimState& s);

std::vector<SweepPoint> run_sweep(const SweepConfig& cfg);
/// Survival means non-decreasing in p.
CheckReport check_sweep_monotone(const SweepConfig& cfg, std::span<const SweepPoint> points);

// ---------------------------------------------------------------------------

/// Runs cfg twice and compares the annihilation logs and final clusters.
CheckReport check_determinism(const SimConfig& cfg);

}  // namespace dlacs
