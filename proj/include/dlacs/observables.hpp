// Root-centred observables and the small statistics kit used to report them.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dlacs/engine.hpp"

namespace dlacs {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Mean with stderr = sample standard deviation / sqrt(n). `empty` is set
/// (and the numbers are meaningless) when fewer than two samples exist.
struct EstimateCI {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  bool empty = true;

  /// Normal-approximation interval mean +- z stderr.
  double lo(double z = 1.96) const noexcept { return mean - z * std_error; }
  double hi(double z = 1.96) const noexcept { return mean + z * std_error; }
};

EstimateCI estimate_mean(std::span<const double> samples);

/// Binomial proportion with Wilson score interval.
struct ProportionCI {
  std::uint64_t successes = 0;
  std::uint64_t n = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double lo = 0.0;
  double hi = 1.0;
};

ProportionCI estimate_proportion(std::uint64_t successes, std::uint64_t n, double z = 1.96);

bool intervals_overlap(double lo1, double hi1, double lo2, double hi2) noexcept;

/// {0} followed by T 2^(k-K) for k = 0..K.
std::vector<double> geometric_grid(double horizon, std::uint32_t levels);
/// points+1 equally spaced times covering [0, T].
std::vector<double> uniform_grid(double horizon, std::uint32_t points);
/// Trapezoid rule; throws std::invalid_argument on size mismatch.
double trapezoid(std::span<const double> t, std::span<const double> y);

struct RootGridPoint {
  double time = 0.0;
  /// Sum of A-cluster sizes at the root.
  std::uint64_t weighted = 0;
  /// Number of A clusters at the root.
  std::uint32_t clusters = 0;
  bool occupied = false;
};

/// Weighted (W) and plain (V) occupation time of the root by A clusters,
/// plus a snapshot at every grid time. W >= V >= 0.
class RootAccumulator : public Observer {
 public:
  explicit RootAccumulator(VertexId root = kRoot) : root_(root) {}

  /// Throws std::invalid_argument for negative dt.
  void accumulate_sojourn(const SimState& state, double dt);

  void on_sojourn(const SimState& state, double from, double to) override { accumulate_sojourn(state, to - from); }
  void on_grid(const SimState& state, std::size_t index, double t) override;

  double W() const noexcept { return w_.value(); }
  double V() const noexcept { return v_.value(); }
  /// W and V at grid times (filled by on_grid).
  const std::vector<double>& W_at_grid() const noexcept { return w_grid_; }
  const std::vector<double>& V_at_grid() const noexcept { return v_grid_; }
  const std::vector<RootGridPoint>& grid() const noexcept { return grid_; }

 private:
  VertexId root_;
  CompensatedSum w_;
  CompensatedSum v_;
  std::vector<double> w_grid_;
  std::vector<double> v_grid_;
  std::vector<RootGridPoint> grid_;
};

/// Records the root's A load after every event, for recomputing W and V.
/// With no grid the recomputation repeats the accumulator's arithmetic, so
/// the two agree bit for bit.
class RootEventLog : public Observer {
 public:
  struct Entry {
    double time;
    std::uint64_t weighted;
    std::uint32_t clusters;
  };
  explicit RootEventLog(VertexId root = kRoot) : root_(root) {}
  void on_start(const SimState& state) override;
  void on_event(const SimState& state, const EventInfo& info) override;
  void on_finish(const SimState& state) override { end_ = state.clock; }

  /// W and V recomputed from the log over [0, end].
  std::pair<double, double> integrate() const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  VertexId root_;
  std::vector<Entry> entries_;
  double end_ = 0.0;
};

/// Annihilation partner size of every initial origin, from one run.
struct OriginSizes {
  /// S(a_u) for A origins annihilated by the end (u = origin id).
  std::vector<std::pair<OriginId, std::uint32_t>> a;
  /// S(b_v) for B origins annihilated by the end.
  std::vector<std::pair<OriginId, std::uint32_t>> b;
};

OriginSizes origin_sizes(std::span<const AnnihilationRecord> log);

struct SizeSummary {
  /// Mean of S(a) over annihilated A origins; empty when there are none.
  EstimateCI a_given_annihilated;
  EstimateCI b_given_annihilated;
};

/// Conditional mean sizes pooled over all origins of one annihilation log.
SizeSummary summarize_sizes(std::span<const AnnihilationRecord> log);

/// Root lifespan of one replica.
struct LifespanSample {
  bool root_is_a = false;
  /// Censored (nullopt) when alive at the horizon.
  std::optional<double> tau;
};

struct SurvivalCurve {
  std::vector<double> times;
  std::vector<ProportionCI> survival;
  /// True when conditioned on an A at the root; otherwise tau = 0 for a B start.
  bool conditional = true;
};

/// Empirical P(tau > t) at each grid time. Throws std::invalid_argument if
/// conditional and no replica starts with an A at the root.
SurvivalCurve survival_estimate(std::span<const LifespanSample> samples, std::span<const double> grid,
                                bool conditional);

}  // namespace dlacs
