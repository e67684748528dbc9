#include "dlacs/observables.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dlacs {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    comp_ += (sum_ - t) + x;
  else
    comp_ += (x - t) + sum_;
  sum_ = t;
}

EstimateCI estimate_mean(std::span<const double> samples) {
  EstimateCI e;
  e.n = samples.size();
  if (samples.size() < 2) {
    if (samples.size() == 1) e.mean = samples[0];
    return e;
  }
  CompensatedSum sum;
  for (double x : samples) sum.add(x);
  const double n = static_cast<double>(samples.size());
  e.mean = sum.value() / n;
  CompensatedSum sq;
  for (double x : samples) sq.add((x - e.mean) * (x - e.mean));
  e.std_error = std::sqrt(sq.value() / (n - 1.0) / n);
  e.empty = false;
  return e;
}

ProportionCI estimate_proportion(std::uint64_t successes, std::uint64_t n, double z) {
  if (successes > n) throw std::invalid_argument("proportion: successes exceed trials");
  ProportionCI p;
  p.successes = successes;
  p.n = n;
  if (n == 0) return p;
  const double nn = static_cast<double>(n);
  p.estimate = static_cast<double>(successes) / nn;
  p.std_error = n > 1 ? std::sqrt(p.estimate * (1.0 - p.estimate) / (nn - 1.0)) : 0.0;
  const double z2 = z * z;
  const double centre = (p.estimate + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z / (1 + z2 / nn) * std::sqrt(p.estimate * (1 - p.estimate) / nn + z2 / (4 * nn * nn));
  p.lo = std::max(0.0, centre - half);
  p.hi = std::min(1.0, centre + half);
  return p;
}

bool intervals_overlap(double lo1, double hi1, double lo2, double hi2) noexcept {
  return lo1 <= hi2 && lo2 <= hi1;
}

std::vector<double> geometric_grid(double horizon, std::uint32_t levels) {
  if (!(horizon > 0.0)) throw std::invalid_argument("grid: horizon must be positive");
  std::vector<double> g{0.0};
  for (std::uint32_t k = 0; k <= levels; ++k)
    g.push_back(std::ldexp(horizon, static_cast<int>(k) - static_cast<int>(levels)));
  return g;
}

std::vector<double> uniform_grid(double horizon, std::uint32_t points) {
  if (!(horizon > 0.0) || points == 0) throw std::invalid_argument("grid: needs positive horizon and points");
  std::vector<double> g(points + 1);
  for (std::uint32_t i = 0; i <= points; ++i) g[i] = horizon * i / points;
  g.back() = horizon;
  return g;
}

double trapezoid(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
  CompensatedSum s;
  for (std::size_t i = 1; i < t.size(); ++i) s.add(0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]));
  return s.value();
}

void RootAccumulator::accumulate_sojourn(const SimState& state, double dt) {
  if (dt < 0.0) throw std::invalid_argument("accumulate_sojourn: negative dt");
  if (dt == 0.0) return;
  const std::uint64_t w = state.weighted_a(root_);
  if (w == 0) return;
  w_.add(dt * static_cast<double>(w));
  v_.add(dt * static_cast<double>(state.count_a(root_)));
}

void RootAccumulator::on_grid(const SimState& state, std::size_t, double t) {
  RootGridPoint p;
  p.time = t;
  p.weighted = state.weighted_a(root_);
  p.clusters = state.count_a(root_);
  p.occupied = p.clusters > 0;
  grid_.push_back(p);
  w_grid_.push_back(W());
  v_grid_.push_back(V());
}

void RootEventLog::on_start(const SimState& state) {
  entries_.clear();
  entries_.push_back({0.0, state.weighted_a(root_), state.count_a(root_)});
}

void RootEventLog::on_event(const SimState& state, const EventInfo& info) {
  entries_.push_back({info.time, state.weighted_a(root_), state.count_a(root_)});
}

std::pair<double, double> RootEventLog::integrate() const {
  CompensatedSum w;
  CompensatedSum v;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const double until = i + 1 < entries_.size() ? entries_[i + 1].time : end_;
    const double dt = until - entries_[i].time;
    if (entries_[i].weighted == 0 || dt <= 0.0) continue;
    w.add(dt * static_cast<double>(entries_[i].weighted));
    v.add(dt * static_cast<double>(entries_[i].clusters));
  }
  return {w.value(), v.value()};
}

OriginSizes origin_sizes(std::span<const AnnihilationRecord> log) {
  OriginSizes out;
  for (const auto& r : log) {
    for (OriginId o : r.a_cluster.constituents) out.a.emplace_back(o, r.b_cluster.size);
    for (OriginId o : r.b_cluster.constituents) out.b.emplace_back(o, r.a_cluster.size);
  }
  std::sort(out.a.begin(), out.a.end());
  std::sort(out.b.begin(), out.b.end());
  return out;
}

SizeSummary summarize_sizes(std::span<const AnnihilationRecord> log) {
  const OriginSizes sizes = origin_sizes(log);
  std::vector<double> a;
  std::vector<double> b;
  a.reserve(sizes.a.size());
  b.reserve(sizes.b.size());
  for (const auto& [o, s] : sizes.a) a.push_back(s);
  for (const auto& [o, s] : sizes.b) b.push_back(s);
  return {estimate_mean(a), estimate_mean(b)};
}

SurvivalCurve survival_estimate(std::span<const LifespanSample> samples, std::span<const double> grid,
                                bool conditional) {
  SurvivalCurve c;
  c.conditional = conditional;
  c.times.assign(grid.begin(), grid.end());
  std::uint64_t base = 0;
  for (const auto& s : samples) base += conditional ? s.root_is_a : 1;
  if (base == 0) throw std::invalid_argument("survival_estimate: no replica starts with an A at the root");
  for (double t : grid) {
    std::uint64_t alive = 0;
    for (const auto& s : samples)
      if (s.root_is_a && (!s.tau || *s.tau > t)) ++alive;
    c.survival.push_back(estimate_proportion(alive, base));
  }
  return c;
}

}  // namespace dlacs
