// Event-driven dynamics of two-type annihilating-coalescing random walks.
//
// Reaction rules at a shared site:
//   A_i + B_j -> nothing
//   A_i + A_j -> A_{i+j}  if max(i, j) <= M, otherwise no interaction
//   B_i + B_j -> B_{i+j}  if max(i, j) <= N, otherwise no interaction
// With several clusters on one site, the bravest cluster that still has a
// reactive partner reacts first, with its bravest reactive partner; this
// repeats until nothing at the site can react. A coalesced cluster takes the
// bravery and the path (random stream) of its braver input.
#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlacs/rng.hpp"
#include "dlacs/topology.hpp"

namespace dlacs {

enum class Species : std::uint8_t { A = 0, B = 1 };

constexpr Species other(Species s) noexcept { return s == Species::A ? Species::B : Species::A; }
constexpr char to_char(Species s) noexcept { return s == Species::A ? 'A' : 'B'; }

using ClusterId = std::uint32_t;
/// Index of an initial particle (its starting vertex) or of an added particle.
using OriginId = std::uint32_t;

inline constexpr ClusterId kNoCluster = std::numeric_limits<ClusterId>::max();

/// Coalescence cap. `Cap::unlimited()` is the explicit infinity.
class Cap {
 public:
  static constexpr Cap unlimited() noexcept { return Cap(true, 0); }
  static constexpr Cap at(std::uint32_t m) noexcept { return Cap(false, m); }

  constexpr bool is_unlimited() const noexcept { return unlimited_; }
  constexpr std::uint32_t value() const noexcept { return value_; }
  /// True when a cluster of this size may still coalesce.
  constexpr bool admits(std::uint32_t size) const noexcept { return unlimited_ || size <= value_; }

  std::string to_string() const { return unlimited_ ? "inf" : std::to_string(value_); }
  friend constexpr bool operator==(Cap, Cap) = default;

 private:
  constexpr Cap(bool unlimited, std::uint32_t value) : unlimited_(unlimited), value_(value) {}
  bool unlimited_;
  std::uint32_t value_;
};

enum class Mode { continuous, discrete };

struct SimConfig {
  std::shared_ptr<const Topology> topology;
  double p = 0.5;
  double lambda_A = 1.0;
  double lambda_B = 1.0;
  Cap cap_M = Cap::unlimited();
  Cap cap_N = Cap::unlimited();
  /// Time horizon (continuous mode).
  double horizon = 10.0;
  std::uint64_t seed = 1;
  Mode mode = Mode::continuous;
  /// Step count (discrete mode).
  std::uint32_t steps = 0;
  /// Keep a log of every coalescence (cap audits).
  bool record_merges = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  double rate(Species s) const noexcept { return s == Species::A ? lambda_A : lambda_B; }
  Cap cap(Species s) const noexcept { return s == Species::A ? cap_M : cap_N; }
  std::uint32_t vertex_count() const noexcept { return topology->vertex_count(); }
};

struct Cluster {
  ClusterId id = kNoCluster;
  Species species = Species::A;
  std::uint32_t size = 0;
  double bravery = 0.0;
  VertexId location = 0;
  /// Origin whose path and clock the cluster follows.
  OriginId stream = 0;
  std::vector<OriginId> constituents;
  bool alive = false;
  /// Contains origin 0.
  bool holds_root = false;
  std::uint32_t live_slot = 0;
};

struct ClusterSnapshot {
  std::uint32_t size = 0;
  std::vector<OriginId> constituents;
};

struct AnnihilationRecord {
  double time = 0.0;
  ClusterSnapshot a_cluster;
  ClusterSnapshot b_cluster;
  VertexId location = 0;
};

struct MergeRecord {
  double time = 0.0;
  Species species = Species::A;
  std::uint32_t first_size = 0;
  std::uint32_t second_size = 0;
  ClusterId result = kNoCluster;
};

/// One reaction (or blocked encounter) during the latest site resolution.
struct Reaction {
  enum class Kind : std::uint8_t { annihilate, coalesce, blocked };
  Kind kind = Kind::annihilate;
  ClusterId first = kNoCluster;
  ClusterId second = kNoCluster;
  /// Coalescence product, otherwise kNoCluster.
  ClusterId result = kNoCluster;
};

struct SimState {
  explicit SimState(std::uint64_t seed) : rng(seed) {}

  double clock = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t events = 0;

  /// Indexed by ClusterId; dead clusters stay in place with alive == false.
  std::vector<Cluster> clusters;
  std::vector<std::vector<ClusterId>> site_index;
  std::array<std::vector<ClusterId>, 2> live;

  std::vector<Species> origin_species;
  std::vector<double> origin_bravery;
  /// Annihilation time per origin; nullopt while the origin survives.
  std::vector<std::optional<double>> death_time;
  /// Size of the opposite cluster the origin was annihilated with; 0 if none.
  std::vector<std::uint32_t> partner_size;

  std::vector<AnnihilationRecord> annihilation_log;
  std::vector<MergeRecord> merge_log;
  std::vector<Reaction> last_reactions;
  std::uint64_t annihilated_constituents = 0;

  Rng rng;

  const Cluster& cluster(ClusterId id) const { return clusters.at(id); }
  std::span<const ClusterId> at(VertexId v) const { return site_index.at(v); }
  std::size_t live_count(Species s) const noexcept { return live[static_cast<int>(s)].size(); }
  std::size_t origin_count() const noexcept { return origin_species.size(); }

  /// Sum of A-cluster sizes at v.
  std::uint64_t weighted_a(VertexId v) const;
  /// Number of A clusters at v.
  std::uint32_t count_a(VertexId v) const;
  /// Number of live constituents (both species).
  std::uint64_t live_constituents() const;
};

/// Lifespan of the A particle started at `origin`: 0 if it started as B,
/// nullopt if it is still alive.
std::optional<double> a_lifespan(const SimState& state, OriginId origin);

/// Product measure start: one size-1 cluster per vertex, species A with
/// probability p, independent uniform bravery.
SimState init_state(const SimConfig& cfg);

struct Event {
  double dt = 0.0;
  ClusterId mover = kNoCluster;
};

/// Exponential race over live clusters: dt ~ Exp(n_A lambda_A + n_B lambda_B)
/// and the mover is picked proportionally to its species rate. Returns
/// nullopt when the total rate is zero (absorbed).
std::optional<Event> next_event(SimState& state, const SimConfig& cfg);

enum class PairKind { annihilate, coalesce, no_interaction };

PairKind classify_pair(const Cluster& c1, const Cluster& c2, const SimConfig& cfg) noexcept;

struct PairOutcome {
  PairKind kind = PairKind::no_interaction;
  /// Present for coalesce; id is left unassigned.
  std::optional<Cluster> merged;
};

PairOutcome resolve_pair(const Cluster& c1, const Cluster& c2, const SimConfig& cfg);

/// Runs reactions at v to a fixed point. `arriving` (if any) is checked for
/// blocked encounters, which are logged in last_reactions.
void resolve_site(SimState& state, VertexId v, const SimConfig& cfg,
                  ClusterId arriving = kNoCluster);

/// Move a live cluster to `to` and resolve that site. Clears last_reactions.
void move_cluster(SimState& state, ClusterId id, VertexId to, const SimConfig& cfg);

/// Adds a fresh size-1 cluster with a new origin id; the site is not resolved.
ClusterId add_particle(SimState& state, Species species, double bravery, VertexId location);

/// Synchronous step: every A cluster jumps, then every site is resolved in
/// increasing vertex order. Clusters that swap positions do not meet.
void discrete_step(SimState& state, const SimConfig& cfg);

struct EventInfo {
  double time = 0.0;
  ClusterId mover = kNoCluster;
  VertexId from = 0;
  VertexId to = 0;
};

/// Callbacks invoked by `run`. The state passed to on_sojourn is constant on
/// the interval [from, to).
class Observer {
 public:
  virtual ~Observer() = default;
  virtual void on_start(const SimState&) {}
  virtual void on_sojourn(const SimState&, double /*from*/, double /*to*/) {}
  virtual void on_grid(const SimState&, std::size_t /*index*/, double /*t*/) {}
  virtual void on_event(const SimState&, const EventInfo&) {}
  virtual void on_finish(const SimState&) {}
};

/// Simulates to the horizon (continuous) or for cfg.steps steps (discrete).
/// In continuous mode on_grid fires at each time of the sorted `grid` that
/// lies in [0, horizon]; in discrete mode it fires after every step with
/// index = step number and t = step number.
SimState run(const SimConfig& cfg, std::span<Observer* const> observers = {},
             std::span<const double> grid = {});

}  // namespace dlacs
