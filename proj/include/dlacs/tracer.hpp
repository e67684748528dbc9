// Coupled simulation of a system and the same system augmented by one extra
// A particle, with the active/dormant/dead tracer bookkeeping that follows
// the discrepancy between them.
//
// Both systems are driven by per-origin path and clock streams (counter-based
// randomness keyed by origin id), so a cluster in either system moves exactly
// when its stream fires. The extra particle gets a fresh stream and a bravery
// of half the smallest bravery present. Whenever the augmented system
// produces a cluster that occupies the same site and species as a cluster of
// the base system but follows a different stream, it adopts the base
// cluster's stream; this keeps every untracked cluster on identical paths in
// both systems without changing either marginal law.
#pragma once

#include <cstdint>
#include <optional>

#include "dlacs/engine.hpp"

namespace dlacs {

enum class TracerStatus { active, dormant, dead };

/// Which system holds the cluster the tracer follows.
enum class TracedSystem { augmented, base };

struct TracerState {
  TracerStatus status = TracerStatus::active;
  TracedSystem system = TracedSystem::augmented;
  /// kNoCluster exactly when the tracer is dead.
  ClusterId tracked = kNoCluster;
};

struct TracerRun {
  /// Lifespan of the root's A particle in the base and augmented systems;
  /// nullopt means alive at the horizon.
  std::optional<double> tau;
  std::optional<double> tau_plus;
  TracerState tracer;
  /// The tracked cluster contained the root origin or reacted with the
  /// root's cluster at some point.
  bool root_touched = false;
  /// The final configurations differ exactly as the tracer state predicts.
  bool tracer_consistent = false;
  std::uint64_t events = 0;
  std::uint32_t status_changes = 0;
};

/// tau <= tau_plus with nullopt read as +infinity.
bool lifespan_le(const std::optional<double>& a, const std::optional<double>& b) noexcept;

/// Runs both systems to cfg.horizon (continuous mode only). If the root
/// starts with a B particle both lifespans are 0 and nothing is simulated.
/// Throws std::out_of_range for an invalid extra_site.
TracerRun run_with_tracer(const SimConfig& cfg, VertexId extra_site);

}  // namespace dlacs
