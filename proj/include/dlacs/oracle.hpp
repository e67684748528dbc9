// Ground truth for tests: closed forms on the two-vertex graph, a direct
// simulator that shares no code with the engine, and exhaustive enumeration
// of gate markings.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dlacs/dyadic.hpp"
#include "dlacs/engine.hpp"
#include "dlacs/graphical.hpp"

namespace dlacs::oracle {

struct K2Params {
  double p = 0.5;
  Cap cap_M = Cap::unlimited();
  Cap cap_N = Cap::unlimited();
  double lambda_A = 1.0;
  double lambda_B = 1.0;
};

struct Outcome {
  std::string name;
  double probability = 0.0;
};

/// Law of the two-vertex system. The first jump puts both clusters on one
/// site, so everything is decided by the initial species and whether that
/// jump happens before the horizon.
struct ExactOutcome {
  std::string scenario;
  /// Terminal law (t -> infinity); probabilities sum to 1.
  std::vector<Outcome> terminal;
  /// P(root A still alive at the horizon | A at root).
  double root_survival = 0.0;
  /// P(root A alive forever | A at root).
  double root_survival_limit = 0.0;
  /// P(an annihilation happened by the horizon).
  double annihilation = 0.0;
  /// Law of the live cluster count (0, 1 or 2) at the horizon.
  std::array<double, 3> count_pmf{};
  /// Law of the root at the horizon: vacant, A present, B present.
  std::array<double, 3> root_pmf{};
};

/// Throws std::invalid_argument unless lambda_A > 0, lambda_B >= 0,
/// p in [0, 1] and horizon >= 0.
ExactOutcome k2_exact(const K2Params& params, double horizon);

/// Terminal statistics of one direct-simulation run.
struct NaiveResult {
  std::uint32_t a_clusters = 0;
  std::uint32_t b_clusters = 0;
  /// 0 vacant, 1 A present, 2 B present (never both).
  int root_state = 0;
  std::uint64_t annihilations = 0;
  std::uint64_t jumps = 0;
  std::uint32_t cluster_count() const noexcept { return a_clusters + b_clusters; }
};

/// Per-particle exponential clocks, scanned linearly for the next ring;
/// collisions resolved by scanning the particle list. Same reaction rules as
/// the engine. Throws std::invalid_argument beyond 16 vertices or horizon 10,
/// or in discrete mode.
NaiveResult naive_simulate(const SimConfig& cfg);

/// Same statistics read off an engine state.
NaiveResult engine_summary(const SimState& state);

/// Fraction of the 2^(internal) markings under which the shape evaluates
/// true, counted with 64 markings per machine word. Throws
/// std::invalid_argument beyond 20 internal nodes.
Dyadic gate_tree_enumerate(const GateTree& shape);

}  // namespace dlacs::oracle
