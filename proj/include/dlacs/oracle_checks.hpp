// Checks that compare the library against the oracle module.
#pragma once

#include <cstdint>

#include "dlacs/experiments.hpp"

namespace dlacs::oracle {

struct GateExactnessConfig {
  std::uint32_t shapes = 1000;
  /// Random shapes get 1..max_leaves leaves.
  std::uint32_t max_leaves = 20;
  std::uint64_t seed = 23;
};

/// Dyadic recursion against exhaustive enumeration, exact equality on every
/// shape, plus the fixed values 1/2, 3/4 (caterpillar) and 5/8 (balanced).
CheckReport check_gate_exactness(const GateExactnessConfig& cfg = {});

struct NaiveComparisonConfig {
  std::uint32_t n = 6;
  double horizon = 5.0;
  double p = 0.5;
  std::uint64_t replicas = 10000;
  std::uint64_t seed = 29;
  unsigned jobs = 0;
};

/// Root state (vacant / A / B) and final cluster count distributions of the
/// engine and the direct simulator on a cycle agree within 4 sigma per bin.
CheckReport check_engine_vs_naive(const NaiveComparisonConfig& cfg = {});

struct K2ComparisonConfig {
  double horizon = 1.0;
  std::uint64_t replicas = 100000;
  std::uint64_t seed = 31;
  unsigned jobs = 0;
};

/// Engine frequencies on the two-vertex graph against the closed forms,
/// within 4 binomial sigma, for a symmetric and an asymmetric capped case.
CheckReport check_k2_exact(const K2ComparisonConfig& cfg = {});

}  // namespace dlacs::oracle
