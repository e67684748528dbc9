// Arrow-driven construction of a coalescing random walk and, on the same
// arrows, a symmetric annihilating-coalescing system whose species are never
// sampled.
//
// Every oriented edge (u, v) carries a Poisson process of rate 1/deg(u); each
// arrow is marked OR or XOR by a fair coin. A particle at u jumps along the
// first arrow leaving u after its arrival. Two coalescing-walk particles that
// meet merge for good; in the coupled system the merged particle is present
// if (OR) either input was present, or (XOR) exactly one was. The merge
// history of the particle at a site is a full binary tree of OR/XOR gates
// whose leaves are initial particles; the site is occupied in the coupled
// system iff that circuit outputs true on all-true inputs.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dlacs/dyadic.hpp"
#include "dlacs/rng.hpp"
#include "dlacs/topology.hpp"

namespace dlacs {

enum class Mark : std::uint8_t { OR = 0, XOR = 1 };

struct Arrow {
  double time = 0.0;
  VertexId from = 0;
  VertexId to = 0;
  Mark mark = Mark::OR;

  friend bool operator==(const Arrow&, const Arrow&) = default;
};

/// A fixed realisation of all arrows up to a horizon.
///
/// The seeded backend stores nothing: the arrows leaving u form a rate-1
/// Poisson process whose points each pick a uniform neighbour and a fair
/// mark, which is the superposition of the per-edge rate-1/deg processes. The
/// points in [b, b+1) are regenerated on demand from a hash of (seed, u, b),
/// so any query is O(1) expected and the realisation never depends on query
/// order. The explicit backend holds a hand-built arrow list.
class ArrowStream {
 public:
  /// Throws std::invalid_argument unless horizon >= 0 and finite.
  static ArrowStream seeded(std::shared_ptr<const Topology> topology, double horizon, std::uint64_t seed);
  /// Each arrow must follow an edge, have time in (0, horizon], and times out
  /// of one vertex must be distinct. Throws std::invalid_argument otherwise.
  static ArrowStream explicit_list(std::shared_ptr<const Topology> topology, double horizon,
                                   std::vector<Arrow> arrows);

  const Topology& topology() const noexcept { return *topology_; }
  double horizon() const noexcept { return horizon_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// First arrow leaving u strictly after t and no later than the horizon.
  std::optional<Arrow> next_from(VertexId u, double t) const;

  /// Every arrow up to the horizon, ordered by time.
  std::vector<Arrow> materialize_all() const;

 private:
  ArrowStream() = default;
  void bucket(VertexId u, std::uint64_t b, std::vector<Arrow>& out) const;

  std::shared_ptr<const Topology> topology_;
  double horizon_ = 0.0;
  std::uint64_t seed_ = 0;
  bool explicit_ = false;
  /// Explicit backend: arrows grouped by source vertex, each group by time.
  std::vector<std::vector<Arrow>> by_source_;
};

ArrowStream generate_arrows(std::shared_ptr<const Topology> topology, double horizon, std::uint64_t seed);

/// Full binary tree of OR/XOR gates with true-valued leaves. Node 0 is the
/// root once the tree is non-empty.
class GateTree {
 public:
  struct Node {
    /// -1 for leaves.
    std::int32_t left = -1;
    std::int32_t right = -1;
    Mark mark = Mark::OR;
    bool is_leaf() const noexcept { return left < 0; }
  };

  static GateTree leaf();
  static GateTree join(Mark mark, const GateTree& left, const GateTree& right);
  /// Left comb: join(m_1, join(m_2, ...), leaf) built from the innermost
  /// pair outward; `marks` lists the gates from the root down. The tree has
  /// marks.size() + 1 leaves.
  static GateTree caterpillar(std::span<const Mark> marks);
  /// Same shape, marks all OR (used where only the shape matters).
  static GateTree caterpillar_shape(std::uint32_t leaves);
  /// Random shape: leaves are split uniformly at random at each node.
  static GateTree random_shape(std::uint32_t leaves, Rng& rng);

  std::uint32_t leaf_count() const noexcept { return leaves_; }
  std::uint32_t internal_count() const noexcept { return leaves_ == 0 ? 0 : leaves_ - 1; }
  std::span<const Node> nodes() const noexcept { return nodes_; }
  const Node& node(std::int32_t i) const { return nodes_.at(static_cast<std::size_t>(i)); }

  /// Internal nodes in post-order (children before parents).
  std::vector<std::int32_t> internal_postorder() const;
  GateTree with_marks(std::span<const Mark> marks_in_postorder) const;

  friend bool operator==(const GateTree&, const GateTree&) = default;

 private:
  friend class GateForest;
  std::int32_t append(const GateTree& t);
  std::vector<Node> nodes_;
  std::uint32_t leaves_ = 0;
};

/// Gate semantics with all leaves true.
bool evaluate_gate_tree(const GateTree& tree);

/// Probability over i.i.d. fair marks that the tree evaluates true, by the
/// bottom-up rule q = a + b - (3/2) a b. Exact; throws std::overflow_error
/// if the denominator would exceed 2^62 (it never does below 63 leaves).
Dyadic goodness_probability_exact(const GateTree& shape);
/// Same recursion in floating point, for trees of any size.
double goodness_probability(const GateTree& shape);

/// Gate history of one coalescing-walk run.
class GateForest {
 public:
  explicit GateForest(std::uint32_t leaves);
  std::int32_t merge(Mark mark, std::int32_t left, std::int32_t right);
  std::uint32_t leaf_count(std::int32_t node) const { return count_[static_cast<std::size_t>(node)]; }
  GateTree extract(std::int32_t node) const;

 private:
  std::vector<GateTree::Node> nodes_;
  std::vector<std::uint32_t> count_;
};

/// Root status at one observation time.
struct CoupledOutcome {
  double time = 0.0;
  bool crw_occupied = false;
  /// Implies crw_occupied.
  bool dlacs_occupied = false;
  /// Leaves of the root particle's gate tree; 0 when the root is vacant.
  std::uint32_t leaf_count = 0;
  /// Present iff crw_occupied and trees were requested.
  std::optional<GateTree> tree;
};

/// Occupancy of every vertex in the coalescing walk at each requested time.
struct CrwSnapshot {
  double time = 0.0;
  std::vector<std::uint8_t> occupied;
  /// Initial particles merged into the particle at each vertex (0 if vacant).
  std::vector<std::uint32_t> leaves;
  /// Coupled-system presence at each vertex.
  std::vector<std::uint8_t> present;
};

/// Runs both systems on one arrow realisation and reports full snapshots at
/// each time in `times` (sorted, within [0, horizon]).
std::vector<CrwSnapshot> run_crw(const ArrowStream& arrows, std::span<const double> times);

/// Root outcomes at each of `times`; `with_trees` extracts the gate tree.
std::vector<CoupledOutcome> run_coupled(const ArrowStream& arrows, std::span<const double> times,
                                        bool with_trees = false);

/// The gate tree of the particle at `root` at time t. Throws
/// std::invalid_argument if the site is vacant.
GateTree extract_gate_tree(const ArrowStream& arrows, VertexId root, double t);

struct GoodnessSample {
  std::uint32_t leaf_count = 0;
  bool good = false;
};

struct DeviationReport {
  std::uint32_t k = 0;
  std::uint64_t n = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double deviation = 0.0;
  double bound = 0.0;
  bool sufficient = false;
  bool pass = false;
};

/// |P(good | leaves >= k) - 2/3| against 1/k + 3 stderr over samples with
/// at least k leaves; `sufficient` is false (and pass false) with fewer
/// than two such samples.
DeviationReport goodness_convergence_check(std::uint32_t k, std::span<const GoodnessSample> samples);

}  // namespace dlacs
