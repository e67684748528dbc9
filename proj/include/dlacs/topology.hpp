// Finite vertex-transitive graphs carrying the uniform-neighbour jump kernel.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlacs/rng.hpp"

namespace dlacs {

using VertexId = std::uint32_t;

/// Vertex 0 plays the role of the root.
inline constexpr VertexId kRoot = 0;

enum class GraphKind { cycle, torus, complete };

/// Cycle, discrete torus or complete graph. Immutable after construction;
/// the adjacency is stored flat with each row sorted by vertex index.
class Topology {
 public:
  static Topology cycle(std::uint32_t n);
  /// Periodic grid {0..side-1}^dim; vertex index = sum x_i * side^i.
  static Topology torus(std::uint32_t side, std::uint32_t dim);
  static Topology complete(std::uint32_t n);

  GraphKind kind() const noexcept { return kind_; }
  std::uint32_t vertex_count() const noexcept { return vertex_count_; }
  std::uint32_t degree() const noexcept { return degree_; }
  /// Side length for torus, vertex count otherwise.
  std::uint32_t side() const noexcept { return side_; }
  std::uint32_t dimension() const noexcept { return dim_; }

  /// Neighbours of v in increasing order. Throws std::out_of_range.
  std::span<const VertexId> neighbors(VertexId v) const;

  /// k-th neighbour of v (no range checks; hot path).
  VertexId neighbor(VertexId v, std::uint32_t k) const noexcept {
    return adjacency_[static_cast<std::size_t>(v) * degree_ + k];
  }

  /// One kernel step from v; consumes exactly one draw.
  VertexId sample_neighbor(VertexId v, Rng& rng) const noexcept {
    return neighbor(v, rng.below(degree_));
  }

  /// Kernel entry K(u, v).
  double kernel(VertexId u, VertexId v) const;

  bool adjacent(VertexId u, VertexId v) const;

  /// Translation by `shift` along the first axis (an automorphism).
  VertexId translate(VertexId v, std::uint32_t shift) const;

  std::string describe() const;

 private:
  Topology(GraphKind kind, std::uint32_t vertex_count, std::uint32_t degree, std::uint32_t side,
           std::uint32_t dim);

  GraphKind kind_;
  std::uint32_t vertex_count_;
  std::uint32_t degree_;
  std::uint32_t side_;
  std::uint32_t dim_;
  std::vector<VertexId> adjacency_;
};

}  // namespace dlacs
