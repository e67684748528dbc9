#include "dlacs/topology.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace dlacs {

Topology::Topology(GraphKind kind, std::uint32_t vertex_count, std::uint32_t degree,
                   std::uint32_t side, std::uint32_t dim)
    : kind_(kind),
      vertex_count_(vertex_count),
      degree_(degree),
      side_(side),
      dim_(dim),
      adjacency_(static_cast<std::size_t>(vertex_count) * degree) {}

Topology Topology::cycle(std::uint32_t n) {
  if (n < 3) throw std::invalid_argument("cycle requires n >= 3");
  Topology t(GraphKind::cycle, n, 2, n, 1);
  for (VertexId v = 0; v < n; ++v) {
    VertexId a = (v + 1) % n;
    VertexId b = (v + n - 1) % n;
    t.adjacency_[2 * v] = std::min(a, b);
    t.adjacency_[2 * v + 1] = std::max(a, b);
  }
  return t;
}

Topology Topology::torus(std::uint32_t side, std::uint32_t dim) {
  if (side < 3) throw std::invalid_argument("torus requires n >= 3");
  if (dim < 1) throw std::invalid_argument("torus requires d >= 1");
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < dim; ++i) {
    count *= side;
    if (count > std::numeric_limits<std::uint32_t>::max() / (2 * dim))
      throw std::invalid_argument("torus too large");
  }
  const auto n = static_cast<std::uint32_t>(count);
  Topology t(GraphKind::torus, n, 2 * dim, side, dim);
  for (VertexId v = 0; v < n; ++v) {
    auto* row = &t.adjacency_[static_cast<std::size_t>(v) * t.degree_];
    std::uint32_t stride = 1;
    for (std::uint32_t i = 0; i < dim; ++i) {
      const std::uint32_t coord = (v / stride) % side;
      const VertexId base = v - coord * stride;
      row[2 * i] = base + ((coord + 1) % side) * stride;
      row[2 * i + 1] = base + ((coord + side - 1) % side) * stride;
      stride *= side;
    }
    std::sort(row, row + t.degree_);
  }
  return t;
}

Topology Topology::complete(std::uint32_t n) {
  if (n < 2) throw std::invalid_argument("complete graph requires n >= 2");
  Topology t(GraphKind::complete, n, n - 1, n, 1);
  for (VertexId v = 0; v < n; ++v) {
    std::uint32_t k = 0;
    for (VertexId u = 0; u < n; ++u)
      if (u != v) t.adjacency_[static_cast<std::size_t>(v) * (n - 1) + k++] = u;
  }
  return t;
}

std::span<const VertexId> Topology::neighbors(VertexId v) const {
  if (v >= vertex_count_) throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
  return {adjacency_.data() + static_cast<std::size_t>(v) * degree_, degree_};
}

bool Topology::adjacent(VertexId u, VertexId v) const {
  const auto row = neighbors(u);
  return std::binary_search(row.begin(), row.end(), v);
}

double Topology::kernel(VertexId u, VertexId v) const {
  return adjacent(u, v) ? 1.0 / degree_ : 0.0;
}

VertexId Topology::translate(VertexId v, std::uint32_t shift) const {
  if (v >= vertex_count_) throw std::out_of_range("vertex out of range");
  switch (kind_) {
    case GraphKind::cycle:
    case GraphKind::complete:
      return static_cast<VertexId>((static_cast<std::uint64_t>(v) + shift) % vertex_count_);
    case GraphKind::torus: {
      const std::uint32_t coord = v % side_;
      return v - coord + (coord + shift) % side_;
    }
  }
  return v;
}

std::string Topology::describe() const {
  switch (kind_) {
    case GraphKind::cycle:
      return "cycle(" + std::to_string(vertex_count_) + ")";
    case GraphKind::torus:
      return "torus(" + std::to_string(side_) + "," + std::to_string(dim_) + ")";
    case GraphKind::complete:
      return "complete(" + std::to_string(vertex_count_) + ")";
  }
  return "?";
}

}  // namespace dlacs
