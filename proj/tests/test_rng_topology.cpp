#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "dlacs/rng.hpp"
#include "dlacs/topology.hpp"

using namespace dlacs;

TEST_SUITE("rng") {
  TEST_CASE("stream seeds are distinct and reproducible") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(stream_seed(42, i));
    CHECK(seen.size() == 1000);
    CHECK(stream_seed(42, 7) == stream_seed(42, 7));
    CHECK(stream_seed(42, 7) != stream_seed(43, 7));
  }

  TEST_CASE("below stays in range and open_uniform avoids the end points") {
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
      CHECK(rng.below(7) < 7u);
      const double u = rng.open_uniform();
      CHECK(u > 0.0);
      CHECK(u < 1.0);
    }
  }

  TEST_CASE("exponential mean") {
    Rng rng(9);
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += rng.exponential(2.0);
    // mean 1/2, stderr 1/(2 sqrt n)
    CHECK(std::abs(sum / n - 0.5) < 4 * 0.5 / std::sqrt(n));
  }

  TEST_CASE("counter streams depend only on their key") {
    CounterStream a(key_seed(1, 2, 3));
    CounterStream b(key_seed(1, 2, 3));
    CounterStream c(key_seed(1, 2, 4));
    const auto x = a.bits();
    CHECK(x == b.bits());
    CHECK(x != c.bits());
  }
}

TEST_SUITE("topology") {
  TEST_CASE("neighbour lists") {
    const auto c5 = Topology::cycle(5);
    const auto n0 = c5.neighbors(0);
    CHECK(std::vector<VertexId>(n0.begin(), n0.end()) == std::vector<VertexId>{1, 4});
    const auto t42 = Topology::torus(4, 2);
    const auto m0 = t42.neighbors(0);
    CHECK(std::vector<VertexId>(m0.begin(), m0.end()) == std::vector<VertexId>{1, 3, 4, 12});
    const auto k3 = Topology::complete(3);
    const auto k2 = k3.neighbors(2);
    CHECK(std::vector<VertexId>(k2.begin(), k2.end()) == std::vector<VertexId>{0, 1});
  }

  TEST_CASE("size limits") {
    CHECK_THROWS_AS(Topology::cycle(2), std::invalid_argument);
    CHECK_THROWS_AS(Topology::torus(2, 2), std::invalid_argument);
    CHECK_THROWS_AS(Topology::torus(3, 0), std::invalid_argument);
    CHECK_THROWS_AS(Topology::complete(1), std::invalid_argument);
    CHECK_NOTHROW(Topology::cycle(3));
    CHECK_NOTHROW(Topology::complete(2));
    CHECK_THROWS_AS(Topology::cycle(5).neighbors(5), std::out_of_range);
  }

  TEST_CASE("regular, symmetric, loop-free and connected") {
    for (const auto& t : {Topology::cycle(7), Topology::torus(5, 3), Topology::torus(3, 1), Topology::complete(6)}) {
      CAPTURE(t.describe());
      std::vector<bool> seen(t.vertex_count(), false);
      std::vector<VertexId> stack{0};
      seen[0] = true;
      while (!stack.empty()) {
        const VertexId v = stack.back();
        stack.pop_back();
        const auto nb = t.neighbors(v);
        CHECK(nb.size() == t.degree());
        for (VertexId u : nb) {
          CHECK(u != v);
          const auto back = t.neighbors(u);
          CHECK(std::find(back.begin(), back.end(), v) != back.end());
          if (!seen[u]) {
            seen[u] = true;
            stack.push_back(u);
          }
        }
      }
      CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
    }
  }

  TEST_CASE("complete(2) always jumps to the other vertex") {
    const auto k2 = Topology::complete(2);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) CHECK(k2.sample_neighbor(0, rng) == 1u);
    CHECK(k2.kernel(0, 1) == 1.0);
    CHECK(k2.kernel(0, 0) == 0.0);
  }

  TEST_CASE("sample_neighbor is uniform within 4 sigma") {
    for (const auto& t : {Topology::cycle(5), Topology::torus(4, 2)}) {
      Rng rng(11);
      const int n = 100000;
      std::vector<int> count(t.vertex_count(), 0);
      for (int i = 0; i < n; ++i) ++count[t.sample_neighbor(0, rng)];
      const double p = 1.0 / t.degree();
      const double sigma = std::sqrt(n * p * (1 - p));
      for (VertexId u : t.neighbors(0)) CHECK(std::abs(count[u] - n * p) < 4 * sigma);
      int total = 0;
      for (VertexId u : t.neighbors(0)) total += count[u];
      CHECK(total == n);
    }
  }

  TEST_CASE("translation is an automorphism") {
    for (const auto& t : {Topology::cycle(9), Topology::torus(4, 3)}) {
      for (VertexId u = 0; u < t.vertex_count(); ++u)
        for (VertexId v : t.neighbors(u)) CHECK(t.adjacent(t.translate(u, 1), t.translate(v, 1)));
    }
  }
}
