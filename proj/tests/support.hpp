// Shared fixtures for the unit and property tests.
#pragma once

#include <doctest.h>

#include <algorithm>
#include <memory>
#include <vector>

#include "dlacs/engine.hpp"

namespace dlacs::test {

inline SimConfig make_config(Topology topo, double p) {
  SimConfig cfg;
  cfg.topology = std::make_shared<const Topology>(std::move(topo));
  cfg.p = p;
  return cfg;
}

inline SimState empty_state(VertexId n, std::uint64_t seed = 1) {
  SimState s(seed);
  s.site_index.assign(n, {});
  return s;
}

/// Live clusters partition the surviving origins, every origin is either
/// live or dead, and the site index, live lists and cluster records agree.
inline void check_state_invariants(const SimState& s) {
  std::vector<int> owner(s.origin_count(), 0);
  std::uint64_t live_total = 0;
  for (int sp = 0; sp < 2; ++sp) {
    for (ClusterId id : s.live[sp]) {
      const Cluster& c = s.clusters[id];
      REQUIRE(c.alive);
      CHECK(static_cast<int>(c.species) == sp);
      CHECK(c.size == c.constituents.size());
      CHECK(c.size > 0);
      const auto& here = s.site_index[c.location];
      CHECK(std::find(here.begin(), here.end(), id) != here.end());
      bool has_stream = false;
      for (OriginId o : c.constituents) {
        ++owner[o];
        CHECK(s.origin_species[o] == c.species);
        CHECK_FALSE(s.death_time[o].has_value());
        has_stream = has_stream || o == c.stream;
      }
      CHECK(has_stream);
      CHECK(c.bravery == s.origin_bravery[c.stream]);
      live_total += c.size;
    }
  }
  std::uint64_t indexed = 0;
  for (VertexId v = 0; v < s.site_index.size(); ++v)
    for (ClusterId id : s.site_index[v]) {
      CHECK(s.clusters[id].alive);
      CHECK(s.clusters[id].location == v);
      ++indexed;
    }
  CHECK(indexed == s.live_count(Species::A) + s.live_count(Species::B));
  for (OriginId o = 0; o < owner.size(); ++o) {
    CHECK(owner[o] <= 1);
    CHECK((owner[o] == 1) != s.death_time[o].has_value());
  }
  CHECK(live_total == s.live_constituents());
  CHECK(live_total + s.annihilated_constituents == s.origin_count());
}

}  // namespace dlacs::test
