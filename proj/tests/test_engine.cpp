#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dlacs/engine.hpp"
#include "dlacs/tracer.hpp"
#include "support.hpp"

using namespace dlacs;
using dlacs::test::check_state_invariants;
using dlacs::test::empty_state;
using dlacs::test::make_config;

TEST_SUITE("engine") {
  TEST_CASE("degenerate initial densities") {
    auto all_a = init_state(make_config(Topology::cycle(50), 1.0));
    CHECK(all_a.live_count(Species::A) == 50);
    CHECK(all_a.live_count(Species::B) == 0);
    auto all_b = init_state(make_config(Topology::cycle(50), 0.0));
    CHECK(all_b.live_count(Species::B) == 50);
  }

  TEST_CASE("initial A fraction at p = 1/2 on cycle(2000)") {
    // 3.2 sigma of the binomial, so failure probability is below 0.2%.
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto cfg = make_config(Topology::cycle(2000), 0.5);
      cfg.seed = seed;
      const double frac = init_state(cfg).live_count(Species::A) / 2000.0;
      CHECK(frac >= 0.47);
      CHECK(frac <= 0.53);
    }
  }

  TEST_CASE("validate names the field") {
    auto cfg = make_config(Topology::cycle(5), 0.5);
    cfg.p = 1.5;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("p:"), std::invalid_argument);
    cfg.p = 0.5;
    cfg.lambda_A = 0.0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("lambda_A"), std::invalid_argument);
    cfg.lambda_A = 1.0;
    cfg.horizon = -1.0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("horizon"), std::invalid_argument);
    cfg.horizon = 1.0;
    cfg.mode = Mode::discrete;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.lambda_B = 0.0;
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("pair classification") {
    auto cfg = make_config(Topology::cycle(5), 0.5);
    auto cl = [](Species s, std::uint32_t size, double brav) {
      Cluster c;
      c.species = s;
      c.size = size;
      c.bravery = brav;
      c.alive = true;
      for (std::uint32_t i = 0; i < size; ++i) c.constituents.push_back(static_cast<OriginId>(100 * size + i));
      return c;
    };
    cfg.cap_M = Cap::at(3);
    const auto merged = resolve_pair(cl(Species::A, 2, 0.3), cl(Species::A, 3, 0.7), cfg);
    CHECK(merged.kind == PairKind::coalesce);
    REQUIRE(merged.merged.has_value());
    CHECK(merged.merged->size == 5);
    CHECK(merged.merged->bravery == 0.7);
    CHECK(merged.merged->constituents.size() == 5);
    cfg.cap_M = Cap::at(2);
    CHECK(classify_pair(cl(Species::A, 2, 0.3), cl(Species::A, 3, 0.7), cfg) == PairKind::no_interaction);
    CHECK(classify_pair(cl(Species::A, 1, 0.3), cl(Species::B, 4, 0.7), cfg) == PairKind::annihilate);
    cfg.cap_N = Cap::at(0);
    CHECK(classify_pair(cl(Species::B, 1, 0.3), cl(Species::B, 1, 0.7), cfg) == PairKind::no_interaction);
  }

  TEST_CASE("bravest reactive pair first") {
    auto cfg = make_config(Topology::cycle(5), 0.5);
    SimState s = empty_state(5);
    add_particle(s, Species::A, 0.9, 0);
    add_particle(s, Species::B, 0.5, 0);
    const ClusterId last = add_particle(s, Species::B, 0.2, 0);
    resolve_site(s, 0, cfg);
    REQUIRE(s.site_index[0].size() == 1);
    CHECK(s.site_index[0][0] == last);
    CHECK(s.clusters[last].size == 1);
    CHECK(s.live_count(Species::A) == 0);
    REQUIRE(s.annihilation_log.size() == 1);
    CHECK(s.annihilation_log[0].b_cluster.constituents == std::vector<OriginId>{1});
    check_state_invariants(s);
  }

  TEST_CASE("coalescence keeps the braver input's bravery and stream") {
    auto cfg = make_config(Topology::cycle(5), 0.5);
    SimState s = empty_state(5);
    add_particle(s, Species::A, 0.5, 0);
    add_particle(s, Species::A, 0.9, 0);
    resolve_site(s, 0, cfg);
    REQUIRE(s.site_index[0].size() == 1);
    const Cluster& c = s.clusters[s.site_index[0][0]];
    CHECK(c.size == 2);
    CHECK(c.bravery == 0.9);
    CHECK(c.stream == 1u);
    check_state_invariants(s);
  }

  TEST_CASE("a lone cluster is unchanged by resolution") {
    auto cfg = make_config(Topology::cycle(5), 0.5);
    cfg.cap_M = Cap::at(0);
    SimState s = empty_state(5);
    const ClusterId id = add_particle(s, Species::A, 0.4, 3);
    resolve_site(s, 3, cfg);
    CHECK(s.site_index[3] == std::vector<ClusterId>{id});
    CHECK(s.clusters[id].alive);
  }

  TEST_CASE("blocked encounters are reported") {
    auto cfg = make_config(Topology::cycle(5), 0.5);
    cfg.cap_M = Cap::at(1);
    SimState s = empty_state(5);
    const ClusterId a = add_particle(s, Species::A, 0.4, 0);
    const ClusterId b = add_particle(s, Species::A, 0.6, 0);
    resolve_site(s, 0, cfg);
    const ClusterId c = add_particle(s, Species::A, 0.8, 1);
    move_cluster(s, c, 0, cfg);
    CHECK(s.site_index[0].size() == 2);
    const bool blocked = std::any_of(s.last_reactions.begin(), s.last_reactions.end(),
                                     [](const Reaction& r) { return r.kind == Reaction::Kind::blocked; });
    CHECK(blocked);
    CHECK_FALSE(s.clusters[a].alive);
    CHECK_FALSE(s.clusters[b].alive);
  }

  TEST_CASE("next_event with a single A clock") {
    auto cfg = make_config(Topology::cycle(5), 1.0);
    SimState s = empty_state(5);
    const ClusterId id = add_particle(s, Species::A, 0.5, 0);
    double sum = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const auto ev = next_event(s, cfg);
      REQUIRE(ev.has_value());
      CHECK(ev->mover == id);
      sum += ev->dt;
    }
    CHECK(std::abs(sum / n - 1.0) < 4.0 / std::sqrt(n));
  }

  TEST_CASE("mover species follows the rate ratio") {
    auto cfg = make_config(Topology::cycle(8), 0.5);
    cfg.lambda_A = 2.0;
    cfg.lambda_B = 1.0;
    SimState s = empty_state(8);
    add_particle(s, Species::A, 0.1, 0);
    add_particle(s, Species::A, 0.2, 2);
    add_particle(s, Species::B, 0.3, 4);
    add_particle(s, Species::B, 0.4, 6);
    const int n = 30000;
    int a = 0;
    double dt = 0;
    for (int i = 0; i < n; ++i) {
      const auto ev = next_event(s, cfg);
      a += s.clusters[ev->mover].species == Species::A;
      dt += ev->dt;
    }
    const double p = 2.0 / 3.0;
    CHECK(std::abs(a - n * p) < 4 * std::sqrt(n * p * (1 - p)));
    CHECK(std::abs(dt / n - 1.0 / 6.0) < 4 * (1.0 / 6.0) / std::sqrt(n));
  }

  TEST_CASE("only frozen B clusters left means absorption") {
    auto cfg = make_config(Topology::cycle(5), 0.0);
    cfg.lambda_B = 0.0;
    SimState s = init_state(cfg);
    CHECK_FALSE(next_event(s, cfg).has_value());
    const SimState out = run(cfg);
    CHECK(out.events == 0);
    CHECK(out.live_count(Species::B) == 5);
  }

  TEST_CASE("horizon 0 returns the initial state") {
    auto cfg = make_config(Topology::cycle(30), 0.5);
    cfg.horizon = 0.0;
    const SimState a = run(cfg);
    const SimState b = init_state(cfg);
    CHECK(a.events == 0);
    CHECK(a.origin_species == b.origin_species);
    CHECK(a.origin_bravery == b.origin_bravery);
  }

  TEST_CASE("single walker moves to a neighbour") {
    auto cfg = make_config(Topology::cycle(5), 1.0);
    SimState s = empty_state(5);
    const ClusterId id = add_particle(s, Species::A, 0.5, 0);
    const VertexId to = cfg.topology->sample_neighbor(0, s.rng);
    move_cluster(s, id, to, cfg);
    CHECK((s.clusters[id].location == 1u || s.clusters[id].location == 4u));
  }

  TEST_CASE("p = 1 is a coalescing walk") {
    auto cfg = make_config(Topology::cycle(40), 1.0);
    cfg.horizon = 30.0;
    struct Count : Observer {
      std::size_t last = 40;
      bool increased = false;
      void on_event(const SimState& s, const EventInfo&) override {
        increased = increased || s.live_count(Species::A) > last;
        last = s.live_count(Species::A);
      }
    } count;
    Observer* obs[] = {&count};
    const SimState s = run(cfg, obs);
    CHECK(s.annihilation_log.empty());
    CHECK_FALSE(count.increased);
    CHECK(s.live_count(Species::A) < 40);
  }

  TEST_CASE("discrete swaps do not interact") {
    auto cfg = make_config(Topology::cycle(4), 1.0);
    cfg.mode = Mode::discrete;
    cfg.lambda_B = 0.0;
    bool saw_swap = false;
    for (std::uint64_t seed = 1; seed < 200 && !saw_swap; ++seed) {
      SimState s = empty_state(4, seed);
      const ClusterId x = add_particle(s, Species::A, 0.3, 0);
      const ClusterId y = add_particle(s, Species::A, 0.6, 1);
      discrete_step(s, cfg);
      if (s.clusters[x].location == 1 && s.clusters[y].location == 0) {
        saw_swap = true;
        CHECK(s.clusters[x].alive);
        CHECK(s.clusters[y].alive);
        CHECK(s.live_count(Species::A) == 2);
      }
    }
    CHECK(saw_swap);
  }

  TEST_CASE("discrete co-occupancy annihilates") {
    auto cfg = make_config(Topology::cycle(6), 0.5);
    cfg.mode = Mode::discrete;
    cfg.lambda_B = 0.0;
    bool saw = false;
    for (std::uint64_t seed = 1; seed < 100 && !saw; ++seed) {
      SimState s = empty_state(6, seed);
      add_particle(s, Species::A, 0.3, 0);
      add_particle(s, Species::B, 0.6, 1);
      discrete_step(s, cfg);
      if (!s.annihilation_log.empty()) {
        saw = true;
        CHECK(s.annihilation_log[0].location == 1u);
        CHECK(s.live_count(Species::A) + s.live_count(Species::B) == 0);
      }
    }
    CHECK(saw);
  }

  TEST_CASE("state invariants after every event, with caps") {
    for (Cap m : {Cap::unlimited(), Cap::at(1), Cap::at(2)}) {
      auto cfg = make_config(Topology::torus(5, 2), 0.55);
      cfg.cap_M = m;
      cfg.cap_N = Cap::at(1);
      cfg.horizon = 15.0;
      cfg.record_merges = true;
      struct Inv : Observer {
        int events = 0;
        void on_event(const SimState& s, const EventInfo&) override {
          ++events;
          check_state_invariants(s);
        }
      } inv;
      Observer* obs[] = {&inv};
      const SimState s = run(cfg, obs);
      CHECK(inv.events > 0);
      for (const auto& mr : s.merge_log) {
        const Cap cap = cfg.cap(mr.species);
        CHECK(cap.admits(std::max(mr.first_size, mr.second_size)));
      }
      for (const auto& rec : s.annihilation_log) {
        CHECK(rec.a_cluster.size == rec.a_cluster.constituents.size());
        CHECK(rec.b_cluster.size == rec.b_cluster.constituents.size());
        for (OriginId o : rec.a_cluster.constituents) CHECK(s.origin_species[o] == Species::A);
        for (OriginId o : rec.b_cluster.constituents) CHECK(s.origin_species[o] == Species::B);
      }
    }
  }

  TEST_CASE("partner sizes follow the annihilation records") {
    auto cfg = make_config(Topology::cycle(60), 0.5);
    cfg.horizon = 40.0;
    const SimState s = run(cfg);
    REQUIRE_FALSE(s.annihilation_log.empty());
    for (const auto& rec : s.annihilation_log) {
      for (OriginId o : rec.a_cluster.constituents) {
        CHECK(s.partner_size[o] == rec.b_cluster.size);
        CHECK(s.death_time[o] == rec.time);
      }
      for (OriginId o : rec.b_cluster.constituents) CHECK(s.partner_size[o] == rec.a_cluster.size);
    }
  }

  TEST_CASE("a_lifespan conventions") {
    auto cfg = make_config(Topology::cycle(20), 0.5);
    cfg.horizon = 5.0;
    for (std::uint64_t seed = 1; seed < 30; ++seed) {
      cfg.seed = seed;
      const SimState s = run(cfg);
      const auto tau = a_lifespan(s, kRoot);
      if (s.origin_species[kRoot] == Species::B) {
        CHECK(tau == std::optional<double>(0.0));
      } else {
        CHECK(tau == s.death_time[kRoot]);
      }
    }
  }

  TEST_CASE("same config, same trajectory") {
    auto cfg = make_config(Topology::cycle(80), 0.5);
    cfg.horizon = 20.0;
    cfg.seed = 1234;
    const SimState a = run(cfg);
    const SimState b = run(cfg);
    REQUIRE(a.annihilation_log.size() == b.annihilation_log.size());
    for (std::size_t i = 0; i < a.annihilation_log.size(); ++i) {
      CHECK(a.annihilation_log[i].time == b.annihilation_log[i].time);
      CHECK(a.annihilation_log[i].a_cluster.constituents == b.annihilation_log[i].a_cluster.constituents);
    }
    CHECK(a.events == b.events);
  }
}

TEST_SUITE("tracer") {
  TEST_CASE("argument checks") {
    auto cfg = make_config(Topology::cycle(10), 0.5);
    CHECK_THROWS_AS(run_with_tracer(cfg, 10), std::out_of_range);
    cfg.mode = Mode::discrete;
    cfg.lambda_B = 0.0;
    CHECK_THROWS_AS(run_with_tracer(cfg, 1), std::invalid_argument);
  }

  TEST_CASE("root B start gives zero lifespans") {
    auto cfg = make_config(Topology::cycle(10), 0.0);
    const TracerRun r = run_with_tracer(cfg, 1);
    CHECK(r.tau == std::optional<double>(0.0));
    CHECK(r.tau_plus == std::optional<double>(0.0));
  }

  TEST_CASE("lifespan order with nullopt as infinity") {
    CHECK(lifespan_le(1.0, 2.0));
    CHECK(lifespan_le(1.0, std::nullopt));
    CHECK(lifespan_le(std::nullopt, std::nullopt));
    CHECK_FALSE(lifespan_le(std::nullopt, 3.0));
    CHECK_FALSE(lifespan_le(2.0, 1.0));
  }

  TEST_CASE("uncapped runs: monotone, consistent, and untouched roots agree") {
    auto cfg = make_config(Topology::cycle(30), 0.5);
    cfg.horizon = 40.0;
    int untouched = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
      cfg.seed = stream_seed(77, i);
      const TracerRun r = run_with_tracer(cfg, static_cast<VertexId>(1 + i % 29));
      CAPTURE(i);
      CHECK(lifespan_le(r.tau, r.tau_plus));
      CHECK(r.tracer_consistent);
      if (!r.root_touched) {
        ++untouched;
        CHECK(r.tau == r.tau_plus);
      }
    }
    CHECK(untouched > 0);
  }

  TEST_CASE("with p = 1 the tracer only ever merges") {
    auto cfg = make_config(Topology::cycle(20), 1.0);
    cfg.horizon = 30.0;
    const TracerRun r = run_with_tracer(cfg, 5);
    CHECK(r.tau == std::nullopt);
    CHECK(r.tau_plus == std::nullopt);
    CHECK(r.tracer.status != TracerStatus::dead);
  }
}
