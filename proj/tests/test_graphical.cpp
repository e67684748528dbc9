#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "dlacs/dyadic.hpp"
#include "dlacs/graphical.hpp"
#include "dlacs/oracle.hpp"

using namespace dlacs;

namespace {

std::shared_ptr<const Topology> ring(VertexId n) { return std::make_shared<const Topology>(Topology::cycle(n)); }

}  // namespace

TEST_SUITE("dyadic") {
  TEST_CASE("lowest terms") {
    CHECK(Dyadic(2, 2) == Dyadic(1, 1));
    CHECK(Dyadic(0, 5) == Dyadic(0, 0));
    CHECK(Dyadic(3, 3).to_string() == "3/2^3");
    CHECK(Dyadic(6, 1).to_double() == 3.0);
    CHECK_THROWS_AS(Dyadic(1, 63), std::overflow_error);
    CHECK_NOTHROW(Dyadic(2, 63));
  }

  TEST_CASE("gate combination") {
    CHECK(gate_combine(Dyadic::one(), Dyadic::one()) == Dyadic(1, 1));
    CHECK(gate_combine(Dyadic(1, 1), Dyadic(1, 1)) == Dyadic(5, 3));
    CHECK(gate_combine(Dyadic(0, 0), Dyadic(3, 2)) == Dyadic(3, 2));
  }
}

TEST_SUITE("gates") {
  TEST_CASE("gate semantics with true leaves") {
    const GateTree l = GateTree::leaf();
    CHECK(evaluate_gate_tree(l));
    CHECK(evaluate_gate_tree(GateTree::join(Mark::OR, l, l)));
    CHECK_FALSE(evaluate_gate_tree(GateTree::join(Mark::XOR, l, l)));
    CHECK_FALSE(evaluate_gate_tree(GateTree::join(Mark::XOR, GateTree::join(Mark::OR, l, l), l)));
    CHECK(evaluate_gate_tree(GateTree::join(Mark::XOR, GateTree::join(Mark::XOR, l, l), l)));
    CHECK(evaluate_gate_tree(GateTree::join(Mark::OR, GateTree::join(Mark::XOR, l, l), l)));
  }

  TEST_CASE("caterpillar goodness sequence") {
    CHECK(goodness_probability_exact(GateTree::leaf()) == Dyadic::one());
    CHECK(goodness_probability_exact(GateTree::caterpillar_shape(2)) == Dyadic(1, 1));
    CHECK(goodness_probability_exact(GateTree::caterpillar_shape(3)) == Dyadic(3, 2));
    CHECK(goodness_probability_exact(GateTree::caterpillar_shape(4)) == Dyadic(5, 3));
    CHECK(goodness_probability_exact(GateTree::caterpillar_shape(5)) == Dyadic(11, 4));
    const GateTree pair = GateTree::join(Mark::OR, GateTree::leaf(), GateTree::leaf());
    CHECK(goodness_probability_exact(GateTree::join(Mark::OR, pair, pair)) == Dyadic(5, 3));
  }

  TEST_CASE("long caterpillars approach two thirds") {
    CHECK(std::abs(goodness_probability(GateTree::caterpillar_shape(60)) - 2.0 / 3.0) < 1e-12);
    CHECK_THROWS_AS(goodness_probability_exact(GateTree::caterpillar_shape(70)), std::overflow_error);
  }

  TEST_CASE("shape accounting") {
    Rng rng(3);
    for (std::uint32_t leaves = 1; leaves <= 30; ++leaves) {
      const GateTree t = GateTree::random_shape(leaves, rng);
      CHECK(t.leaf_count() == leaves);
      CHECK(t.internal_postorder().size() == leaves - 1);
      CHECK(t.nodes().size() == 2 * leaves - 1);
    }
    CHECK_THROWS_AS(GateTree::random_shape(0, rng), std::invalid_argument);
  }

  TEST_CASE("caterpillar marks run from the root down") {
    const Mark marks[] = {Mark::XOR, Mark::OR};
    const GateTree t = GateTree::caterpillar(marks);
    CHECK(t.leaf_count() == 3);
    CHECK(t.node(0).mark == Mark::XOR);
    CHECK_FALSE(evaluate_gate_tree(t));
  }

  TEST_CASE("with_marks relabels in post-order") {
    const GateTree shape = GateTree::caterpillar_shape(3);
    const Mark inner_xor[] = {Mark::XOR, Mark::XOR};
    CHECK(evaluate_gate_tree(shape.with_marks(inner_xor)));
    const Mark one[] = {Mark::XOR};
    CHECK_THROWS_AS(shape.with_marks(one), std::invalid_argument);
  }

  TEST_CASE("enumeration agrees on small shapes") {
    Rng rng(9);
    for (std::uint32_t leaves = 1; leaves <= 12; ++leaves) {
      const GateTree t = GateTree::random_shape(leaves, rng);
      CHECK(oracle::gate_tree_enumerate(t) == goodness_probability_exact(t));
    }
  }

  TEST_CASE("convergence check arithmetic") {
    std::vector<GoodnessSample> samples;
    for (int i = 0; i < 300; ++i) samples.push_back({10, i % 3 != 0});
    samples.push_back({1, false});
    const DeviationReport r = goodness_convergence_check(4, samples);
    CHECK(r.n == 300);
    CHECK(r.sufficient);
    CHECK(r.pass);
    CHECK(r.deviation < 1e-12);
    CHECK(goodness_convergence_check(20, samples).sufficient == false);
  }
}

TEST_SUITE("arrows") {
  TEST_CASE("explicit list validation") {
    auto topo = ring(5);
    CHECK_THROWS_AS(ArrowStream::explicit_list(topo, 2.0, {{1.0, 0, 2, Mark::OR}}), std::invalid_argument);
    CHECK_THROWS_AS(ArrowStream::explicit_list(topo, 2.0, {{3.0, 0, 1, Mark::OR}}), std::invalid_argument);
    CHECK_THROWS_AS(ArrowStream::explicit_list(topo, 2.0, {{0.0, 0, 1, Mark::OR}}), std::invalid_argument);
    CHECK_THROWS_AS(ArrowStream::explicit_list(topo, 2.0, {{1.0, 0, 1, Mark::OR}, {1.0, 0, 4, Mark::OR}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ArrowStream::seeded(topo, -1.0, 1), std::invalid_argument);
  }

  TEST_CASE("next_from is strict in time") {
    auto arrows = ArrowStream::explicit_list(ring(5), 3.0, {{1.0, 0, 1, Mark::OR}, {2.0, 0, 4, Mark::XOR}});
    CHECK(arrows.next_from(0, 0.0)->time == 1.0);
    CHECK(arrows.next_from(0, 1.0)->time == 2.0);
    CHECK(arrows.next_from(0, 1.0)->mark == Mark::XOR);
    CHECK_FALSE(arrows.next_from(0, 2.0).has_value());
    CHECK_FALSE(arrows.next_from(3, 0.0).has_value());
  }

  TEST_CASE("seeded arrows: count, marks and targets") {
    const auto arrows = generate_arrows(ring(100), 10.0, 77);
    const auto all = arrows.materialize_all();
    const double mean = 1000.0;
    CHECK(std::abs(static_cast<double>(all.size()) - mean) <= 4 * std::sqrt(mean));
    std::size_t xors = 0, forward = 0;
    double prev = 0.0;
    for (const Arrow& a : all) {
      CHECK(a.time > 0.0);
      CHECK(a.time <= 10.0);
      CHECK(a.time >= prev);
      prev = a.time;
      CHECK(arrows.topology().adjacent(a.from, a.to));
      xors += a.mark == Mark::XOR;
      forward += a.to == (a.from + 1) % 100;
    }
    const double n = static_cast<double>(all.size());
    CHECK(std::abs(xors - n / 2) <= 4 * std::sqrt(n / 4));
    CHECK(std::abs(forward - n / 2) <= 4 * std::sqrt(n / 4));
  }

  TEST_CASE("seeded arrows do not depend on query order") {
    const auto a = generate_arrows(ring(50), 20.0, 5);
    const auto b = generate_arrows(ring(50), 20.0, 5);
    CHECK(a.materialize_all() == b.materialize_all());
    const auto late = b.next_from(7, 12.5);
    const auto early = a.next_from(7, 0.0);
    CHECK(b.next_from(7, 0.0) == early);
    CHECK(a.next_from(7, 12.5) == late);
    CHECK(generate_arrows(ring(50), 20.0, 6).materialize_all() != a.materialize_all());
  }

  TEST_CASE("a shorter horizon is a prefix") {
    const auto long_run = generate_arrows(ring(30), 20.0, 8).materialize_all();
    const auto short_run = generate_arrows(ring(30), 5.0, 8).materialize_all();
    std::vector<Arrow> prefix;
    for (const Arrow& a : long_run)
      if (a.time <= 5.0) prefix.push_back(a);
    CHECK(prefix == short_run);
  }
}

TEST_SUITE("coupled") {
  TEST_CASE("no arrows: everyone stays home") {
    const auto arrows = ArrowStream::explicit_list(ring(4), 2.0, {});
    const double times[] = {0.0, 2.0};
    const auto out = run_coupled(arrows, times, true);
    REQUIRE(out.size() == 2);
    for (const auto& o : out) {
      CHECK(o.crw_occupied);
      CHECK(o.dlacs_occupied);
      CHECK(o.leaf_count == 1);
      REQUIRE(o.tree.has_value());
      CHECK(o.tree->leaf_count() == 1);
    }
  }

  TEST_CASE("OR and XOR merges at the root") {
    const double times[] = {0.5, 2.0};
    for (Mark m : {Mark::OR, Mark::XOR}) {
      const auto arrows = ArrowStream::explicit_list(ring(4), 2.0, {{1.0, 1, 0, m}});
      const auto out = run_coupled(arrows, times, true);
      CHECK(out[0].leaf_count == 1);
      CHECK(out[1].crw_occupied);
      CHECK(out[1].leaf_count == 2);
      CHECK(out[1].dlacs_occupied == (m == Mark::OR));
      CHECK(out[1].tree->node(0).mark == m);
    }
  }

  TEST_CASE("the root particle leaves") {
    const auto arrows = ArrowStream::explicit_list(ring(4), 2.0, {{1.0, 0, 1, Mark::OR}});
    const double times[] = {2.0};
    const auto out = run_coupled(arrows, times);
    CHECK_FALSE(out[0].crw_occupied);
    CHECK_FALSE(out[0].dlacs_occupied);
    CHECK(out[0].leaf_count == 0);
    CHECK_THROWS_AS(extract_gate_tree(arrows, 0, 2.0), std::invalid_argument);
    CHECK(extract_gate_tree(arrows, 1, 2.0).leaf_count() == 2);
  }

  TEST_CASE("an arrow from a vacant site does nothing") {
    // 0 -> 1 empties 0 at t = 1, so the arrow 0 -> 3 at t = 1.5 carries no one.
    const auto arrows =
        ArrowStream::explicit_list(ring(4), 2.0, {{1.0, 0, 1, Mark::XOR}, {1.5, 0, 3, Mark::OR}});
    const double times[] = {2.0};
    const auto snaps = run_crw(arrows, times);
    REQUIRE(snaps.size() == 1);
    CHECK(snaps[0].occupied == std::vector<std::uint8_t>{0, 1, 1, 1});
    CHECK(snaps[0].leaves == std::vector<std::uint32_t>{0, 2, 1, 1});
    CHECK(snaps[0].present == std::vector<std::uint8_t>{0, 0, 1, 1});
  }

  TEST_CASE("time arguments are validated") {
    const auto arrows = generate_arrows(ring(10), 5.0, 1);
    const double unsorted[] = {2.0, 1.0};
    CHECK_THROWS_AS(run_coupled(arrows, unsorted), std::invalid_argument);
    const double beyond[] = {6.0};
    CHECK_THROWS_AS(run_coupled(arrows, beyond), std::invalid_argument);
  }

  TEST_CASE("leaf counts conserve the particles") {
    const auto arrows = generate_arrows(ring(64), 30.0, 12);
    const double times[] = {0.0, 7.5, 30.0};
    for (const auto& snap : run_crw(arrows, times)) {
      std::uint64_t total = 0;
      for (VertexId v = 0; v < 64; ++v) {
        total += snap.leaves[v];
        CHECK((snap.leaves[v] > 0) == (snap.occupied[v] != 0));
        if (snap.present[v]) CHECK(snap.occupied[v]);
      }
      CHECK(total == 64);
    }
  }
}
