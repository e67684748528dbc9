#include <doctest.h>

#include <stdexcept>

#include "dlacs/experiments.hpp"
#include "support.hpp"

using namespace dlacs;
using dlacs::test::make_config;

TEST_SUITE("ensembles") {
  TEST_CASE("replica results are stored by index") {
    const auto out = run_replicas<std::size_t>(100, 3, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
    CHECK(run_replicas<int>(0, 4, [](std::size_t) { return 1; }).empty());
  }

  TEST_CASE("a failing replica rethrows") {
    auto bad = [](std::size_t i) -> int {
      if (i == 17) throw std::runtime_error("replica 17");
      return 0;
    };
    CHECK_THROWS_WITH(run_replicas<int>(50, 2, bad), "replica 17");
  }

  TEST_CASE("ensembles do not depend on the thread count") {
    auto cfg = make_config(Topology::cycle(40), 0.6);
    cfg.horizon = 8.0;
    const auto grid = uniform_grid(8.0, 8);
    const Ensemble one = run_root_ensemble(cfg, grid, 40, 99, 1);
    const Ensemble three = run_root_ensemble(cfg, grid, 40, 99, 3);
    for (std::size_t i = 0; i < 40; ++i) {
      CHECK(one.replicas[i].tau == three.replicas[i].tau);
      CHECK(one.replicas[i].W == three.replicas[i].W);
      CHECK(one.replicas[i].W_grid == three.replicas[i].W_grid);
    }
    CHECK(one.replicas[0].grid.size() == grid.size());
  }

  TEST_CASE("unconditional survival counts B starts as dead") {
    auto cfg = make_config(Topology::cycle(20), 0.0);
    cfg.horizon = 1.0;
    const double grid[] = {0.0, 1.0};
    const Ensemble e = run_root_ensemble(cfg, grid, 10, 1, 1);
    const SurvivalCurve c = unconditional_survival(e);
    CHECK(c.survival[0].estimate == 0.0);
  }
}

TEST_SUITE("quiet stopping") {
  TEST_CASE("argument checks") {
    auto cfg = make_config(Topology::cycle(20), 0.5);
    CHECK_THROWS_AS(run_until_quiet(cfg, 0.0, 10.0), std::invalid_argument);
    cfg.mode = Mode::discrete;
    cfg.lambda_B = 0.0;
    CHECK_THROWS_AS(run_until_quiet(cfg, 1.0, 10.0), std::invalid_argument);
  }

  TEST_CASE("no annihilations: stop after one window") {
    auto cfg = make_config(Topology::cycle(20), 1.0);
    bool capped = true;
    const SimState s = run_until_quiet(cfg, 2.0, 100.0, &capped);
    CHECK_FALSE(capped);
    CHECK(s.clock == 2.0);
  }

  TEST_CASE("the cap is reported") {
    auto cfg = make_config(Topology::cycle(200), 0.5);
    bool capped = false;
    const SimState s = run_until_quiet(cfg, 50.0, 3.0, &capped);
    CHECK(capped);
    CHECK(s.clock == 3.0);
  }

  TEST_CASE("stopped runs are quiet") {
    auto cfg = make_config(Topology::cycle(100), 0.7);
    cfg.lambda_B = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      cfg.seed = seed;
      bool capped = true;
      const SimState s = run_until_quiet(cfg, 5.0, 5000.0, &capped);
      const double last = s.annihilation_log.empty() ? 0.0 : s.annihilation_log.back().time;
      if (!capped && s.live_count(Species::A) > 0 && s.live_count(Species::B) > 0) {
        CHECK(s.clock == doctest::Approx(last + 5.0));
      }
    }
  }
}

TEST_SUITE("checks on small inputs") {
  TEST_CASE("survival fraction") {
    auto cfg = make_config(Topology::cycle(10), 1.0);
    CHECK(a_survival_fraction(init_state(cfg)) == 1.0);
    cfg.p = 0.0;
    CHECK(a_survival_fraction(init_state(cfg)) == 0.0);
  }

  TEST_CASE("determinism check") {
    auto cfg = make_config(Topology::torus(6, 2), 0.5);
    cfg.horizon = 10.0;
    CHECK(check_determinism(cfg).pass);
  }

  TEST_CASE("monotonicity check on a short run") {
    MonotonicityConfig m = default_monotonicity_config();
    m.replicas = 50;
    m.jobs = 1;
    m.cfg.horizon = 20.0;
    const auto runs = run_monotonicity(m);
    CHECK(runs.size() == 50);
    CHECK(check_monotonicity(m, runs).pass);
  }

  TEST_CASE("sweep ordering check") {
    SweepConfig cfg;
    SweepPoint lo, hi;
    lo.p = 0.5;
    lo.survival.mean = 0.1;
    hi.p = 0.8;
    hi.survival.mean = 0.6;
    const SweepPoint up[] = {lo, hi};
    CHECK(check_sweep_monotone(cfg, up).pass);
    const SweepPoint down[] = {hi, lo};
    CHECK_FALSE(check_sweep_monotone(cfg, down).pass);
  }

  TEST_CASE("pc bracket check flags") {
    PcConfig cfg = default_pc_config();
    PcResult r;
    r.lo = 0.6;
    r.hi = 0.65;
    CHECK(check_pc_bracket(cfg, r).pass);
    r.bracket_invalid = true;
    CHECK_FALSE(check_pc_bracket(cfg, r).pass);
    r.bracket_invalid = false;
    r.lo = 0.5;
    CHECK_FALSE(check_pc_bracket(cfg, r).pass);
  }
}
