#include "dlacs/oracle_checks.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "dlacs/oracle.hpp"

namespace dlacs::oracle {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// Two-sample comparison of one bin: |f1 - f2| <= z sqrt(se1^2 + se2^2).
bool bins_agree(std::uint64_t k1, std::uint64_t n1, std::uint64_t k2, std::uint64_t n2, double z, double* score) {
  const double f1 = static_cast<double>(k1) / static_cast<double>(n1);
  const double f2 = static_cast<double>(k2) / static_cast<double>(n2);
  const double var = f1 * (1 - f1) / static_cast<double>(n1) + f2 * (1 - f2) / static_cast<double>(n2);
  const double diff = std::abs(f1 - f2);
  *score = var > 0 ? diff / std::sqrt(var) : (diff == 0 ? 0.0 : INFINITY);
  return *score <= z;
}

}  // namespace

CheckReport check_gate_exactness(const GateExactnessConfig& cfg) {
  CheckReport rep;
  rep.name = "gate_exactness";
  rep.rule = "dyadic recursion equals exhaustive marking enumeration exactly on every shape";
  rep.pass = true;
  auto compare = [&](const GateTree& t, const std::string& label) {
    const Dyadic rec = goodness_probability_exact(t);
    const Dyadic enu = gate_tree_enumerate(t);
    if (!(rec == enu)) {
      rep.pass = false;
      rep.notes.push_back(label + ": recursion " + rec.to_string() + " vs enumeration " + enu.to_string());
    }
    return rec;
  };
  const GateTree l = GateTree::leaf();
  const GateTree two = GateTree::join(Mark::OR, l, l);
  const Dyadic q2 = compare(two, "two leaves");
  const Dyadic q3 = compare(GateTree::caterpillar_shape(3), "caterpillar(3)");
  const Dyadic q4 = compare(GateTree::join(Mark::OR, two, two), "balanced(4)");
  rep.add("q2", q2.to_double());
  rep.add("q3", q3.to_double());
  rep.add("q4_balanced", q4.to_double());
  if (!(q2 == Dyadic(1, 1))) rep.notes.push_back("q2 != 1/2");
  if (!(q3 == Dyadic(3, 2))) rep.notes.push_back("q3 != 3/4");
  if (!(q4 == Dyadic(5, 3))) rep.notes.push_back("balanced q4 != 5/8");
  rep.pass = rep.pass && q2 == Dyadic(1, 1) && q3 == Dyadic(3, 2) && q4 == Dyadic(5, 3);

  Rng rng(cfg.seed);
  std::uint32_t largest = 0;
  for (std::uint32_t i = 0; i < cfg.shapes; ++i) {
    const auto leaves = static_cast<std::uint32_t>(1 + rng.below(cfg.max_leaves));
    largest = std::max(largest, leaves);
    compare(GateTree::random_shape(leaves, rng), "random shape " + std::to_string(i) + " (" + std::to_string(leaves) + " leaves)");
  }
  rep.replicas = cfg.shapes + 3;
  rep.add("shapes", cfg.shapes + 3.0);
  rep.add("largest_leaf_count", largest);
  rep.add("mismatches", static_cast<double>(rep.notes.size()));
  rep.tolerance("exact", 0);
  return rep;
}

CheckReport check_engine_vs_naive(const NaiveComparisonConfig& cfg) {
  CheckReport rep;
  rep.name = "engine_vs_naive";
  rep.rule = "per-bin frequencies of root state and final cluster count agree within 4 sigma";
  rep.replicas = 2 * cfg.replicas;
  SimConfig sc;
  sc.topology = std::make_shared<const Topology>(Topology::cycle(cfg.n));
  sc.p = cfg.p;
  sc.horizon = cfg.horizon;

  struct Pair {
    NaiveResult engine;
    NaiveResult naive;
  };
  const auto runs = run_replicas<Pair>(cfg.replicas, cfg.jobs, [&](std::size_t i) {
    SimConfig c = sc;
    c.seed = stream_seed(cfg.seed, i);
    Pair pr;
    pr.engine = engine_summary(run(c));
    c.seed = stream_seed(cfg.seed ^ 0x5eedULL, i);
    pr.naive = naive_simulate(c);
    return pr;
  });
  std::array<std::uint64_t, 3> root_e{}, root_n{};
  std::vector<std::uint64_t> count_e(cfg.n + 1), count_n(cfg.n + 1);
  for (const auto& r : runs) {
    ++root_e[static_cast<std::size_t>(r.engine.root_state)];
    ++root_n[static_cast<std::size_t>(r.naive.root_state)];
    ++count_e[r.engine.cluster_count()];
    ++count_n[r.naive.cluster_count()];
  }
  rep.pass = true;
  double worst = 0.0;
  static constexpr const char* kRootNames[3] = {"vacant", "A", "B"};
  auto bin = [&](const std::string& label, std::uint64_t ke, std::uint64_t kn) {
    double z = 0;
    const bool ok = bins_agree(ke, cfg.replicas, kn, cfg.replicas, 4.0, &z);
    rep.add(label + ".engine", static_cast<double>(ke) / cfg.replicas);
    rep.add(label + ".naive", static_cast<double>(kn) / cfg.replicas);
    worst = std::max(worst, z);
    if (!ok) rep.notes.push_back(label + " differs by " + fmt(z) + " sigma");
    rep.pass = rep.pass && ok;
  };
  for (std::size_t k = 0; k < 3; ++k) bin(std::string("root=") + kRootNames[k], root_e[k], root_n[k]);
  for (std::size_t k = 0; k <= cfg.n; ++k) bin("clusters=" + std::to_string(k), count_e[k], count_n[k]);
  rep.add("max_z", worst);
  rep.tolerance("sigma_multiplier", 4.0);
  return rep;
}

CheckReport check_k2_exact(const K2ComparisonConfig& cfg) {
  CheckReport rep;
  rep.name = "k2_exact";
  rep.rule = "engine frequencies on complete(2) within 4 binomial sigma of the closed forms";
  rep.pass = true;
  struct Case {
    const char* label;
    K2Params k;
  };
  const Case cases[] = {
      {"symmetric", K2Params{}},
      {"p=0.7,M=0,lambda_B=0.5", K2Params{0.7, Cap::at(0), Cap::unlimited(), 1.0, 0.5}},
  };
  double worst = 0.0;
  for (std::size_t c = 0; c < std::size(cases); ++c) {
    const K2Params& k = cases[c].k;
    const ExactOutcome exact = k2_exact(k, cfg.horizon);
    SimConfig sc;
    sc.topology = std::make_shared<const Topology>(Topology::complete(2));
    sc.p = k.p;
    sc.cap_M = k.cap_M;
    sc.cap_N = k.cap_N;
    sc.lambda_A = k.lambda_A;
    sc.lambda_B = k.lambda_B;
    sc.horizon = cfg.horizon;
    struct Obs {
      int root_state = 0;
      std::uint32_t count = 0;
      bool root_a = false;
      bool root_alive = false;
      bool annihilated = false;
    };
    const auto runs = run_replicas<Obs>(cfg.replicas, cfg.jobs, [&](std::size_t i) {
      SimConfig cc = sc;
      cc.seed = stream_seed(stream_seed(cfg.seed, c), i);
      const SimState s = run(cc);
      const NaiveResult sum = engine_summary(s);
      Obs o;
      o.root_state = sum.root_state;
      o.count = sum.cluster_count();
      o.root_a = s.origin_species[kRoot] == Species::A;
      o.root_alive = !s.death_time[kRoot].has_value();
      o.annihilated = !s.annihilation_log.empty();
      return o;
    });
    std::array<std::uint64_t, 3> root{}, count{};
    std::uint64_t root_a = 0, root_a_alive = 0, ann = 0;
    for (const auto& o : runs) {
      ++root[static_cast<std::size_t>(o.root_state)];
      ++count[o.count];
      root_a += o.root_a;
      root_a_alive += o.root_a && o.root_alive;
      ann += o.annihilated;
    }
    const std::string prefix = std::string(cases[c].label) + ".";
    auto compare = [&](const std::string& label, std::uint64_t hits, std::uint64_t n, double p) {
      const double f = static_cast<double>(hits) / static_cast<double>(n);
      const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
      const double z = sigma > 0 ? std::abs(f - p) / sigma : (f == p ? 0.0 : INFINITY);
      worst = std::max(worst, z);
      rep.add(prefix + label + ".observed", f);
      rep.add(prefix + label + ".exact", p);
      if (z > 4.0) {
        rep.pass = false;
        rep.notes.push_back(prefix + label + " differs by " + fmt(z) + " sigma");
      }
    };
    static constexpr const char* kRootNames[3] = {"vacant", "A", "B"};
    for (std::size_t b = 0; b < 3; ++b) {
      compare(std::string("root=") + kRootNames[b], root[b], cfg.replicas, exact.root_pmf[b]);
      compare("clusters=" + std::to_string(b), count[b], cfg.replicas, exact.count_pmf[b]);
    }
    compare("annihilation", ann, cfg.replicas, exact.annihilation);
    if (root_a > 0) compare("root_survival", root_a_alive, root_a, exact.root_survival);
    rep.replicas += cfg.replicas;
  }
  rep.add("max_z", worst);
  rep.tolerance("sigma_multiplier", 4.0);
  return rep;
}

}  // namespace dlacs::oracle
