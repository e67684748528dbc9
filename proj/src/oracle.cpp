#include "dlacs/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace dlacs::oracle {

ExactOutcome k2_exact(const K2Params& k, double horizon) {
  if (!(k.lambda_A > 0.0)) throw std::invalid_argument("k2_exact: lambda_A must be positive");
  if (!(k.lambda_B >= 0.0)) throw std::invalid_argument("k2_exact: lambda_B must be non-negative");
  if (!(k.p >= 0.0 && k.p <= 1.0)) throw std::invalid_argument("k2_exact: p outside [0, 1]");
  if (!(horizon >= 0.0)) throw std::invalid_argument("k2_exact: negative horizon");

  const double p = k.p;
  const double q = 1.0 - p;
  const double a = k.lambda_A;
  const double b = k.lambda_B;
  const double t = horizon;
  const bool aa_merge = k.cap_M.admits(1);
  const bool bb_merge = k.cap_N.admits(1) && b > 0.0;

  ExactOutcome out;
  out.scenario = "complete(2) p=" + std::to_string(p) + " M=" + k.cap_M.to_string() + " N=" + k.cap_N.to_string() +
                 " lambda_A=" + std::to_string(a) + " lambda_B=" + std::to_string(b);
  out.terminal = {
      {aa_merge ? "AA coalesced" : "AA apart", p * p},
      {"AB annihilated", 2 * p * q},
      {bb_merge ? "BB coalesced" : "BB apart", q * q},
  };

  const double meet_ab = 1.0 - std::exp(-(a + b) * t);
  out.root_survival = p + q * (1.0 - meet_ab);
  out.root_survival_limit = p;
  out.annihilation = 2 * p * q * meet_ab;

  // A lone cluster on two sites is uniformly placed after its first move,
  // so a merged pair sits at the root with probability 1/2.
  // Two non-interacting walkers at rate r, one starting at the root: the
  // root is vacant iff the first has left and the second has not arrived.
  auto both_away = [&](double r) { return (1.0 - std::exp(-4.0 * r * t)) / 4.0; };

  std::array<double, 3> count{};
  std::array<double, 3> root{};
  // AA
  if (aa_merge) {
    const double c = 1.0 - std::exp(-2.0 * a * t);
    count[1] += p * p * c;
    count[2] += p * p * (1 - c);
    root[0] += p * p * c / 2;
    root[1] += p * p * (1 - c / 2);
  } else {
    count[2] += p * p;
    root[0] += p * p * both_away(a);
    root[1] += p * p * (1 - both_away(a));
  }
  // AB and BA
  count[0] += 2 * p * q * meet_ab;
  count[2] += 2 * p * q * (1 - meet_ab);
  root[0] += 2 * p * q * meet_ab;
  root[1] += p * q * (1 - meet_ab);
  root[2] += p * q * (1 - meet_ab);
  // BB
  if (b == 0.0) {
    count[2] += q * q;
    root[2] += q * q;
  } else if (bb_merge) {
    const double c = 1.0 - std::exp(-2.0 * b * t);
    count[1] += q * q * c;
    count[2] += q * q * (1 - c);
    root[0] += q * q * c / 2;
    root[2] += q * q * (1 - c / 2);
  } else {
    count[2] += q * q;
    root[0] += q * q * both_away(b);
    root[2] += q * q * (1 - both_away(b));
  }
  out.count_pmf = count;
  out.root_pmf = root;
  return out;
}

namespace {

struct Particle {
  bool is_a;
  std::uint32_t size;
  double bravery;
  VertexId at;
  double ring;
};

bool can_react(const Particle& x, const Particle& y, const SimConfig& cfg) {
  if (x.is_a != y.is_a) return true;
  const std::uint32_t big = x.size > y.size ? x.size : y.size;
  const Cap cap = x.is_a ? cfg.cap_M : cfg.cap_N;
  return cap.is_unlimited() || big <= cap.value();
}

}  // namespace

NaiveResult naive_simulate(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.mode != Mode::continuous) throw std::invalid_argument("naive_simulate: continuous mode only");
  if (cfg.vertex_count() > 16) throw std::invalid_argument("naive_simulate: at most 16 vertices");
  if (cfg.horizon > 10.0) throw std::invalid_argument("naive_simulate: horizon at most 10");

  std::mt19937_64 gen(cfg.seed ^ 0x6e61697665ULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Topology& topo = *cfg.topology;
  auto ring_after = [&](double now, bool is_a) {
    const double rate = is_a ? cfg.lambda_A : cfg.lambda_B;
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return now + std::exponential_distribution<double>(rate)(gen);
  };

  std::vector<Particle> ps;
  for (VertexId v = 0; v < topo.vertex_count(); ++v) {
    Particle x{};
    x.is_a = unif(gen) < cfg.p;
    x.size = 1;
    x.bravery = unif(gen);
    x.at = v;
    ps.push_back(x);
  }
  for (auto& x : ps) x.ring = ring_after(0.0, x.is_a);

  NaiveResult r;
  for (;;) {
    std::size_t who = ps.size();
    double when = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ps.size(); ++i)
      if (ps[i].ring < when) {
        when = ps[i].ring;
        who = i;
      }
    if (who == ps.size() || when > cfg.horizon) break;

    const auto nbrs = topo.neighbors(ps[who].at);
    std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
    const VertexId dest = nbrs[pick(gen)];
    ps[who].at = dest;
    ps[who].ring = ring_after(when, ps[who].is_a);
    ++r.jumps;

    for (;;) {
      std::vector<std::size_t> here;
      for (std::size_t i = 0; i < ps.size(); ++i)
        if (ps[i].at == dest) here.push_back(i);
      std::sort(here.begin(), here.end(), [&](std::size_t x, std::size_t y) { return ps[x].bravery > ps[y].bravery; });
      std::size_t first = ps.size();
      std::size_t second = ps.size();
      for (std::size_t i = 0; i < here.size() && first == ps.size(); ++i)
        for (std::size_t j = 0; j < here.size(); ++j)
          if (i != j && can_react(ps[here[i]], ps[here[j]], cfg)) {
            first = here[i];
            second = here[j];
            break;
          }
      if (first == ps.size()) break;
      if (ps[first].is_a != ps[second].is_a) {
        ++r.annihilations;
        const std::size_t hi = std::max(first, second);
        const std::size_t lo = std::min(first, second);
        ps.erase(ps.begin() + static_cast<std::ptrdiff_t>(hi));
        ps.erase(ps.begin() + static_cast<std::ptrdiff_t>(lo));
      } else {
        // `first` is the braver one; it keeps its bravery and clock.
        ps[first].size += ps[second].size;
        ps.erase(ps.begin() + static_cast<std::ptrdiff_t>(second));
      }
    }
  }

  for (const auto& x : ps) {
    (x.is_a ? r.a_clusters : r.b_clusters) += 1;
    if (x.at == kRoot) r.root_state = x.is_a ? 1 : 2;
  }
  return r;
}

NaiveResult engine_summary(const SimState& s) {
  NaiveResult r;
  r.a_clusters = static_cast<std::uint32_t>(s.live_count(Species::A));
  r.b_clusters = static_cast<std::uint32_t>(s.live_count(Species::B));
  for (ClusterId id : s.site_index[kRoot]) r.root_state = s.clusters[id].species == Species::A ? 1 : 2;
  r.annihilations = s.annihilation_log.size();
  r.jumps = s.events;
  return r;
}

Dyadic gate_tree_enumerate(const GateTree& shape) {
  const auto order = shape.internal_postorder();
  const std::size_t internal = order.size();
  if (internal > 20) throw std::invalid_argument("gate_tree_enumerate: at most 20 internal nodes");
  const auto nodes = shape.nodes();
  if (nodes.empty()) throw std::invalid_argument("gate_tree_enumerate: empty tree");
  if (internal == 0) return Dyadic::one();

  // Marking m assigns XOR to the j-th internal node iff bit j of m is set.
  // Word w, lane l holds marking 64 w + l.
  static constexpr std::uint64_t kLanePattern[6] = {
      0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
      0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL,
  };
  const std::uint64_t markings = std::uint64_t{1} << internal;
  const std::uint64_t words = markings >= 64 ? markings / 64 : 1;
  const std::uint64_t valid = markings >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << markings) - 1;

  std::vector<std::uint64_t> value(nodes.size());
  std::uint64_t good = 0;
  for (std::uint64_t w = 0; w < words; ++w) {
    std::fill(value.begin(), value.end(), ~std::uint64_t{0});
    for (std::size_t j = 0; j < internal; ++j) {
      const auto idx = static_cast<std::size_t>(order[j]);
      const std::uint64_t xor_mask = j < 6 ? kLanePattern[j] : (((w >> (j - 6)) & 1U) ? ~std::uint64_t{0} : 0);
      const std::uint64_t l = value[static_cast<std::size_t>(nodes[idx].left)];
      const std::uint64_t r = value[static_cast<std::size_t>(nodes[idx].right)];
      value[idx] = (xor_mask & (l ^ r)) | (~xor_mask & (l | r));
    }
    good += static_cast<std::uint64_t>(std::popcount(value[0] & valid));
  }
  return Dyadic(good, static_cast<std::uint32_t>(internal));
}

}  // namespace dlacs::oracle
