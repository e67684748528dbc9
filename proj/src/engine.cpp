#include "dlacs/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace dlacs {

void SimConfig::validate() const {
  if (!topology) throw std::invalid_argument("topology: missing");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p: must lie in [0, 1]");
  if (!(lambda_A > 0.0) || !std::isfinite(lambda_A))
    throw std::invalid_argument("lambda_A: must be positive and finite");
  if (!(lambda_B >= 0.0) || !std::isfinite(lambda_B))
    throw std::invalid_argument("lambda_B: must be non-negative and finite");
  if (!(horizon >= 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("horizon: must be non-negative and finite");
  if (mode == Mode::discrete && lambda_B != 0.0)
    throw std::invalid_argument("lambda_B: discrete mode requires lambda_B = 0");
}

std::uint64_t SimState::weighted_a(VertexId v) const {
  std::uint64_t total = 0;
  for (ClusterId id : site_index[v])
    if (clusters[id].species == Species::A) total += clusters[id].size;
  return total;
}

std::uint32_t SimState::count_a(VertexId v) const {
  std::uint32_t total = 0;
  for (ClusterId id : site_index[v])
    if (clusters[id].species == Species::A) ++total;
  return total;
}

std::uint64_t SimState::live_constituents() const {
  std::uint64_t total = 0;
  for (const auto& list : live)
    for (ClusterId id : list) total += clusters[id].size;
  return total;
}

std::optional<double> a_lifespan(const SimState& state, OriginId origin) {
  if (state.origin_species.at(origin) != Species::A) return 0.0;
  return state.death_time[origin];
}

namespace {

void link_live(SimState& s, Cluster& c) {
  auto& list = s.live[static_cast<int>(c.species)];
  c.live_slot = static_cast<std::uint32_t>(list.size());
  list.push_back(c.id);
}

void unlink_live(SimState& s, const Cluster& c) {
  auto& list = s.live[static_cast<int>(c.species)];
  const ClusterId last = list.back();
  list[c.live_slot] = last;
  s.clusters[last].live_slot = c.live_slot;
  list.pop_back();
}

void unlink_site(SimState& s, ClusterId id, VertexId v) {
  auto& ids = s.site_index[v];
  auto it = std::find(ids.begin(), ids.end(), id);
  *it = ids.back();
  ids.pop_back();
}

ClusterId new_cluster_id(SimState& s) {
  const auto id = static_cast<ClusterId>(s.clusters.size());
  s.clusters.emplace_back();
  s.clusters.back().id = id;
  return id;
}

void retire(SimState& s, ClusterId id) {
  Cluster& c = s.clusters[id];
  unlink_live(s, c);
  unlink_site(s, id, c.location);
  c.alive = false;
}

ClusterSnapshot snapshot(const Cluster& c) { return {c.size, c.constituents}; }

void annihilate(SimState& s, ClusterId x, ClusterId y) {
  const ClusterId a = s.clusters[x].species == Species::A ? x : y;
  const ClusterId b = a == x ? y : x;
  const Cluster& ca = s.clusters[a];
  const Cluster& cb = s.clusters[b];
  s.annihilation_log.push_back({s.clock, snapshot(ca), snapshot(cb), ca.location});
  for (OriginId o : ca.constituents) {
    s.death_time[o] = s.clock;
    s.partner_size[o] = cb.size;
  }
  for (OriginId o : cb.constituents) {
    s.death_time[o] = s.clock;
    s.partner_size[o] = ca.size;
  }
  s.annihilated_constituents += ca.size + cb.size;
  s.last_reactions.push_back({Reaction::Kind::annihilate, x, y, kNoCluster});
  retire(s, x);
  retire(s, y);
}

ClusterId coalesce(SimState& s, ClusterId x, ClusterId y, bool record) {
  const ClusterId id = new_cluster_id(s);
  Cluster& cx = s.clusters[x];
  Cluster& cy = s.clusters[y];
  const Cluster& brave = cx.bravery >= cy.bravery ? cx : cy;
  Cluster& merged = s.clusters[id];
  merged.species = cx.species;
  merged.size = cx.size + cy.size;
  merged.bravery = brave.bravery;
  merged.stream = brave.stream;
  merged.location = cx.location;
  merged.holds_root = cx.holds_root || cy.holds_root;
  Cluster& big = cx.constituents.size() >= cy.constituents.size() ? cx : cy;
  Cluster& small = &big == &cx ? cy : cx;
  merged.constituents = std::move(big.constituents);
  merged.constituents.insert(merged.constituents.end(), small.constituents.begin(),
                             small.constituents.end());
  small.constituents.clear();
  merged.alive = true;
  if (record) s.merge_log.push_back({s.clock, merged.species, cx.size, cy.size, id});
  s.last_reactions.push_back({Reaction::Kind::coalesce, x, y, id});
  retire(s, x);
  retire(s, y);
  link_live(s, s.clusters[id]);
  s.site_index[s.clusters[id].location].push_back(id);
  return id;
}

}  // namespace

SimState init_state(const SimConfig& cfg) {
  cfg.validate();
  const std::uint32_t n = cfg.vertex_count();
  SimState s(cfg.seed);
  s.clusters.reserve(2 * static_cast<std::size_t>(n));
  s.site_index.assign(n, {});
  s.origin_species.resize(n);
  s.origin_bravery.resize(n);
  s.death_time.assign(n, std::nullopt);
  s.partner_size.assign(n, 0);
  for (VertexId v = 0; v < n; ++v) {
    const Species sp = s.rng.bernoulli(cfg.p) ? Species::A : Species::B;
    const double bravery = s.rng.open_uniform();
    s.origin_species[v] = sp;
    s.origin_bravery[v] = bravery;
    const ClusterId id = new_cluster_id(s);
    Cluster& c = s.clusters[id];
    c.species = sp;
    c.size = 1;
    c.bravery = bravery;
    c.location = v;
    c.stream = v;
    c.constituents = {v};
    c.alive = true;
    c.holds_root = v == kRoot;
    link_live(s, c);
    s.site_index[v].push_back(id);
  }
  return s;
}

ClusterId add_particle(SimState& s, Species species, double bravery, VertexId location) {
  const auto origin = static_cast<OriginId>(s.origin_species.size());
  s.origin_species.push_back(species);
  s.origin_bravery.push_back(bravery);
  s.death_time.push_back(std::nullopt);
  s.partner_size.push_back(0);
  const ClusterId id = new_cluster_id(s);
  Cluster& c = s.clusters[id];
  c.species = species;
  c.size = 1;
  c.bravery = bravery;
  c.location = location;
  c.stream = origin;
  c.constituents = {origin};
  c.alive = true;
  link_live(s, c);
  s.site_index.at(location).push_back(id);
  return id;
}

std::optional<Event> next_event(SimState& s, const SimConfig& cfg) {
  const double rate_a = static_cast<double>(s.live_count(Species::A)) * cfg.lambda_A;
  const double rate_b = static_cast<double>(s.live_count(Species::B)) * cfg.lambda_B;
  const double total = rate_a + rate_b;
  if (!(total > 0.0)) return std::nullopt;
  const double dt = s.rng.exponential(total);
  const double u = s.rng.uniform() * total;
  ClusterId mover;
  if (u < rate_a) {
    const auto& list = s.live[0];
    auto k = static_cast<std::size_t>(u / cfg.lambda_A);
    mover = list[std::min(k, list.size() - 1)];
  } else {
    const auto& list = s.live[1];
    auto k = static_cast<std::size_t>((u - rate_a) / cfg.lambda_B);
    mover = list[std::min(k, list.size() - 1)];
  }
  return Event{dt, mover};
}

PairKind classify_pair(const Cluster& c1, const Cluster& c2, const SimConfig& cfg) noexcept {
  if (c1.species != c2.species) return PairKind::annihilate;
  const Cap cap = cfg.cap(c1.species);
  return cap.admits(std::max(c1.size, c2.size)) ? PairKind::coalesce : PairKind::no_interaction;
}

PairOutcome resolve_pair(const Cluster& c1, const Cluster& c2, const SimConfig& cfg) {
  PairOutcome out;
  out.kind = classify_pair(c1, c2, cfg);
  if (out.kind != PairKind::coalesce) return out;
  const Cluster& brave = c1.bravery >= c2.bravery ? c1 : c2;
  Cluster merged;
  merged.species = c1.species;
  merged.size = c1.size + c2.size;
  merged.bravery = brave.bravery;
  merged.stream = brave.stream;
  merged.location = c1.location;
  merged.holds_root = c1.holds_root || c2.holds_root;
  merged.constituents = c1.constituents;
  merged.constituents.insert(merged.constituents.end(), c2.constituents.begin(),
                             c2.constituents.end());
  merged.alive = true;
  out.merged = std::move(merged);
  return out;
}

void resolve_site(SimState& s, VertexId v, const SimConfig& cfg, ClusterId arriving) {
  std::vector<ClusterId> order;
  while (s.site_index[v].size() >= 2) {
    order.assign(s.site_index[v].begin(), s.site_index[v].end());
    std::sort(order.begin(), order.end(), [&](ClusterId x, ClusterId y) {
      return s.clusters[x].bravery > s.clusters[y].bravery;
    });
    ClusterId first = kNoCluster;
    ClusterId second = kNoCluster;
    PairKind kind = PairKind::no_interaction;
    for (std::size_t i = 0; i < order.size() && first == kNoCluster; ++i) {
      for (std::size_t j = 0; j < order.size(); ++j) {
        if (j == i) continue;
        const PairKind k = classify_pair(s.clusters[order[i]], s.clusters[order[j]], cfg);
        if (k != PairKind::no_interaction) {
          first = order[i];
          second = order[j];
          kind = k;
          break;
        }
      }
    }
    if (first == kNoCluster) break;
    if (kind == PairKind::annihilate) {
      if (arriving == first || arriving == second) arriving = kNoCluster;
      annihilate(s, first, second);
    } else {
      const ClusterId merged = coalesce(s, first, second, cfg.record_merges);
      if (arriving == first || arriving == second) arriving = merged;
    }
  }
  if (arriving != kNoCluster && s.clusters[arriving].alive) {
    for (ClusterId other_id : s.site_index[v]) {
      if (other_id == arriving) continue;
      if (s.clusters[other_id].species == s.clusters[arriving].species)
        s.last_reactions.push_back({Reaction::Kind::blocked, arriving, other_id, kNoCluster});
    }
  }
}

void move_cluster(SimState& s, ClusterId id, VertexId to, const SimConfig& cfg) {
  s.last_reactions.clear();
  Cluster& c = s.clusters[id];
  unlink_site(s, id, c.location);
  c.location = to;
  s.site_index[to].push_back(id);
  resolve_site(s, to, cfg, id);
}

void discrete_step(SimState& s, const SimConfig& cfg) {
  if (cfg.mode != Mode::discrete) throw std::logic_error("discrete_step: config is in continuous mode");
  const Topology& topo = *cfg.topology;
  s.last_reactions.clear();
  const std::vector<ClusterId> movers = s.live[static_cast<int>(Species::A)];
  std::vector<VertexId> touched;
  touched.reserve(movers.size());
  for (ClusterId id : movers) {
    Cluster& c = s.clusters[id];
    const VertexId to = topo.sample_neighbor(c.location, s.rng);
    unlink_site(s, id, c.location);
    c.location = to;
    s.site_index[to].push_back(id);
    touched.push_back(to);
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  s.clock += 1.0;
  ++s.steps;
  for (VertexId v : touched) resolve_site(s, v, cfg);
}

namespace {

void notify_sojourn(std::span<Observer* const> obs, const SimState& s, double from, double to) {
  if (to > from)
    for (Observer* o : obs) o->on_sojourn(s, from, to);
}

SimState run_discrete(const SimConfig& cfg, std::span<Observer* const> obs) {
  SimState s = init_state(cfg);
  for (Observer* o : obs) o->on_start(s);
  for (std::uint32_t step = 1; step <= cfg.steps; ++step) {
    notify_sojourn(obs, s, step - 1.0, step);
    discrete_step(s, cfg);
    for (Observer* o : obs) o->on_grid(s, step, step);
  }
  for (Observer* o : obs) o->on_finish(s);
  return s;
}

}  // namespace

SimState run(const SimConfig& cfg, std::span<Observer* const> obs, std::span<const double> grid) {
  if (cfg.mode == Mode::discrete) return run_discrete(cfg, obs);
  if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("run: grid must be sorted");
  SimState s = init_state(cfg);
  const Topology& topo = *cfg.topology;
  const double horizon = cfg.horizon;
  for (Observer* o : obs) o->on_start(s);
  std::size_t g = 0;
  double t = 0.0;
  auto flush_grid = [&](double until, bool inclusive) {
    while (g < grid.size() && grid[g] <= horizon && (grid[g] < until || (inclusive && grid[g] == until))) {
      if (grid[g] >= t) {
        notify_sojourn(obs, s, t, grid[g]);
        t = grid[g];
        s.clock = t;
        for (Observer* o : obs) o->on_grid(s, g, grid[g]);
      }
      ++g;
    }
  };
  while (true) {
    const auto ev = next_event(s, cfg);
    const double t_next = ev ? t + ev->dt : horizon + 1.0;
    if (!ev || t_next > horizon) {
      flush_grid(horizon, true);
      notify_sojourn(obs, s, t, horizon);
      s.clock = horizon;
      break;
    }
    flush_grid(t_next, false);
    notify_sojourn(obs, s, t, t_next);
    t = t_next;
    s.clock = t;
    const VertexId from = s.clusters[ev->mover].location;
    const VertexId to = topo.sample_neighbor(from, s.rng);
    move_cluster(s, ev->mover, to, cfg);
    ++s.events;
    const EventInfo info{t, ev->mover, from, to};
    for (Observer* o : obs) o->on_event(s, info);
  }
  for (Observer* o : obs) o->on_finish(s);
  return s;
}

}  // namespace dlacs
