#include "dlacs/tracer.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dlacs {

bool lifespan_le(const std::optional<double>& a, const std::optional<double>& b) noexcept {
  if (!b) return true;
  if (!a) return false;
  return *a <= *b;
}

namespace {

constexpr std::uint64_t kClockTag = 0xc10c;
constexpr std::uint64_t kPathTag = 0x9a7f;

enum Sys { kBase = 0, kPlus = 1 };

struct Coupled {
  const SimConfig& cfg;
  const Topology& topo;
  std::array<SimState, 2> sys;
  /// Per system: stream -> live cluster it drives.
  std::array<std::vector<ClusterId>, 2> driver;
  std::vector<double> next_time;
  std::vector<std::uint64_t> jumps;
  using Entry = std::pair<double, OriginId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  TracerState tracer;
  bool root_touched = false;
  std::uint32_t status_changes = 0;

  Coupled(const SimConfig& c, SimState base, SimState plus)
      : cfg(c), topo(*c.topology), sys{std::move(base), std::move(plus)} {}

  double stream_rate(OriginId s) const { return cfg.rate(sys[kPlus].origin_species[s]); }

  void schedule(OriginId s, double now) {
    const double rate = stream_rate(s);
    if (!(rate > 0.0)) {
      next_time[s] = std::numeric_limits<double>::infinity();
      return;
    }
    CounterStream draw(key_seed(cfg.seed, s, jumps[s], kClockTag));
    next_time[s] = now + draw.exponential(rate);
    queue.push({next_time[s], s});
  }

  void index_drivers() {
    const std::size_t streams = sys[kPlus].origin_count();
    for (int k : {kBase, kPlus}) {
      driver[k].assign(streams, kNoCluster);
      for (const auto& list : sys[k].live)
        for (ClusterId id : list) driver[k][sys[k].clusters[id].stream] = id;
    }
  }

  void refresh_drivers(int k) {
    SimState& s = sys[k];
    for (const Reaction& r : s.last_reactions) {
      if (r.kind == Reaction::Kind::blocked) continue;
      for (ClusterId gone : {r.first, r.second}) {
        const OriginId st = s.clusters[gone].stream;
        if (driver[k][st] == gone) driver[k][st] = kNoCluster;
      }
      if (r.result != kNoCluster && s.clusters[r.result].alive)
        driver[k][s.clusters[r.result].stream] = r.result;
    }
  }

  void set_status(TracerStatus st) {
    if (st != tracer.status) ++status_changes;
    tracer.status = st;
    if (st == TracerStatus::dead) tracer.tracked = kNoCluster;
  }

  void touch_check(int k, ClusterId a, ClusterId b) {
    const SimState& s = sys[k];
    if (s.clusters[a].holds_root || (b != kNoCluster && s.clusters[b].holds_root)) root_touched = true;
  }

  /// Follow the tracked cluster through the reactions of system k.
  void update_tracer(int k) {
    if (tracer.status == TracerStatus::dead) return;
    const int tracked_sys = tracer.system == TracedSystem::augmented ? kPlus : kBase;
    if (tracked_sys != k) return;
    SimState& s = sys[k];
    const bool tracking_a = k == kPlus;
    for (const Reaction& r : s.last_reactions) {
      if (tracer.status == TracerStatus::dead) return;
      const ClusterId me = tracer.tracked;
      if (r.first != me && r.second != me) continue;
      const ClusterId partner = r.first == me ? r.second : r.first;
      touch_check(k, me, partner);
      switch (r.kind) {
        case Reaction::Kind::coalesce: {
          const Cluster& merged = s.clusters[r.result];
          if (tracking_a && !cfg.cap_M.is_unlimited() && merged.size > cfg.cap_M.value() + 1) {
            set_status(TracerStatus::dead);
          } else {
            set_status(TracerStatus::dormant);
            tracer.tracked = r.result;
            touch_check(k, r.result, kNoCluster);
          }
          break;
        }
        case Reaction::Kind::annihilate: {
          if (tracer.status == TracerStatus::dormant) {
            set_status(TracerStatus::dead);
            break;
          }
          // The partner survives in the other system; follow it there.
          const int there = k == kPlus ? kBase : kPlus;
          const ClusterId twin = driver[there][s.clusters[partner].stream];
          if (twin == kNoCluster) {
            set_status(TracerStatus::dead);
            break;
          }
          tracer.system = there == kPlus ? TracedSystem::augmented : TracedSystem::base;
          tracer.tracked = twin;
          touch_check(there, twin, kNoCluster);
          return;  // remaining reactions belong to this system only
        }
        case Reaction::Kind::blocked: {
          const Cluster& mine = s.clusters[me];
          const Cluster& theirs = s.clusters[partner];
          if (tracking_a && !cfg.cap_M.is_unlimited() && mine.size == cfg.cap_M.value() + 1 &&
              theirs.size <= cfg.cap_M.value()) {
            set_status(TracerStatus::active);
            tracer.tracked = mine.bravery < theirs.bravery ? me : partner;
            touch_check(k, tracer.tracked, kNoCluster);
          }
          break;
        }
      }
    }
  }

  /// Make augmented clusters follow the stream of their base counterpart.
  void sync_streams(VertexId v) {
    SimState& plus = sys[kPlus];
    const SimState& base = sys[kBase];
    for (Species sp : {Species::A, Species::B}) {
      ClusterId lone_plus = kNoCluster;
      ClusterId lone_base = kNoCluster;
      int unmatched_plus = 0;
      int unmatched_base = 0;
      for (ClusterId id : plus.site_index[v]) {
        const Cluster& c = plus.clusters[id];
        if (c.species != sp) continue;
        if (driver[kBase][c.stream] != kNoCluster && base.clusters[driver[kBase][c.stream]].location == v)
          continue;
        ++unmatched_plus;
        lone_plus = id;
      }
      for (ClusterId id : base.site_index[v]) {
        const Cluster& c = base.clusters[id];
        if (c.species != sp) continue;
        if (driver[kPlus][c.stream] != kNoCluster && plus.clusters[driver[kPlus][c.stream]].location == v)
          continue;
        ++unmatched_base;
        lone_base = id;
      }
      if (unmatched_plus != 1 || unmatched_base != 1) continue;
      if (tracer.status != TracerStatus::dead && tracer.system == TracedSystem::augmented &&
          tracer.status == TracerStatus::active && tracer.tracked == lone_plus)
        continue;
      const OriginId target = base.clusters[lone_base].stream;
      if (driver[kPlus][target] != kNoCluster) continue;
      Cluster& c = plus.clusters[lone_plus];
      if (driver[kPlus][c.stream] == lone_plus) driver[kPlus][c.stream] = kNoCluster;
      c.stream = target;
      driver[kPlus][target] = lone_plus;
    }
  }

  bool consistent() const {
    using Key = std::pair<VertexId, int>;
    auto keys = [](const SimState& s) {
      std::vector<Key> out;
      for (const auto& list : s.live)
        for (ClusterId id : list) out.emplace_back(s.clusters[id].location, static_cast<int>(s.clusters[id].species));
      std::sort(out.begin(), out.end());
      return out;
    };
    std::vector<Key> base = keys(sys[kBase]);
    std::vector<Key> plus = keys(sys[kPlus]);
    if (tracer.status == TracerStatus::active) {
      const bool aug = tracer.system == TracedSystem::augmented;
      const SimState& s = sys[aug ? kPlus : kBase];
      const Cluster& c = s.clusters[tracer.tracked];
      std::vector<Key>& bigger = aug ? plus : base;
      auto it = std::find(bigger.begin(), bigger.end(), Key{c.location, static_cast<int>(c.species)});
      if (it == bigger.end()) return false;
      bigger.erase(it);
    }
    return base == plus;
  }
};

}  // namespace

TracerRun run_with_tracer(const SimConfig& cfg, VertexId extra_site) {
  cfg.validate();
  if (cfg.mode != Mode::continuous) throw std::invalid_argument("run_with_tracer: continuous mode only");
  if (extra_site >= cfg.vertex_count()) throw std::out_of_range("extra_site out of range");

  SimState base = init_state(cfg);
  TracerRun out;
  if (base.origin_species[kRoot] == Species::B) {
    out.tau = 0.0;
    out.tau_plus = 0.0;
    out.tracer.status = TracerStatus::dead;
    out.tracer_consistent = true;
    return out;
  }
  SimState plus = base;
  const double min_bravery = *std::min_element(base.origin_bravery.begin(), base.origin_bravery.end());
  const ClusterId extra = add_particle(plus, Species::A, min_bravery / 2.0, extra_site);
  // Keep origin indexing aligned: the base system knows the extra origin but never uses it.
  base.origin_species.push_back(Species::A);
  base.origin_bravery.push_back(min_bravery / 2.0);
  base.death_time.push_back(std::nullopt);
  base.partner_size.push_back(0);

  Coupled run(cfg, std::move(base), std::move(plus));
  run.tracer = {TracerStatus::active, TracedSystem::augmented, extra};
  run.index_drivers();
  {
    SimState& p = run.sys[kPlus];
    p.last_reactions.clear();
    resolve_site(p, extra_site, cfg, extra);
    run.refresh_drivers(kPlus);
    run.update_tracer(kPlus);
    run.sync_streams(extra_site);
  }

  const std::size_t streams = run.sys[kPlus].origin_count();
  run.next_time.assign(streams, 0.0);
  run.jumps.assign(streams, 0);
  for (OriginId s = 0; s < streams; ++s) run.schedule(s, 0.0);

  while (!run.queue.empty()) {
    const auto [time, stream] = run.queue.top();
    if (time > cfg.horizon) break;
    run.queue.pop();
    if (time != run.next_time[stream]) continue;
    const ClusterId in_base = run.driver[kBase][stream];
    const ClusterId in_plus = run.driver[kPlus][stream];
    if (in_base == kNoCluster && in_plus == kNoCluster) continue;

    CounterStream path(key_seed(cfg.seed, stream, run.jumps[stream], kPathTag));
    const std::uint32_t step = path.below(run.topo.degree());
    VertexId touched[2] = {0, 0};
    bool moved[2] = {false, false};
    for (int k : {kBase, kPlus}) {
      const ClusterId id = k == kBase ? in_base : in_plus;
      SimState& s = run.sys[k];
      s.clock = time;
      s.last_reactions.clear();
      if (id == kNoCluster) continue;
      const VertexId to = run.topo.neighbor(s.clusters[id].location, step);
      move_cluster(s, id, to, cfg);
      ++s.events;
      run.refresh_drivers(k);
      touched[k] = to;
      moved[k] = true;
    }
    run.update_tracer(kPlus);
    run.update_tracer(kBase);
    // A switch from one system to the other inside this event may still see
    // reactions of the second system.
    run.update_tracer(kPlus);
    for (int k : {kBase, kPlus})
      if (moved[k]) run.sync_streams(touched[k]);
    ++out.events;
    ++run.jumps[stream];
    run.schedule(stream, time);
  }

  out.tau = a_lifespan(run.sys[kBase], kRoot);
  out.tau_plus = a_lifespan(run.sys[kPlus], kRoot);
  out.tracer = run.tracer;
  out.root_touched = run.root_touched;
  out.tracer_consistent = run.consistent();
  out.status_changes = run.status_changes;
  return out;
}

}  // namespace dlacs
