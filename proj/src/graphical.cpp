#include "dlacs/graphical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>

namespace dlacs {

namespace {

constexpr std::uint64_t kArrowTag = 0xa770;
/// Poisson(1) draws are truncated here; the dropped mass is below 1e-25.
constexpr std::uint32_t kMaxPerBucket = 24;

std::uint32_t poisson_one(CounterStream& cs) {
  const double u = cs.uniform();
  double term = std::exp(-1.0);
  double cdf = term;
  std::uint32_t k = 0;
  while (u >= cdf && k < kMaxPerBucket) {
    ++k;
    term /= k;
    cdf += term;
  }
  return k;
}

}  // namespace

ArrowStream ArrowStream::seeded(std::shared_ptr<const Topology> topology, double horizon, std::uint64_t seed) {
  if (!topology) throw std::invalid_argument("arrows: missing topology");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("arrows: horizon must be finite and >= 0");
  ArrowStream s;
  s.topology_ = std::move(topology);
  s.horizon_ = horizon;
  s.seed_ = seed;
  return s;
}

ArrowStream ArrowStream::explicit_list(std::shared_ptr<const Topology> topology, double horizon,
                                       std::vector<Arrow> arrows) {
  ArrowStream s = seeded(std::move(topology), horizon, 0);
  s.explicit_ = true;
  s.by_source_.assign(s.topology_->vertex_count(), {});
  for (const Arrow& a : arrows) {
    if (a.from >= s.topology_->vertex_count() || !s.topology_->adjacent(a.from, a.to))
      throw std::invalid_argument("arrows: not an edge");
    if (!(a.time > 0.0 && a.time <= horizon)) throw std::invalid_argument("arrows: time outside (0, horizon]");
    s.by_source_[a.from].push_back(a);
  }
  for (auto& list : s.by_source_) {
    std::sort(list.begin(), list.end(), [](const Arrow& x, const Arrow& y) { return x.time < y.time; });
    for (std::size_t i = 1; i < list.size(); ++i)
      if (list[i].time == list[i - 1].time) throw std::invalid_argument("arrows: repeated time at one vertex");
  }
  return s;
}

ArrowStream generate_arrows(std::shared_ptr<const Topology> topology, double horizon, std::uint64_t seed) {
  return ArrowStream::seeded(std::move(topology), horizon, seed);
}

void ArrowStream::bucket(VertexId u, std::uint64_t b, std::vector<Arrow>& out) const {
  CounterStream cs(key_seed(seed_, u, b, kArrowTag));
  const std::uint32_t count = poisson_one(cs);
  const std::uint32_t deg = topology_->degree();
  for (std::uint32_t i = 0; i < count; ++i) {
    const double time = static_cast<double>(b) + cs.uniform();
    const VertexId to = topology_->neighbor(u, cs.below(deg));
    const Mark mark = (cs.bits() & 1U) ? Mark::XOR : Mark::OR;
    if (time > 0.0 && time <= horizon_) out.push_back({time, u, to, mark});
  }
}

std::optional<Arrow> ArrowStream::next_from(VertexId u, double t) const {
  if (explicit_) {
    const auto& list = by_source_.at(u);
    auto it = std::upper_bound(list.begin(), list.end(), t,
                               [](double x, const Arrow& a) { return x < a.time; });
    if (it == list.end()) return std::nullopt;
    return *it;
  }
  const std::uint32_t deg = topology_->degree();
  std::uint64_t b = t > 0.0 ? static_cast<std::uint64_t>(std::floor(t)) : 0;
  for (; static_cast<double>(b) <= horizon_; ++b) {
    // Same draw order as bucket(), without materialising the arrows.
    CounterStream cs(key_seed(seed_, u, b, kArrowTag));
    const std::uint32_t count = poisson_one(cs);
    double best = std::numeric_limits<double>::infinity();
    VertexId best_to = 0;
    Mark best_mark = Mark::OR;
    for (std::uint32_t i = 0; i < count; ++i) {
      const double time = static_cast<double>(b) + cs.uniform();
      const std::uint32_t k = cs.below(deg);
      const std::uint64_t mark_bits = cs.bits();
      if (time > t && time > 0.0 && time < best) {
        best = time;
        best_to = topology_->neighbor(u, k);
        best_mark = (mark_bits & 1U) ? Mark::XOR : Mark::OR;
      }
    }
    if (best <= horizon_) return Arrow{best, u, best_to, best_mark};
    if (best != std::numeric_limits<double>::infinity()) return std::nullopt;
  }
  return std::nullopt;
}

std::vector<Arrow> ArrowStream::materialize_all() const {
  std::vector<Arrow> out;
  if (explicit_) {
    for (const auto& list : by_source_) out.insert(out.end(), list.begin(), list.end());
  } else {
    for (VertexId u = 0; u < topology_->vertex_count(); ++u)
      for (std::uint64_t b = 0; static_cast<double>(b) <= horizon_; ++b) bucket(u, b, out);
  }
  std::sort(out.begin(), out.end(), [](const Arrow& x, const Arrow& y) {
    return x.time != y.time ? x.time < y.time : x.from < y.from;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Gate trees

GateTree GateTree::leaf() {
  GateTree t;
  t.nodes_.push_back({});
  t.leaves_ = 1;
  return t;
}

std::int32_t GateTree::append(const GateTree& t) {
  const auto base = static_cast<std::int32_t>(nodes_.size());
  for (Node n : t.nodes_) {
    if (!n.is_leaf()) {
      n.left += base;
      n.right += base;
    }
    nodes_.push_back(n);
  }
  return base;
}

GateTree GateTree::join(Mark mark, const GateTree& left, const GateTree& right) {
  if (left.leaves_ == 0 || right.leaves_ == 0) throw std::invalid_argument("join: empty subtree");
  GateTree t;
  t.nodes_.reserve(1 + left.nodes_.size() + right.nodes_.size());
  t.nodes_.push_back({});
  const std::int32_t l = t.append(left);
  const std::int32_t r = t.append(right);
  t.nodes_[0] = {l, r, mark};
  t.leaves_ = left.leaves_ + right.leaves_;
  return t;
}

GateTree GateTree::caterpillar(std::span<const Mark> marks) {
  GateTree t = leaf();
  for (std::size_t i = marks.size(); i-- > 0;) t = join(marks[i], t, leaf());
  return t;
}

GateTree GateTree::caterpillar_shape(std::uint32_t leaves) {
  if (leaves == 0) throw std::invalid_argument("caterpillar: needs at least one leaf");
  const std::vector<Mark> marks(leaves - 1, Mark::OR);
  return caterpillar(marks);
}

GateTree GateTree::random_shape(std::uint32_t leaves, Rng& rng) {
  if (leaves == 0) throw std::invalid_argument("random_shape: needs at least one leaf");
  if (leaves == 1) return leaf();
  const std::uint32_t k = 1 + rng.below(leaves - 1);
  GateTree l = random_shape(k, rng);
  GateTree r = random_shape(leaves - k, rng);
  return join(Mark::OR, l, r);
}

std::vector<std::int32_t> GateTree::internal_postorder() const {
  std::vector<std::int32_t> order;
  if (nodes_.empty()) return order;
  order.reserve(internal_count());
  std::vector<std::pair<std::int32_t, bool>> stack{{0, false}};
  while (!stack.empty()) {
    auto [i, expanded] = stack.back();
    stack.pop_back();
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf()) continue;
    if (expanded) {
      order.push_back(i);
    } else {
      stack.push_back({i, true});
      stack.push_back({n.right, false});
      stack.push_back({n.left, false});
    }
  }
  return order;
}

GateTree GateTree::with_marks(std::span<const Mark> marks) const {
  const auto order = internal_postorder();
  if (marks.size() != order.size()) throw std::invalid_argument("with_marks: one mark per internal node");
  GateTree t = *this;
  for (std::size_t i = 0; i < order.size(); ++i) t.nodes_[static_cast<std::size_t>(order[i])].mark = marks[i];
  return t;
}

bool evaluate_gate_tree(const GateTree& tree) {
  const auto nodes = tree.nodes();
  if (nodes.empty()) throw std::invalid_argument("evaluate: empty tree");
  std::vector<std::uint8_t> value(nodes.size(), 1);
  for (std::int32_t i : tree.internal_postorder()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    const bool a = value[static_cast<std::size_t>(n.left)];
    const bool b = value[static_cast<std::size_t>(n.right)];
    value[static_cast<std::size_t>(i)] = n.mark == Mark::OR ? (a || b) : (a != b);
  }
  return value[0];
}

Dyadic goodness_probability_exact(const GateTree& shape) {
  const auto nodes = shape.nodes();
  if (nodes.empty()) throw std::invalid_argument("goodness: empty tree");
  std::vector<Dyadic> q(nodes.size(), Dyadic::one());
  for (std::int32_t i : shape.internal_postorder()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    q[static_cast<std::size_t>(i)] = gate_combine(q[static_cast<std::size_t>(n.left)], q[static_cast<std::size_t>(n.right)]);
  }
  return q[0];
}

double goodness_probability(const GateTree& shape) {
  const auto nodes = shape.nodes();
  if (nodes.empty()) throw std::invalid_argument("goodness: empty tree");
  std::vector<double> q(nodes.size(), 1.0);
  for (std::int32_t i : shape.internal_postorder()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    const double a = q[static_cast<std::size_t>(n.left)];
    const double b = q[static_cast<std::size_t>(n.right)];
    q[static_cast<std::size_t>(i)] = a + b - 1.5 * a * b;
  }
  return q[0];
}

GateForest::GateForest(std::uint32_t leaves) : nodes_(leaves), count_(leaves, 1) {
  nodes_.reserve(2 * static_cast<std::size_t>(leaves));
  count_.reserve(2 * static_cast<std::size_t>(leaves));
}

std::int32_t GateForest::merge(Mark mark, std::int32_t left, std::int32_t right) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({left, right, mark});
  count_.push_back(count_[static_cast<std::size_t>(left)] + count_[static_cast<std::size_t>(right)]);
  return id;
}

GateTree GateForest::extract(std::int32_t node) const {
  // Preorder copy so that the root lands at index 0.
  GateTree t;
  t.nodes_.reserve(2 * static_cast<std::size_t>(leaf_count(node)) - 1);
  std::vector<std::pair<std::int32_t, std::int32_t>> stack{{node, -1}};  // (forest id, parent slot)
  std::vector<std::uint8_t> is_right{0};
  while (!stack.empty()) {
    const auto [id, parent] = stack.back();
    stack.pop_back();
    const bool right = is_right.back();
    is_right.pop_back();
    const auto slot = static_cast<std::int32_t>(t.nodes_.size());
    const GateTree::Node& src = nodes_[static_cast<std::size_t>(id)];
    t.nodes_.push_back({-1, -1, src.mark});
    if (parent >= 0) {
      auto& p = t.nodes_[static_cast<std::size_t>(parent)];
      (right ? p.right : p.left) = slot;
    }
    if (!src.is_leaf()) {
      stack.push_back({src.right, slot});
      is_right.push_back(1);
      stack.push_back({src.left, slot});
      is_right.push_back(0);
    } else {
      t.nodes_.back().mark = Mark::OR;
    }
  }
  t.leaves_ = leaf_count(node);
  return t;
}

// ---------------------------------------------------------------------------
// Coupled runs

namespace {

/// Coalescing walk plus presence bits, advanced arrow by arrow.
class CoupledRun {
 public:
  explicit CoupledRun(const ArrowStream& arrows)
      : arrows_(arrows),
        n_(arrows.topology().vertex_count()),
        occupied_(n_, 1),
        present_(n_, 1),
        node_(n_),
        next_(n_, std::numeric_limits<double>::infinity()),
        pending_(n_),
        forest_(n_) {
    for (VertexId v = 0; v < n_; ++v) {
      node_[v] = static_cast<std::int32_t>(v);
      schedule(v, 0.0);
    }
  }

  /// Applies every arrow with time <= t.
  void advance_to(double t) {
    while (!queue_.empty() && queue_.top().first <= t) {
      const auto [time, u] = queue_.top();
      queue_.pop();
      if (!occupied_[u] || next_[u] != time) continue;
      fire(u, time);
    }
  }

  bool occupied(VertexId v) const { return occupied_[v]; }
  bool present(VertexId v) const { return present_[v]; }
  std::uint32_t leaves(VertexId v) const { return occupied_[v] ? forest_.leaf_count(node_[v]) : 0; }
  GateTree tree(VertexId v) const { return forest_.extract(node_[v]); }

  CrwSnapshot snapshot(double t) const {
    CrwSnapshot s;
    s.time = t;
    s.occupied = occupied_;
    s.present = present_;
    s.leaves.resize(n_);
    for (VertexId v = 0; v < n_; ++v) s.leaves[v] = leaves(v);
    return s;
  }

 private:
  void schedule(VertexId v, double after) {
    const auto a = arrows_.next_from(v, after);
    if (!a) {
      next_[v] = std::numeric_limits<double>::infinity();
      return;
    }
    next_[v] = a->time;
    pending_[v] = *a;
    queue_.push({a->time, v});
  }

  void fire(VertexId u, double time) {
    const Arrow a = pending_[u];
    const VertexId v = a.to;
    occupied_[u] = 0;
    next_[u] = std::numeric_limits<double>::infinity();
    if (occupied_[v]) {
      // v keeps its own schedule: all particles at v use v's arrows.
      const bool x = present_[u];
      const bool y = present_[v];
      present_[v] = a.mark == Mark::OR ? (x || y) : (x != y);
      node_[v] = forest_.merge(a.mark, node_[u], node_[v]);
    } else {
      occupied_[v] = 1;
      present_[v] = present_[u];
      node_[v] = node_[u];
      schedule(v, time);
    }
    present_[u] = 0;
  }

  const ArrowStream& arrows_;
  std::uint32_t n_;
  std::vector<std::uint8_t> occupied_;
  std::vector<std::uint8_t> present_;
  std::vector<std::int32_t> node_;
  std::vector<double> next_;
  std::vector<Arrow> pending_;
  using Entry = std::pair<double, VertexId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue_;
  GateForest forest_;
};

void check_times(std::span<const double> times, double horizon) {
  if (!std::is_sorted(times.begin(), times.end())) throw std::invalid_argument("times must be sorted");
  for (double t : times)
    if (!(t >= 0.0 && t <= horizon)) throw std::invalid_argument("times must lie in [0, horizon]");
}

}  // namespace

std::vector<CrwSnapshot> run_crw(const ArrowStream& arrows, std::span<const double> times) {
  check_times(times, arrows.horizon());
  CoupledRun run(arrows);
  std::vector<CrwSnapshot> out;
  out.reserve(times.size());
  for (double t : times) {
    run.advance_to(t);
    out.push_back(run.snapshot(t));
  }
  return out;
}

std::vector<CoupledOutcome> run_coupled(const ArrowStream& arrows, std::span<const double> times, bool with_trees) {
  check_times(times, arrows.horizon());
  CoupledRun run(arrows);
  std::vector<CoupledOutcome> out;
  out.reserve(times.size());
  for (double t : times) {
    run.advance_to(t);
    CoupledOutcome o;
    o.time = t;
    o.crw_occupied = run.occupied(kRoot);
    o.dlacs_occupied = o.crw_occupied && run.present(kRoot);
    o.leaf_count = run.leaves(kRoot);
    if (with_trees && o.crw_occupied) o.tree = run.tree(kRoot);
    out.push_back(std::move(o));
  }
  return out;
}

GateTree extract_gate_tree(const ArrowStream& arrows, VertexId root, double t) {
  if (root >= arrows.topology().vertex_count()) throw std::out_of_range("root out of range");
  const double times[] = {t};
  check_times(times, arrows.horizon());
  CoupledRun run(arrows);
  run.advance_to(t);
  if (!run.occupied(root)) throw std::invalid_argument("extract_gate_tree: site is vacant");
  return run.tree(root);
}

DeviationReport goodness_convergence_check(std::uint32_t k, std::span<const GoodnessSample> samples) {
  DeviationReport r;
  r.k = k;
  std::uint64_t good = 0;
  for (const auto& s : samples) {
    if (s.leaf_count < k) continue;
    ++r.n;
    good += s.good;
  }
  if (r.n < 2) return r;
  r.sufficient = true;
  const double n = static_cast<double>(r.n);
  r.estimate = static_cast<double>(good) / n;
  r.std_error = std::sqrt(r.estimate * (1.0 - r.estimate) / (n - 1.0));
  r.deviation = std::abs(r.estimate - 2.0 / 3.0);
  r.bound = 1.0 / k + 3.0 * r.std_error;
  r.pass = r.deviation <= r.bound;
  return r;
}

}  // namespace dlacs
