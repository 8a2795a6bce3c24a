#include "fado/pipeliner.hpp"

#include <algorithm>
#include <queue>

#include "fado/error.hpp"

namespace fado {

namespace {

// (used_a + w) / cap_a < (used_b + w) / cap_b, with a zero capacity treated as
// an infinite ratio.
bool lower_ratio(std::int64_t load_a, std::int64_t cap_a, std::int64_t load_b, std::int64_t cap_b) {
  if (cap_a == 0 || cap_b == 0) return cap_a != 0 && cap_b == 0;
  return static_cast<__int128>(load_a) * cap_b < static_cast<__int128>(load_b) * cap_a;
}

void die_halves(const Route& r, int width, std::vector<int>& out) {
  for (const Crossing& c : r) {
    if (c.kind == CrossingKind::kDie) out.push_back(c.boundary * width + c.position);
  }
}

bool has_choice(const Route& r) {
  bool die = false, io = false;
  for (const Crossing& c : r) (c.kind == CrossingKind::kDie ? die : io) = true;
  return die && io;
}

}  // namespace

RouteResult route_edge(const Edge& edge, int src_slot, int dst_slot, const DeviceModel& device,
                       const std::function<std::int64_t(int half)>& used) {
  if (edge.kind != EdgeKind::kFifo) throw Error("route_edge: RAM edges are never routed across slots");
  const Slot& s = device.slots.at(src_slot);
  const Slot& d = device.slots.at(dst_slot);
  RouteResult result;
  int x = s.x;
  auto cross_columns = [&](int target, int row) {
    while (x != target) {
      const int gap = x < target ? x : x - 1;
      result.route.push_back({gap, row, CrossingKind::kIo});
      x += x < target ? 1 : -1;
    }
  };
  if (s.y != d.y) {
    const int step = d.y > s.y ? 1 : -1;
    for (int y = s.y; y != d.y; y += step) {
      const int boundary = step > 0 ? y : y - 1;
      const int lo = std::min(x, d.x);
      const int hi = std::max(x, d.x);
      int best = -1;
      std::int64_t best_load = 0, best_cap = 0;
      for (int cand = lo; cand <= hi; ++cand) {
        const int half = device.half_index(boundary, cand);
        const std::int64_t load = used(half) + edge.width;
        const std::int64_t cap = device.die_boundaries[boundary].sll_capacity[cand];
        if (best < 0 || lower_ratio(load, cap, best_load, best_cap)) {
          best = cand;
          best_load = load;
          best_cap = cap;
        }
      }
      cross_columns(best, y);
      result.route.push_back({boundary, best, CrossingKind::kDie});
      if (best_load > device.sll_budget(device.half_index(boundary, best))) result.feasible = false;
    }
  }
  cross_columns(d.x, d.y);
  return result;
}

RouteResult route_edge(const Edge& edge, int src_slot, int dst_slot, const DeviceModel& device,
                       const RouteState& state) {
  return route_edge(edge, src_slot, dst_slot, device, [&](int half) { return state.sll_used[half]; });
}

RecomputeResult recompute_all(const DesignGraph& graph, const DeviceModel& device, const std::vector<int>& slot_of) {
  RecomputeResult out;
  const size_t n = graph.fifo_edges.size();
  out.state.routes.resize(n);
  out.state.register_groups.assign(n, 0);
  out.state.sll_used.assign(device.half_count(), 0);
  for (size_t j = 0; j < n; ++j) {
    const Edge& edge = graph.edges[graph.fifo_edges[j]];
    RouteResult r = route_edge(edge, slot_of[edge.src], slot_of[edge.dst], device, out.state);
    for (const Crossing& c : r.route) {
      if (c.kind == CrossingKind::kDie) out.state.sll_used[device.half_index(c.boundary, c.position)] += edge.width;
    }
    out.state.register_groups[j] = static_cast<int>(r.route.size());
    out.state.routes[j] = std::move(r.route);
  }
  for (int h = 0; h < device.half_count(); ++h) {
    if (out.state.sll_used[h] > device.sll_budget(h)) out.feasible = false;
  }
  return out;
}

bool sll_conserved(const DesignGraph& graph, const RouteState& state) {
  std::int64_t halves = 0, edges = 0;
  for (std::int64_t u : state.sll_used) halves += u;
  for (size_t j = 0; j < state.routes.size(); ++j) {
    const std::int64_t w = graph.edges[graph.fifo_edges[j]].width;
    for (const Crossing& c : state.routes[j]) {
      if (c.kind == CrossingKind::kDie) edges += w;
    }
  }
  return halves == edges;
}

int RouteDelta::register_delta() const {
  int d = 0;
  for (const RouteChange& c : changes) d += static_cast<int>(c.after.size()) - static_cast<int>(c.before.size());
  return d;
}

Pipeliner::Pipeliner(const DesignGraph& graph, const DeviceModel& device) : graph_(&graph), device_(&device) {
  const size_t n = graph.fifo_edges.size();
  state_.routes.assign(n, {});
  state_.register_groups.assign(n, 0);
  state_.sll_used.assign(device.half_count(), 0);
  fenwick_.assign(device.half_count(), std::vector<std::int64_t>(n + 1, 0));
  choice_edges_.assign(std::max(0, device.height - 1), {});
}

void Pipeliner::fenwick_add(int half, int edge, std::int64_t delta) {
  auto& tree = fenwick_[half];
  for (size_t i = static_cast<size_t>(edge) + 1; i < tree.size(); i += i & (~i + 1)) tree[i] += delta;
}

std::int64_t Pipeliner::prefix_used(int half, int edge) const {
  const auto& tree = fenwick_[half];
  std::int64_t sum = 0;
  for (size_t i = static_cast<size_t>(edge); i > 0; i -= i & (~i + 1)) sum += tree[i];
  return sum;
}

void Pipeliner::set_route(int edge, Route route) {
  const std::int64_t w = graph_->edges[graph_->fifo_edges[edge]].width;
  Route& cur = state_.routes[edge];
  const bool had_choice = has_choice(cur);
  for (const Crossing& c : cur) {
    if (c.kind != CrossingKind::kDie) continue;
    const int half = device_->half_index(c.boundary, c.position);
    state_.sll_used[half] -= w;
    fenwick_add(half, edge, -w);
    if (had_choice) choice_edges_[c.boundary].erase(edge);
  }
  cur = std::move(route);
  const bool choice = has_choice(cur);
  for (const Crossing& c : cur) {
    if (c.kind != CrossingKind::kDie) continue;
    const int half = device_->half_index(c.boundary, c.position);
    state_.sll_used[half] += w;
    fenwick_add(half, edge, w);
    if (choice) choice_edges_[c.boundary].insert(edge);
  }
  state_.register_groups[edge] = static_cast<int>(cur.size());
}

bool Pipeliner::reset(const std::vector<int>& slot_of) {
  for (auto& tree : fenwick_) std::fill(tree.begin(), tree.end(), 0);
  for (auto& s : choice_edges_) s.clear();
  std::fill(state_.sll_used.begin(), state_.sll_used.end(), 0);
  for (auto& r : state_.routes) r.clear();
  std::fill(state_.register_groups.begin(), state_.register_groups.end(), 0);
  for (size_t j = 0; j < state_.routes.size(); ++j) {
    const Edge& edge = graph_->edges[graph_->fifo_edges[j]];
    const int idx = static_cast<int>(j);
    RouteResult r = route_edge(edge, slot_of[edge.src], slot_of[edge.dst], *device_,
                               [&](int half) { return prefix_used(half, idx); });
    set_route(idx, std::move(r.route));
  }
  return within_budget();
}

bool Pipeliner::within_budget() const {
  for (int h = 0; h < device_->half_count(); ++h) {
    if (state_.sll_used[h] > device_->sll_budget(h)) return false;
  }
  return true;
}

std::optional<RouteDelta> Pipeliner::update(std::span<const int> moved, const std::vector<int>& slot_of) {
  const size_t n = state_.routes.size();
  std::vector<char> queued(n, 0);
  std::priority_queue<int, std::vector<int>, std::greater<>> pending;
  for (int f : moved) {
    for (int j : graph_->incident_fifo[f]) {
      if (!queued[j]) {
        queued[j] = 1;
        pending.push(j);
      }
    }
  }
  const std::vector<std::int64_t> before_used = state_.sll_used;
  RouteDelta delta;
  std::vector<int> touched;
  while (!pending.empty()) {
    const int j = pending.top();
    pending.pop();
    const Edge& edge = graph_->edges[graph_->fifo_edges[j]];
    RouteResult r = route_edge(edge, slot_of[edge.src], slot_of[edge.dst], *device_,
                               [&](int half) { return prefix_used(half, j); });
    if (r.route == state_.routes[j]) continue;
    touched.clear();
    die_halves(state_.routes[j], device_->width, touched);
    die_halves(r.route, device_->width, touched);
    delta.changes.push_back({j, state_.routes[j], r.route});
    set_route(j, std::move(r.route));
    for (int half : touched) {
      const auto& dependents = choice_edges_[half / device_->width];
      for (auto it = dependents.upper_bound(j); it != dependents.end(); ++it) {
        if (!queued[*it]) {
          queued[*it] = 1;
          pending.push(*it);
        }
      }
    }
  }
  for (int h = 0; h < device_->half_count(); ++h) {
    if (state_.sll_used[h] > before_used[h] && state_.sll_used[h] > device_->sll_budget(h)) {
      revert(delta);
      return std::nullopt;
    }
  }
  return delta;
}

void Pipeliner::revert(const RouteDelta& delta) {
  for (auto it = delta.changes.rbegin(); it != delta.changes.rend(); ++it) set_route(it->edge, it->before);
}

}  // namespace fado
