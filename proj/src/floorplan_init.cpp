#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>

#include "fado/error.hpp"
#include "fado/floorplan.hpp"

namespace fado {

RamGroups build_ram_groups(const DesignGraph& graph) {
  const int n = graph.function_count();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const Edge& e : graph.edges) {
    if (e.kind != EdgeKind::kRam) continue;
    const int a = find(e.src);
    const int b = find(e.dst);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  RamGroups groups;
  groups.group_of.assign(n, -1);
  std::vector<int> root_group(n, -1);
  for (int f = 0; f < n; ++f) {
    const int r = find(f);
    if (root_group[r] < 0) {
      root_group[r] = groups.count();
      groups.members.emplace_back();
      groups.pinned.push_back(false);
    }
    const int g = root_group[r];
    groups.group_of[f] = g;
    groups.members[g].push_back(f);
    if (graph.kernels[graph.functions[f].kernel].kind == KernelKind::kNonDataflow) groups.pinned[g] = true;
  }
  return groups;
}

ResourceVector group_resources(const RamGroups& groups, int group, const Configuration& config,
                               const QoRLibrary& qor) {
  ResourceVector r;
  for (int f : groups.members[group]) r += qor.point(f, config.chosen[f]).resources;
  return r;
}

Floorplan Floorplan::from_assignment(std::vector<int> slot_of, const Configuration& config, const QoRLibrary& qor,
                                     const DeviceModel& device) {
  Floorplan fp;
  fp.slot_of = std::move(slot_of);
  fp.usage.assign(device.slot_count(), ResourceVector{});
  for (size_t f = 0; f < fp.slot_of.size(); ++f) {
    const int s = fp.slot_of[f];
    if (s < 0 || s >= device.slot_count()) throw Error("floorplan: function without a valid slot");
    fp.usage[s] += qor.point(static_cast<int>(f), config.chosen[f]).resources;
  }
  return fp;
}

std::int64_t cut_width(const DesignGraph& graph, const Floorplan& fp) {
  std::int64_t cut = 0;
  for (int e : graph.fifo_edges) {
    const Edge& edge = graph.edges[e];
    if (fp.slot_of[edge.src] != fp.slot_of[edge.dst]) cut += edge.width;
  }
  return cut;
}

namespace {

struct Region {
  int x0, x1, y0, y1;  // half-open
  int slots() const { return (x1 - x0) * (y1 - y0); }
};

std::string describe_group(const DesignGraph& graph, const RamGroups& groups, int g) {
  std::string s = "{";
  for (size_t i = 0; i < groups.members[g].size(); ++i) {
    if (i) s += ",";
    s += graph.functions[groups.members[g][i]].name;
  }
  return s + "}";
}

// Two-way partition of movable units under per-side resource budgets.
class Bipartitioner {
 public:
  Bipartitioner(std::vector<ResourceVector> sizes, std::vector<std::vector<std::pair<int, std::int64_t>>> adj,
                std::array<ResourceVector, 2> budget, std::array<ResourceVector, 2> capacity)
      : sizes_(std::move(sizes)), adj_(std::move(adj)), budget_(budget), capacity_(capacity) {}

  // Returns side per unit, or empty when no split satisfies the budgets.
  std::vector<int> solve(bool& exact) {
    exact = static_cast<int>(sizes_.size()) <= kExactBisectionLimit;
    return exact ? solve_exact() : solve_fm();
  }

  std::int64_t cut_of(const std::vector<int>& side) const {
    std::int64_t cut = 0;
    for (size_t u = 0; u < adj_.size(); ++u) {
      for (auto [v, w] : adj_[u]) {
        if (static_cast<size_t>(v) > u && side[u] != side[v]) cut += w;
      }
    }
    return cut;
  }

 private:
  double balance_of(const std::array<ResourceVector, 2>& load) const {
    return std::max(utilization_ratio(load[0], capacity_[0]), utilization_ratio(load[1], capacity_[1]));
  }

  std::vector<int> solve_exact() {
    const int n = static_cast<int>(sizes_.size());
    std::vector<int> side(n, -1);
    std::vector<int> best;
    std::int64_t best_cut = std::numeric_limits<std::int64_t>::max();
    double best_balance = std::numeric_limits<double>::infinity();
    std::array<ResourceVector, 2> load{};
    std::function<void(int, std::int64_t)> dfs = [&](int u, std::int64_t cut) {
      if (cut > best_cut) return;
      if (u == n) {
        const double bal = balance_of(load);
        if (cut < best_cut || bal < best_balance) {
          best_cut = cut;
          best_balance = bal;
          best = side;
        }
        return;
      }
      for (int s = 0; s < 2; ++s) {
        ResourceVector next = load[s] + sizes_[u];
        if (!next.le(budget_[s])) continue;
        std::int64_t added = 0;
        for (auto [v, w] : adj_[u]) {
          if (v < u && side[v] != s) added += w;
        }
        side[u] = s;
        std::swap(load[s], next);
        dfs(u + 1, cut + added);
        std::swap(load[s], next);
        side[u] = -1;
      }
    };
    dfs(0, 0);
    return best;
  }

  // Size-balanced start followed by Fiduccia-Mattheyses passes.
  std::vector<int> solve_fm() {
    const int n = static_cast<int>(sizes_.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    ResourceVector total_cap = capacity_[0] + capacity_[1];
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return utilization_ratio(sizes_[a], total_cap) > utilization_ratio(sizes_[b], total_cap);
    });
    std::vector<int> side(n, -1);
    std::array<ResourceVector, 2> load{};
    for (int u : order) {
      int pick = -1;
      double pick_util = std::numeric_limits<double>::infinity();
      for (int s = 0; s < 2; ++s) {
        if (!(load[s] + sizes_[u]).le(budget_[s])) continue;
        const double util = utilization_ratio(load[s], capacity_[s]);
        if (util < pick_util) {
          pick = s;
          pick_util = util;
        }
      }
      if (pick < 0) return {};
      side[u] = pick;
      load[pick] += sizes_[u];
    }

    auto gain = [&](int u) {
      std::int64_t g = 0;
      for (auto [v, w] : adj_[u]) g += side[v] != side[u] ? w : -w;
      return g;
    };
    for (int pass = 0; pass < 32; ++pass) {
      std::vector<bool> locked(n, false);
      std::vector<int> moved;
      std::int64_t running = 0;
      std::int64_t best_gain = 0;
      size_t best_prefix = 0;
      for (int step = 0; step < n; ++step) {
        int pick = -1;
        std::int64_t pick_gain = std::numeric_limits<std::int64_t>::min();
        for (int u = 0; u < n; ++u) {
          if (locked[u]) continue;
          const int to = 1 - side[u];
          if (!(load[to] + sizes_[u]).le(budget_[to])) continue;
          const std::int64_t g = gain(u);
          if (g > pick_gain) {
            pick = u;
            pick_gain = g;
          }
        }
        if (pick < 0) break;
        const int from = side[pick];
        load[from] -= sizes_[pick];
        load[1 - from] += sizes_[pick];
        side[pick] = 1 - from;
        locked[pick] = true;
        moved.push_back(pick);
        running += pick_gain;
        if (running > best_gain) {
          best_gain = running;
          best_prefix = moved.size();
        }
      }
      for (size_t i = moved.size(); i > best_prefix; --i) {
        const int u = moved[i - 1];
        load[side[u]] -= sizes_[u];
        side[u] = 1 - side[u];
        load[side[u]] += sizes_[u];
      }
      if (best_gain <= 0) break;
    }
    return side;
  }

  std::vector<ResourceVector> sizes_;
  std::vector<std::vector<std::pair<int, std::int64_t>>> adj_;
  std::array<ResourceVector, 2> budget_;
  std::array<ResourceVector, 2> capacity_;
};

struct BisectContext {
  const DesignGraph& graph;
  const RamGroups& groups;
  const DeviceModel& device;
  const std::vector<ResourceVector>& group_size;
  double limit;
  std::vector<int> group_slot;
  std::vector<Bisection> log;
};

void region_sums(const DeviceModel& d, const Region& r, double limit, ResourceVector& cap, ResourceVector& budget) {
  cap = ResourceVector{};
  budget = ResourceVector{};
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) {
      cap += d.slots[d.slot_at(x, y)].capacity;
      budget += scaled_budget(d.slots[d.slot_at(x, y)].capacity, limit);
    }
  }
}

void bisect(BisectContext& ctx, const Region& region, const std::vector<int>& units, int depth) {
  if (region.slots() == 1) {
    const int slot = ctx.device.slot_at(region.x0, region.y0);
    ResourceVector load;
    for (int g : units) {
      load += ctx.group_size[g];
      ctx.group_slot[g] = slot;
    }
    if (!load.le(scaled_budget(ctx.device.slots[slot].capacity, ctx.limit))) {
      throw InfeasibleError("slot " + std::to_string(ctx.device.slots[slot].id) + " overflows");
    }
    return;
  }
  std::array<Region, 2> halves;
  std::string axis;
  if (region.y1 - region.y0 > 1) {
    const int mid = region.y0 + (region.y1 - region.y0) / 2;
    halves = {Region{region.x0, region.x1, region.y0, mid}, Region{region.x0, region.x1, mid, region.y1}};
    axis = "row";
  } else {
    const int mid = region.x0 + (region.x1 - region.x0) / 2;
    halves = {Region{region.x0, mid, region.y0, region.y1}, Region{mid, region.x1, region.y0, region.y1}};
    axis = "column";
  }

  std::array<ResourceVector, 2> cap, budget;
  for (int s = 0; s < 2; ++s) region_sums(ctx.device, halves[s], ctx.limit, cap[s], budget[s]);

  std::vector<int> local(ctx.groups.count(), -1);
  for (size_t i = 0; i < units.size(); ++i) local[units[i]] = static_cast<int>(i);
  std::vector<ResourceVector> sizes;
  for (int g : units) sizes.push_back(ctx.group_size[g]);
  std::vector<std::vector<std::pair<int, std::int64_t>>> adj(units.size());
  {
    std::map<std::pair<int, int>, std::int64_t> weight;
    for (int e : ctx.graph.fifo_edges) {
      const Edge& edge = ctx.graph.edges[e];
      const int a = local[ctx.groups.group_of[edge.src]];
      const int b = local[ctx.groups.group_of[edge.dst]];
      if (a < 0 || b < 0 || a == b) continue;
      weight[{std::min(a, b), std::max(a, b)}] += edge.width;
    }
    for (auto [key, w] : weight) {
      adj[key.first].emplace_back(key.second, w);
      adj[key.second].emplace_back(key.first, w);
    }
  }

  Bipartitioner part(std::move(sizes), std::move(adj), budget, cap);
  bool exact = false;
  std::vector<int> side = part.solve(exact);
  if (side.empty()) {
    throw InfeasibleError("no " + axis + " bisection fits the resource limit");
  }
  ctx.log.push_back({depth, axis, part.cut_of(side), exact});
  std::array<std::vector<int>, 2> split;
  for (size_t i = 0; i < units.size(); ++i) split[side[i]].push_back(units[i]);
  for (int s = 0; s < 2; ++s) bisect(ctx, halves[s], split[s], depth + 1);
}

// Throws InfeasibleError when some group exceeds every slot's budget.
void check_groups_fit(const DesignGraph& graph, const RamGroups& groups, const std::vector<ResourceVector>& sizes,
                      const DeviceModel& device, double limit) {
  for (int g = 0; g < groups.count(); ++g) {
    bool fits = false;
    for (const Slot& s : device.slots) fits = fits || sizes[g].le(scaled_budget(s.capacity, limit));
    if (!fits) {
      throw InfeasibleError("group " + describe_group(graph, groups, g) + " exceeds every slot at limit " +
                            std::to_string(limit));
    }
  }
}

template <typename Attempt>
InitResult with_retry(const DeviceModel& device, Attempt attempt) {
  try {
    InitResult r = attempt(device.util_limit);
    r.limit_used = device.util_limit;
    return r;
  } catch (const InfeasibleError& first) {
    if (device.util_limit >= 1.0) throw;
    InitResult r;
    try {
      r = attempt(1.0);
    } catch (const InfeasibleError& second) {
      throw InfeasibleError(std::string("initial floorplan infeasible: ") + first.what() + "; at limit 1.0: " +
                            second.what());
    }
    r.limit_used = 1.0;
    r.warnings.push_back(std::string("initial floorplan infeasible at util_limit (") + first.what() +
                         "); booted at limit 1.0");
    return r;
  }
}

std::vector<ResourceVector> all_group_sizes(const RamGroups& groups, const Configuration& config,
                                            const QoRLibrary& qor) {
  std::vector<ResourceVector> sizes;
  for (int g = 0; g < groups.count(); ++g) sizes.push_back(group_resources(groups, g, config, qor));
  return sizes;
}

std::vector<int> expand(const RamGroups& groups, const std::vector<int>& group_slot, int functions) {
  std::vector<int> slot_of(functions, -1);
  for (int g = 0; g < groups.count(); ++g) {
    for (int f : groups.members[g]) slot_of[f] = group_slot[g];
  }
  return slot_of;
}

}  // namespace

InitResult min_cut_initial(const DesignGraph& graph, const QoRLibrary& qor, const Configuration& config,
                           const DeviceModel& device, const RamGroups& groups) {
  const std::vector<ResourceVector> sizes = all_group_sizes(groups, config, qor);
  return with_retry(device, [&](double limit) {
    check_groups_fit(graph, groups, sizes, device, limit);
    BisectContext ctx{graph, groups, device, sizes, limit, std::vector<int>(groups.count(), -1), {}};
    std::vector<int> units(groups.count());
    std::iota(units.begin(), units.end(), 0);
    bisect(ctx, Region{0, device.width, 0, device.height}, units, 0);
    InitResult r;
    r.floorplan = Floorplan::from_assignment(expand(groups, ctx.group_slot, graph.function_count()), config, qor,
                                             device);
    r.cut = cut_width(graph, r.floorplan);
    r.bisections = std::move(ctx.log);
    return r;
  });
}

InitResult balanced_initial(const DesignGraph& graph, const QoRLibrary& qor, const Configuration& config,
                            const DeviceModel& device, const RamGroups& groups) {
  const std::vector<ResourceVector> sizes = all_group_sizes(groups, config, qor);
  const ResourceVector total = device.total_capacity();
  return with_retry(device, [&](double limit) {
    check_groups_fit(graph, groups, sizes, device, limit);
    std::vector<int> order(groups.count());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return utilization_ratio(sizes[a], total) > utilization_ratio(sizes[b], total);
    });
    std::vector<ResourceVector> load(device.slot_count());
    std::vector<int> group_slot(groups.count(), -1);
    for (int g : order) {
      int pick = -1;
      double pick_util = std::numeric_limits<double>::infinity();
      for (int s = 0; s < device.slot_count(); ++s) {
        if (!(load[s] + sizes[g]).le(scaled_budget(device.slots[s].capacity, limit))) continue;
        const double util = utilization_ratio(load[s], device.slots[s].capacity);
        if (util < pick_util) {
          pick = s;
          pick_util = util;
        }
      }
      if (pick < 0) throw InfeasibleError("group " + describe_group(graph, groups, g) + " fits no slot");
      group_slot[g] = pick;
      load[pick] += sizes[g];
    }
    InitResult r;
    r.floorplan = Floorplan::from_assignment(expand(groups, group_slot, graph.function_count()), config, qor, device);
    r.cut = cut_width(graph, r.floorplan);
    return r;
  });
}

}  // namespace fado
