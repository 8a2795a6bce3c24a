#include "fado/packer.hpp"

#include <algorithm>
#include <numeric>

#include "fado/error.hpp"

namespace fado {

PackState::PackState(const DesignGraph& graph, const QoRLibrary& qor, const DeviceModel& device,
                     const RamGroups& groups, Configuration config, std::vector<int> slot_of)
    : graph_(&graph), qor_(&qor), device_(&device), groups_(&groups), config_(std::move(config)),
      pipeliner_(graph, device) {
  floorplan_ = Floorplan::from_assignment(std::move(slot_of), config_, qor, device);
  pipeliner_.reset(floorplan_.slot_of);
}

double PackState::utilization(int slot) const {
  return utilization_ratio(floorplan_.usage[slot], device_->slots[slot].capacity);
}

const ResourceVector& PackState::resources_of(int function) const {
  return qor_->point(function, config_.chosen[function]).resources;
}

ResourceVector PackState::group_usage(int group) const {
  return group_resources(*groups_, group, config_, *qor_);
}

bool PackState::slot_hosts_pinned(int slot) const {
  for (int g = 0; g < groups_->count(); ++g) {
    if (groups_->pinned[g] && floorplan_.slot_of[groups_->members[g].front()] == slot) return true;
  }
  return false;
}

bool PackState::slot_empty(int slot) const {
  return std::none_of(floorplan_.slot_of.begin(), floorplan_.slot_of.end(), [&](int s) { return s == slot; });
}

void PackState::set_point(int function, int point) {
  if (point < 0 || point >= qor_->point_count(function)) throw Error("point index out of range");
  ResourceVector& u = floorplan_.usage[floorplan_.slot_of[function]];
  u -= resources_of(function);
  config_.chosen[function] = point;
  u += resources_of(function);
}

void PackState::place_group(int group, int slot) {
  for (int f : groups_->members[group]) {
    const int from = floorplan_.slot_of[f];
    if (from == slot) continue;
    floorplan_.usage[from] -= resources_of(f);
    floorplan_.usage[slot] += resources_of(f);
    floorplan_.slot_of[f] = slot;
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> LegalityReport::describe(const PackState& state) const {
  std::vector<std::string> out;
  const auto& g = state.graph();
  for (const SlotOverflow& o : overflows) {
    out.push_back("capacity: slot " + std::to_string(state.device().slots[o.slot].id) + " " +
                  std::string(kResourceNames[static_cast<int>(o.resource)]) + " uses " + std::to_string(o.used) +
                  " > limit " + std::to_string(o.budget));
  }
  for (const SplitGroup& s : split_groups) {
    std::string names;
    for (int f : state.groups().members[s.group]) names += (names.empty() ? "" : ",") + g.functions[f].name;
    out.push_back("ram-group: {" + names + "} split across " + std::to_string(s.slots.size()) + " slots");
  }
  for (const SllOverflow& s : sll) {
    out.push_back("sll-budget: die boundary " + std::to_string(s.boundary) + " half " + std::to_string(s.half) +
                  " SLL " + std::to_string(s.used) + " > " + std::to_string(s.budget));
  }
  for (const std::string& s : inconsistencies) out.push_back(s);
  return out;
}

LegalityReport check_legal(const PackState& state) {
  LegalityReport report;
  const DeviceModel& device = state.device();
  const Floorplan fresh =
      Floorplan::from_assignment(state.floorplan().slot_of, state.config(), state.qor(), device);
  if (!(fresh.usage == state.floorplan().usage)) report.inconsistencies.push_back("slot usage out of date");
  for (int s = 0; s < device.slot_count(); ++s) {
    const ResourceVector budget = device.slot_budget(s);
    for (int t = 0; t < kNumResources; ++t) {
      if (fresh.usage[s][t] > budget[t]) {
        report.overflows.push_back({s, static_cast<Resource>(t), fresh.usage[s][t], budget[t]});
      }
    }
  }
  const RamGroups& groups = state.groups();
  for (int g = 0; g < groups.count(); ++g) {
    std::vector<int> slots;
    for (int f : groups.members[g]) slots.push_back(fresh.slot_of[f]);
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
    if (slots.size() > 1) report.split_groups.push_back({g, slots});
  }
  const RouteState& routes = state.routes();
  for (int h = 0; h < device.half_count(); ++h) {
    if (routes.sll_used[h] > device.sll_budget(h)) {
      report.sll.push_back({h / device.width, h % device.width, routes.sll_used[h], device.sll_budget(h)});
    }
  }
  return report;
}

CriticalResource critical_resource(const ResourceVector& usage, const ResourceVector& capacity,
                                   const ResourceVector& candidate) {
  std::array<double, kNumResources> ratio{};
  for (int t = 0; t < kNumResources; ++t) {
    if (capacity[t] <= 0) throw Error("critical_resource: non-positive capacity");
    ratio[t] = static_cast<double>(usage[t] + candidate[t]) / static_cast<double>(capacity[t]);
  }
  int best = 0;
  for (int t = 1; t < kNumResources; ++t) {
    if (ratio[t] > ratio[best]) best = t;
  }
  double rest = 0.0;
  for (int t = 0; t < kNumResources; ++t) {
    if (t != best) rest += ratio[t];
  }
  return {static_cast<Resource>(best), ratio[best], rest / (kNumResources - 1)};
}

namespace {

// Undo log for one online_pack call.
struct Journal {
  struct Entry {
    int function = -1;  // set_point entry when >= 0
    int point = 0;
    int group = -1;  // placement entry when >= 0
    int slot = 0;
    std::optional<RouteDelta> delta;
  };
  std::vector<Entry> entries;

  void rollback(PackState& state) {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
      if (it->delta) state.unroute(*it->delta);
      if (it->group >= 0) state.place_group(it->group, it->slot);
      if (it->function >= 0) state.set_point(it->function, it->point);
    }
    entries.clear();
  }
};

double target_size(const PackState& state, const PackTarget& t, const ResourceVector& total) {
  return utilization_ratio(state.qor().point(t.function, t.point).resources, total);
}

// Moves `group` to `slot` if the capacity fits and routing admits it.
bool try_place(PackState& state, int group, int slot, std::vector<Move>& moves, std::vector<RouteDelta>& deltas,
               Journal* journal) {
  if (!(state.usage(slot) + state.group_usage(group)).le(state.budget(slot))) return false;
  const auto& members = state.groups().members[group];
  const int from = state.slot_of(members.front());
  state.place_group(group, slot);
  std::optional<RouteDelta> delta = state.reroute(members);
  if (!delta) {
    state.place_group(group, from);
    return false;
  }
  for (int f : members) moves.push_back({f, from, slot});
  if (journal) journal->entries.push_back({-1, 0, group, from, *delta});
  deltas.push_back(std::move(*delta));
  return true;
}

}  // namespace

OnlineResult online_pack(std::span<const PackTarget> batch, PackState& state, bool allow_moves) {
  const QoRLibrary& qor = state.qor();
  const DeviceModel& device = state.device();
  const RamGroups& groups = state.groups();
  for (const PackTarget& t : batch) {
    if (t.function < 0 || t.function >= state.graph().function_count()) throw Error("online_pack: unknown function");
    if (t.point < 0 || t.point >= qor.point_count(t.function)) throw Error("online_pack: target point not in library");
  }

  // Hardest fits first.
  const ResourceVector total = device.total_capacity();
  std::vector<PackTarget> order(batch.begin(), batch.end());
  std::stable_sort(order.begin(), order.end(), [&](const PackTarget& a, const PackTarget& b) {
    const double sa = target_size(state, a, total), sb = target_size(state, b, total);
    if (sa != sb) return sa > sb;
    return a.function < b.function;
  });

  OnlineResult result;
  Journal journal;
  for (const PackTarget& t : order) {
    const int f = t.function;
    const int current = state.slot_of(f);
    const int old_point = state.config().chosen[f];
    state.set_point(f, t.point);
    journal.entries.push_back({f, old_point, -1, 0, std::nullopt});
    if (state.usage(current).le(state.budget(current))) continue;
    if (!allow_moves) {
      journal.rollback(state);
      return OnlineResult{};
    }

    const int g = groups.group_of[f];
    const ResourceVector need = state.group_usage(g);
    std::vector<int> others;
    std::vector<CriticalResource> cr(device.slot_count());
    for (int s = 0; s < device.slot_count(); ++s) {
      if (s == current) continue;
      others.push_back(s);
      cr[s] = critical_resource(state.usage(s), device.slots[s].capacity, need);
    }
    std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
      if (cr[a].ratio != cr[b].ratio) return cr[a].ratio < cr[b].ratio;
      if (cr[a].others_mean != cr[b].others_mean) return cr[a].others_mean < cr[b].others_mean;
      return a < b;
    });
    bool placed = false;
    for (int s : others) {
      if (try_place(state, g, s, result.moves, result.route_deltas, &journal)) {
        placed = true;
        break;
      }
    }
    if (!placed) {
      journal.rollback(state);
      return OnlineResult{};
    }
  }
  result.fit = true;
  return result;
}

OfflineResult offline_repack(PackState& state) {
  const DeviceModel& device = state.device();
  const RamGroups& groups = state.groups();
  const int slots = device.slot_count();
  OfflineResult result;

  auto units_on = [&](int slot) {
    std::vector<int> units;
    for (int g = 0; g < groups.count(); ++g) {
      if (!groups.pinned[g] && state.slot_of(groups.members[g].front()) == slot) units.push_back(g);
    }
    const ResourceVector& cap = device.slots[slot].capacity;
    std::vector<double> size(groups.count(), 0.0);
    for (int g : units) size[g] = utilization_ratio(state.group_usage(g), cap);
    std::stable_sort(units.begin(), units.end(), [&](int a, int b) { return size[a] > size[b]; });
    return units;
  };
  auto by_fullness = [&](std::vector<int> order) {
    std::vector<double> util(slots);
    for (int s = 0; s < slots; ++s) util[s] = state.utilization(s);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return util[a] > util[b]; });
    return order;
  };
  std::vector<int> all(slots);
  std::iota(all.begin(), all.end(), 0);

  // Dataflow units sharing a slot with a pinned group go elsewhere, fullest
  // feasible destination first. Compaction below does not bring them back.
  std::vector<bool> evicted(groups.count(), false);
  for (int s : by_fullness(all)) {
    if (!state.slot_hosts_pinned(s)) continue;
    for (int g : units_on(s)) {
      std::vector<int> dest;
      for (int d = 0; d < slots; ++d) {
        if (d != s && !state.slot_hosts_pinned(d)) dest.push_back(d);
      }
      for (int d : by_fullness(dest)) {
        ++result.trials;
        if (try_place(state, g, d, result.moves, result.route_deltas, nullptr)) {
          evicted[g] = true;
          break;
        }
      }
    }
  }

  // Compaction schedule over the fullness order fixed at this point.
  const std::vector<int> order = by_fullness(all);
  for (int m = 1; m < slots; ++m) {
    const int src = order[m];
    for (int g : units_on(src)) {
      for (int d = 0; d < m; ++d) {
        const int dst = order[d];
        ++result.trials;
        if (state.slot_empty(dst)) continue;  // nothing to compact into
        if (evicted[g] && state.slot_hosts_pinned(dst)) continue;
        if (try_place(state, g, dst, result.moves, result.route_deltas, nullptr)) break;
      }
    }
  }
  return result;
}

}  // namespace fado
