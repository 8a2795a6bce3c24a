#include "fado/oracle.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "fado/error.hpp"

namespace fado {

std::string_view oracle_status_name(OracleStatus s) {
  switch (s) {
    case OracleStatus::kOptimal: return "optimal";
    case OracleStatus::kInfeasible: return "infeasible";
    case OracleStatus::kBudgetExceeded: return "budget_exceeded";
  }
  return "?";
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kOptimal: return "optimal";
    case Verdict::kCounterexample: return "counterexample";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

struct BudgetExceeded {};

void tick(std::int64_t& nodes, std::int64_t budget) {
  if (++nodes > budget) throw BudgetExceeded{};
}

// Groups ordered by their smallest member so that slot-ordered DFS yields the
// lexicographically smallest function -> slot vector first.
std::vector<int> group_order(const RamGroups& groups) {
  std::vector<int> order(groups.count());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return *std::min_element(groups.members[a].begin(), groups.members[a].end()) <
           *std::min_element(groups.members[b].begin(), groups.members[b].end());
  });
  return order;
}

}  // namespace

FloorplanSearch::FloorplanSearch(const DesignGraph& graph, const QoRLibrary& qor, const DeviceModel& device,
                                 const RamGroups& groups)
    : graph_(&graph), qor_(&qor), device_(&device), groups_(&groups) {}

bool FloorplanSearch::exact_routing(const std::vector<int>& slot_of, std::int64_t& nodes,
                                    std::int64_t budget) const {
  const DeviceModel& device = *device_;
  std::vector<std::int64_t> load(device.half_count(), 0);
  struct Choice {
    int y0, step, rows, x0, x1;
    std::int64_t width;
  };
  std::vector<Choice> choices;
  for (int j : graph_->fifo_edges) {
    const Edge& e = graph_->edges[j];
    const Slot& s = device.slots[slot_of[e.src]];
    const Slot& d = device.slots[slot_of[e.dst]];
    if (s.y == d.y) continue;
    const int step = d.y > s.y ? 1 : -1;
    const int rows = std::abs(d.y - s.y);
    if (s.x == d.x) {
      for (int k = 0, y = s.y; k < rows; ++k, y += step) {
        load[device.half_index(step > 0 ? y : y - 1, s.x)] += e.width;
      }
    } else {
      choices.push_back({s.y, step, rows, s.x, d.x, e.width});
    }
  }
  for (int h = 0; h < device.half_count(); ++h) {
    if (load[h] > device.sll_budget(h)) return false;
  }
  // Each choice edge picks a monotone column per crossed boundary.
  std::function<bool(size_t, int, int, int)> go = [&](size_t i, int k, int y, int x) -> bool {
    if (i == choices.size()) return true;
    const Choice& c = choices[i];
    if (k == c.rows) {
      if (i + 1 == choices.size()) return true;
      return go(i + 1, 0, choices[i + 1].y0, choices[i + 1].x0);
    }
    tick(nodes, budget);
    const int boundary = c.step > 0 ? y : y - 1;
    const int dir = c.x1 > c.x0 ? 1 : -1;
    for (int col = x;; col += dir) {
      const int h = device.half_index(boundary, col);
      if (load[h] + c.width <= device.sll_budget(h)) {
        load[h] += c.width;
        const bool ok = go(i, k + 1, y + c.step, col);
        load[h] -= c.width;
        if (ok) return true;
      }
      if (col == c.x1) break;
    }
    return false;
  };
  if (choices.empty()) return true;
  return go(0, 0, choices[0].y0, choices[0].x0);
}

std::optional<Witness> FloorplanSearch::find(const Configuration& config, std::int64_t& nodes, std::int64_t budget,
                                             bool& exhausted) const {
  const DeviceModel& device = *device_;
  const RamGroups& groups = *groups_;
  const int slots = device.slot_count();
  const std::vector<int> order = group_order(groups);
  std::vector<ResourceVector> need(groups.count());
  for (int g = 0; g < groups.count(); ++g) need[g] = group_resources(groups, g, config, *qor_);
  // suffix[i] = resources of order[i..]
  std::vector<ResourceVector> suffix(order.size() + 1);
  for (int i = static_cast<int>(order.size()) - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + need[order[i]];
  std::vector<ResourceVector> budgets(slots);
  ResourceVector total_budget;
  for (int s = 0; s < slots; ++s) {
    budgets[s] = device.slot_budget(s);
    total_budget += budgets[s];
  }
  exhausted = false;
  if (!suffix[0].le(total_budget)) return std::nullopt;

  std::vector<ResourceVector> used(slots);
  std::vector<int> group_slot(groups.count(), -1);
  std::optional<Witness> fallback;
  std::optional<Witness> found;

  auto slot_vector = [&] {
    std::vector<int> slot_of(graph_->function_count());
    for (int g = 0; g < groups.count(); ++g) {
      for (int f : groups.members[g]) slot_of[f] = group_slot[g];
    }
    return slot_of;
  };
  std::function<bool(size_t)> dfs = [&](size_t i) -> bool {
    tick(nodes, budget);
    if (i == order.size()) {
      std::vector<int> slot_of = slot_vector();
      if (recompute_all(*graph_, device, slot_of).feasible) {
        found = Witness{config, std::move(slot_of), RoutingProof::kGreedy};
        return true;
      }
      if (!fallback && exact_routing(slot_of, nodes, budget)) {
        fallback = Witness{config, std::move(slot_of), RoutingProof::kExact};
      }
      return false;
    }
    // Remaining demand must fit in the remaining slack.
    ResourceVector slack;
    for (int s = 0; s < slots; ++s) slack += budgets[s] - used[s];
    if (!suffix[i].le(slack)) return false;
    const int g = order[i];
    for (int s = 0; s < slots; ++s) {
      const ResourceVector next = used[s] + need[g];
      if (!next.le(budgets[s])) continue;
      used[s] = next;
      group_slot[g] = s;
      const bool done = dfs(i + 1);
      used[s] -= need[g];
      group_slot[g] = -1;
      if (done) return true;
    }
    return false;
  };
  try {
    dfs(0);
  } catch (const BudgetExceeded&) {
    exhausted = true;
    return std::nullopt;
  }
  if (found) return found;
  return fallback;
}

namespace {

// Shared depth-first enumeration of configurations in lexicographic order
// with a latency lower bound and an aggregate resource bound.
class ConfigSearch {
 public:
  ConfigSearch(const DesignGraph& graph, const QoRLibrary& qor, const DeviceModel& device)
      : graph_(graph), qor_(qor), n_(graph.function_count()) {
    min_latency_.resize(n_);
    min_res_.resize(n_ + 1);
    for (int f = 0; f < n_; ++f) {
      min_latency_[f] = qor.point(f, 0).latency;
      for (int p = 1; p < qor.point_count(f); ++p) min_latency_[f] = std::min(min_latency_[f], qor.point(f, p).latency);
    }
    // suffix of component-wise minima
    for (int f = n_ - 1; f >= 0; --f) {
      std::array<std::int64_t, kNumResources> m{};
      for (int t = 0; t < kNumResources; ++t) {
        m[t] = std::numeric_limits<std::int64_t>::max();
        for (int p = 0; p < qor.point_count(f); ++p) m[t] = std::min(m[t], qor.point(f, p).resources[t]);
      }
      min_res_[f] = min_res_[f + 1] + ResourceVector(m[0], m[1], m[2], m[3], m[4]);
    }
    for (int s = 0; s < device.slot_count(); ++s) total_budget_ += device.slot_budget(s);
  }

  // Calls `leaf(config, latency)` for every configuration whose latency is
  // below `cutoff()` and whose aggregate resources fit the device. `leaf`
  // returns false to stop.
  template <class Cutoff, class Leaf>
  void run(Cutoff cutoff, Leaf leaf, std::int64_t& nodes, std::int64_t budget) {
    Configuration config;
    config.chosen.assign(n_, 0);
    std::vector<Cycles> lat(min_latency_);
    ResourceVector used;
    bool stop = false;
    std::function<void(int)> dfs = [&](int f) {
      tick(nodes, budget);
      if (f == n_) {
        const Cycles l = design_latency(graph_, lat);
        if (l < cutoff()) stop = !leaf(config, l);
        return;
      }
      for (int p = 0; p < qor_.point_count(f) && !stop; ++p) {
        const QoRPoint& pt = qor_.point(f, p);
        lat[f] = pt.latency;
        config.chosen[f] = p;
        if (design_latency(graph_, lat) >= cutoff()) continue;
        const ResourceVector next = used + pt.resources;
        if (!(next + min_res_[f + 1]).le(total_budget_)) continue;
        const ResourceVector saved = used;
        used = next;
        dfs(f + 1);
        used = saved;
      }
      lat[f] = min_latency_[f];
      config.chosen[f] = 0;
    };
    dfs(0);
  }

 private:
  const DesignGraph& graph_;
  const QoRLibrary& qor_;
  int n_;
  std::vector<Cycles> min_latency_;
  std::vector<ResourceVector> min_res_;
  ResourceVector total_budget_;
};

}  // namespace

OracleResult solve(const DesignGraph& graph, const QoRLibrary& qor, const DeviceModel& device,
                   const OracleLimits& limits) {
  if (graph.function_count() > limits.max_functions) {
    throw Error("oracle: " + std::to_string(graph.function_count()) + " functions exceed the guard of " +
                std::to_string(limits.max_functions));
  }
  const RamGroups groups = build_ram_groups(graph);
  const FloorplanSearch floorplans(graph, qor, device, groups);
  ConfigSearch search(graph, qor, device);
  OracleResult result;
  Cycles best = std::numeric_limits<Cycles>::max();
  bool exhausted = false;
  try {
    search.run([&] { return best; },
               [&](const Configuration& config, Cycles latency) {
                 bool ran_out = false;
                 auto w = floorplans.find(config, result.nodes, limits.node_budget, ran_out);
                 if (ran_out) throw BudgetExceeded{};
                 if (w) {
                   best = latency;
                   result.witness = std::move(w);
                 }
                 return true;
               },
               result.nodes, limits.node_budget);
  } catch (const BudgetExceeded&) {
    exhausted = true;
  }
  if (result.witness) result.latency = best;
  result.status = exhausted ? OracleStatus::kBudgetExceeded
                            : (result.witness ? OracleStatus::kOptimal : OracleStatus::kInfeasible);
  return result;
}

VerifyResult verify_optimal(const DesignGraph& graph, const QoRLibrary& qor, const DeviceModel& device,
                            Cycles latency, const VerifyOptions& options) {
  const RamGroups groups = build_ram_groups(graph);
  const FloorplanSearch floorplans(graph, qor, device, groups);
  VerifyResult result;

  // Size of the configuration space, saturating.
  std::int64_t space = 1;
  for (int f = 0; f < graph.function_count(); ++f) {
    const std::int64_t q = qor.point_count(f);
    space = space > options.exhaustive_limit / q ? options.exhaustive_limit + 1 : space * q;
  }

  auto decide = [&](const Configuration& config, Cycles l) {
    bool ran_out = false;
    auto w = floorplans.find(config, result.nodes, options.node_budget, ran_out);
    if (ran_out) throw BudgetExceeded{};
    ++result.checked;
    if (!w) return true;
    result.counterexample = std::move(w);
    result.counterexample_latency = l;
    return false;
  };

  if (space <= options.exhaustive_limit) {
    // Count the better-latency set first so that coverage is meaningful.
    std::int64_t better = 0;
    {
      std::vector<Cycles> lat(graph.function_count());
      std::function<void(int)> count = [&](int f) {
        if (f == graph.function_count()) {
          if (design_latency(graph, lat) < latency) ++better;
          return;
        }
        for (int p = 0; p < qor.point_count(f); ++p) {
          lat[f] = qor.point(f, p).latency;
          count(f + 1);
        }
      };
      count(0);
    }
    result.better = static_cast<double>(better);
    ConfigSearch search(graph, qor, device);
    try {
      search.run([&] { return latency; }, decide, result.nodes, options.node_budget);
      result.verdict = result.counterexample ? Verdict::kCounterexample : Verdict::kOptimal;
      result.coverage = 1.0;
    } catch (const BudgetExceeded&) {
      result.verdict = result.counterexample ? Verdict::kCounterexample : Verdict::kInconclusive;
      result.coverage = better > 0 ? static_cast<double>(result.checked) / static_cast<double>(better) : 1.0;
    }
    return result;
  }

  // Uniform sampling over the better-latency set by rejection.
  result.exhaustive = false;
  std::mt19937_64 rng(options.seed);
  std::set<std::vector<int>> seen;
  std::int64_t draws = 0, hits = 0;
  const std::int64_t max_draws = static_cast<std::int64_t>(options.samples) * 1000;
  std::vector<Cycles> lat(graph.function_count());
  Configuration config;
  config.chosen.assign(graph.function_count(), 0);
  try {
    while (static_cast<int>(seen.size()) < options.samples && draws < max_draws) {
      ++draws;
      for (int f = 0; f < graph.function_count(); ++f) {
        std::uniform_int_distribution<int> pick(0, qor.point_count(f) - 1);
        config.chosen[f] = pick(rng);
        lat[f] = qor.point(f, config.chosen[f]).latency;
      }
      const Cycles l = design_latency(graph, lat);
      if (l >= latency) continue;
      ++hits;
      if (!seen.insert(config.chosen).second) continue;
      if (!decide(config, l)) break;
    }
    result.verdict = result.counterexample ? Verdict::kCounterexample : Verdict::kOptimal;
  } catch (const BudgetExceeded&) {
    result.verdict = Verdict::kInconclusive;
  }
  // Better-set size estimated from the acceptance rate.
  double full_space = 1.0;
  for (int f = 0; f < graph.function_count(); ++f) full_space *= qor.point_count(f);
  const double est = draws > 0 ? static_cast<double>(hits) / static_cast<double>(draws) * full_space : 0.0;
  result.better = est;
  result.coverage = est > 0 ? std::min(1.0, static_cast<double>(seen.size()) / est) : 1.0;
  return result;
}

}  // namespace fado
