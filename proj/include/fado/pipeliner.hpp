#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "fado/model.hpp"

namespace fado {

enum class CrossingKind { kDie, kIo };

// One slot-boundary crossing on a FIFO route. For die crossings `boundary` is
// the die-boundary row index and `position` the column (the half). For I/O
// crossings `boundary` is the column gap and `position` the slot row.
struct Crossing {
  int boundary = 0;
  int position = 0;
  CrossingKind kind = CrossingKind::kDie;
  friend bool operator==(const Crossing&, const Crossing&) = default;
};

using Route = std::vector<Crossing>;

struct RouteState {
  std::vector<Route> routes;             // per FIFO edge, canonical order
  std::vector<std::int64_t> sll_used;    // per die-boundary half
  std::vector<int> register_groups;      // per FIFO edge
  friend bool operator==(const RouteState&, const RouteState&) = default;
};

struct RouteResult {
  Route route;
  bool feasible = true;
};

// Monotone staircase route from src_slot to dst_slot. At every die boundary the
// half with the lowest post-assignment SLL utilization (given `used`) is chosen
// among those keeping the route monotone; ties go to the lower column. The
// result is infeasible when a chosen half would exceed its beta-scaled budget.
// Throws for RAM edges.
RouteResult route_edge(const Edge& edge, int src_slot, int dst_slot, const DeviceModel& device,
                       const std::function<std::int64_t(int half)>& used);
RouteResult route_edge(const Edge& edge, int src_slot, int dst_slot, const DeviceModel& device,
                       const RouteState& state);

struct RecomputeResult {
  RouteState state;
  bool feasible = true;
};

// Routes every FIFO edge from scratch in canonical order.
RecomputeResult recompute_all(const DesignGraph& graph, const DeviceModel& device, const std::vector<int>& slot_of);

// Sum over halves of sll_used must equal sum over edges of width * die crossings.
bool sll_conserved(const DesignGraph& graph, const RouteState& state);

struct RouteChange {
  int edge = 0;
  Route before;
  Route after;
};

struct RouteDelta {
  std::vector<RouteChange> changes;
  bool empty() const { return changes.empty(); }
  // Register groups added minus removed over all changed edges.
  int register_delta() const;
};

// Owns a RouteState and keeps it equal to recompute_all() of the current
// floorplan while re-routing only what a move can influence.
//
// Routing decisions depend on the SLL usage of edges earlier in canonical
// order, so a changed route dirties the boundaries it touches for every later
// edge that has a half to choose there. Per-half Fenwick trees answer the
// prefix-usage queries.
class Pipeliner {
 public:
  Pipeliner() = default;
  Pipeliner(const DesignGraph& graph, const DeviceModel& device);

  // Routes everything from scratch; returns whether all SLL budgets hold.
  bool reset(const std::vector<int>& slot_of);

  // `slot_of` already reflects the moves of `moved` functions. On budget
  // violation nothing changes and nullopt is returned.
  std::optional<RouteDelta> update(std::span<const int> moved, const std::vector<int>& slot_of);

  // Undoes a delta returned by update(); deltas must be reverted newest first.
  void revert(const RouteDelta& delta);

  const RouteState& state() const { return state_; }
  bool within_budget() const;

 private:
  std::int64_t prefix_used(int half, int edge) const;
  void set_route(int edge, Route route);
  void fenwick_add(int half, int edge, std::int64_t delta);

  const DesignGraph* graph_ = nullptr;
  const DeviceModel* device_ = nullptr;
  RouteState state_;
  std::vector<std::vector<std::int64_t>> fenwick_;  // per half
  std::vector<std::set<int>> choice_edges_;         // per die boundary
};

}  // namespace fado
