#pragma once

#include <string>
#include <vector>

#include "fado/floorplan.hpp"
#include "fado/model.hpp"
#include "fado/pipeliner.hpp"

namespace fado {

struct Move {
  int function = 0;
  int from = 0;
  int to = 0;
  friend bool operator==(const Move&, const Move&) = default;
};

// Configuration, floorplan and routing of one design, kept mutually
// consistent by the packer operations. The referenced inputs must outlive it.
class PackState {
 public:
  PackState(const DesignGraph& graph, const QoRLibrary& qor, const DeviceModel& device, const RamGroups& groups,
            Configuration config, std::vector<int> slot_of);

  const DesignGraph& graph() const { return *graph_; }
  const QoRLibrary& qor() const { return *qor_; }
  const DeviceModel& device() const { return *device_; }
  const RamGroups& groups() const { return *groups_; }
  const Configuration& config() const { return config_; }
  const Floorplan& floorplan() const { return floorplan_; }
  const RouteState& routes() const { return pipeliner_.state(); }
  bool routes_within_budget() const { return pipeliner_.within_budget(); }

  int slot_of(int function) const { return floorplan_.slot_of[function]; }
  const ResourceVector& usage(int slot) const { return floorplan_.usage[slot]; }
  ResourceVector budget(int slot) const { return device_->slot_budget(slot); }
  double utilization(int slot) const;
  const ResourceVector& resources_of(int function) const;
  Cycles latency_of(int function) const { return qor_->point(function, config_.chosen[function]).latency; }
  ResourceVector group_usage(int group) const;
  bool slot_hosts_pinned(int slot) const;
  bool slot_empty(int slot) const;

  // Low-level mutations. They keep usage consistent but do not route.
  void set_point(int function, int point);
  void place_group(int group, int slot);

  // Re-routes edges incident to `functions` after a placement change.
  std::optional<RouteDelta> reroute(std::span<const int> functions) {
    return pipeliner_.update(functions, floorplan_.slot_of);
  }
  void unroute(const RouteDelta& delta) { pipeliner_.revert(delta); }

  friend bool operator==(const PackState& a, const PackState& b) {
    return a.config_ == b.config_ && a.floorplan_ == b.floorplan_ && a.routes() == b.routes();
  }

 private:
  const DesignGraph* graph_;
  const QoRLibrary* qor_;
  const DeviceModel* device_;
  const RamGroups* groups_;
  Configuration config_;
  Floorplan floorplan_;
  Pipeliner pipeliner_;
};

struct SlotOverflow {
  int slot = 0;
  Resource resource = Resource::kBram;
  std::int64_t used = 0;
  std::int64_t budget = 0;
};

struct SplitGroup {
  int group = 0;
  std::vector<int> slots;
};

struct SllOverflow {
  int boundary = 0;
  int half = 0;  // column
  std::int64_t used = 0;
  std::int64_t budget = 0;
};

struct LegalityReport {
  std::vector<SlotOverflow> overflows;   // capacity under util_limit
  std::vector<SplitGroup> split_groups;  // RAM groups sharing a slot
  std::vector<SllOverflow> sll;          // SLL budget under sll_limit
  std::vector<std::string> inconsistencies;

  bool legal() const { return overflows.empty() && split_groups.empty() && sll.empty() && inconsistencies.empty(); }
  std::vector<std::string> describe(const PackState& state) const;
};

LegalityReport check_legal(const PackState& state);

struct CriticalResource {
  Resource resource = Resource::kBram;
  double ratio = 0.0;
  double others_mean = 0.0;  // mean ratio of the four remaining resources
};

// Post-add ratios (usage + candidate) / capacity; argmax with ties resolved in
// BRAM < DSP < FF < LUT < URAM order.
CriticalResource critical_resource(const ResourceVector& usage, const ResourceVector& capacity,
                                   const ResourceVector& candidate);

struct PackTarget {
  int function = 0;
  int point = 0;
};

struct OnlineResult {
  bool fit = false;
  std::vector<Move> moves;
  std::vector<RouteDelta> route_deltas;
};

// Worst-fit online packing of a batch of new directive points. All-or-nothing:
// on failure the state is left exactly as it was.
// With allow_moves false only in-place fits are accepted.
OnlineResult online_pack(std::span<const PackTarget> batch, PackState& state, bool allow_moves = true);

struct OfflineResult {
  std::vector<Move> moves;
  int trials = 0;
  std::vector<RouteDelta> route_deltas;
};

// Best-fit-decreasing re-packing without touching the configuration: first
// pushes dataflow units off slots that host pinned (non-dataflow) groups, then
// moves units of the m-th fullest slot into slots 1..m-1 in turn.
OfflineResult offline_repack(PackState& state);

}  // namespace fado
