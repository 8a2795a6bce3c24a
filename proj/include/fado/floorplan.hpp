#pragma once

#include <string>
#include <vector>

#include "fado/model.hpp"

namespace fado {

// Connected components of the RAM-edge relation. Functions of one group must
// share a slot. A group is pinned when it holds a non-dataflow function.
struct RamGroups {
  std::vector<int> group_of;
  std::vector<std::vector<int>> members;
  std::vector<bool> pinned;

  int count() const { return static_cast<int>(members.size()); }
};

RamGroups build_ram_groups(const DesignGraph& graph);

ResourceVector group_resources(const RamGroups& groups, int group, const Configuration& config,
                               const QoRLibrary& qor);

struct Floorplan {
  std::vector<int> slot_of;           // function -> slot index
  std::vector<ResourceVector> usage;  // slot -> summed chosen-point resources

  // Recomputes usage from the assignment.
  static Floorplan from_assignment(std::vector<int> slot_of, const Configuration& config, const QoRLibrary& qor,
                                   const DeviceModel& device);
  friend bool operator==(const Floorplan&, const Floorplan&) = default;
};

// Total width of FIFO edges whose endpoints sit on different slots.
std::int64_t cut_width(const DesignGraph& graph, const Floorplan& fp);

struct Bisection {
  int depth = 0;
  std::string axis;  // "row" or "column"
  std::int64_t cut = 0;
  bool exact = false;
};

struct InitResult {
  Floorplan floorplan;
  std::int64_t cut = 0;             // total crossing FIFO width
  std::vector<Bisection> bisections;
  double limit_used = 0.0;
  std::vector<std::string> warnings;
};

// Units (RAM groups) at or below this count are bisected by exhaustive search.
inline constexpr int kExactBisectionLimit = 20;

// Recursive row-then-column bisection minimizing crossing FIFO width with both
// sides kept under util_limit. Retries once at limit 1.0, then throws
// InfeasibleError naming the offending group.
InitResult min_cut_initial(const DesignGraph& graph, const QoRLibrary& qor, const Configuration& config,
                           const DeviceModel& device, const RamGroups& groups);

// Largest group first onto the least-utilized feasible slot.
InitResult balanced_initial(const DesignGraph& graph, const QoRLibrary& qor, const Configuration& config,
                            const DeviceModel& device, const RamGroups& groups);

}  // namespace fado
