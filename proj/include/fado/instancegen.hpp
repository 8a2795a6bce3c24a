#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fado/model.hpp"
#include "json.hpp"

namespace fado {

struct ArrayInfo {
  std::string name;
  int dims = 1;
};

// One composed directive configuration before costing.
struct DirectiveSkeleton {
  std::map<std::string, std::string> directives;
  std::vector<int> ii;      // per loop, 0 = not pipelined
  std::vector<int> unroll;  // per loop
  std::vector<int> banks;   // per array, 1 = not partitioned
  std::vector<bool> complete;
  std::vector<bool> uram;
};

// Per-loop and per-array choices. The first entry of each is "no directive".
std::vector<int> pipeline_choices(const LoopInfo& loop);  // 0, MinII .. min(4 MinII, IL)
std::vector<int> unroll_choices(const LoopInfo& loop);    // 1, 2, 4, ..., B
struct PartitionChoice {
  std::string type;  // "", block, cyclic, complete
  int dim = 0;
};
std::vector<PartitionChoice> partition_choices(const ArrayInfo& array);

// Cartesian product of all choices. When larger than `cap`, `cap` evenly
// spaced members of the product (in mixed-radix order) are kept; the
// no-directive skeleton is always first.
std::vector<DirectiveSkeleton> gen_directive_space(const std::vector<LoopInfo>& loops,
                                                   const std::vector<ArrayInfo>& arrays, int cap);

enum class Monotonicity { kMonotone, kNonMonotone };

struct GenSpec {
  std::uint64_t seed = 1;
  std::string preset = "mixed";  // toy | mixed | small
  int dataflow_kernels = 4;
  int non_dataflow_kernels = 2;
  int min_functions = 2;  // per dataflow kernel
  int max_functions = 4;
  int min_loops = 1;  // per function
  int max_loops = 2;
  int min_depth = 1;  // per loop nest
  int max_depth = 2;
  int max_points = 12;
  Monotonicity mode = Monotonicity::kNonMonotone;
  std::string device = "u250_lower";  // u250_lower | two_slot
  double fill = 0.35;  // baseline share of the total slot budget
  int kernel_types = 0;  // > 0 shares templates between kernel instances
};

// Defaults for a named preset.
GenSpec preset_spec(const std::string& preset, std::uint64_t seed);

struct Instance {
  nlohmann::json design;
  nlohmann::json qor;
  nlohmann::json device;
};

DeviceModel device_preset(const std::string& name);
Instance gen_instance(const GenSpec& spec);
// The two-slot example with kernels K1 {A, B}, K2 {C}, K3 {D, E}.
Instance toy_instance();
void write_instance(const Instance& inst, const std::filesystem::path& dir);

}  // namespace fado
