#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace fado {

using Cycles = std::int64_t;

// Resource kinds in the fixed tie-break order used throughout the packer.
enum class Resource : int { kBram = 0, kDsp = 1, kFf = 2, kLut = 3, kUram = 4 };

inline constexpr int kNumResources = 5;
inline constexpr std::array<std::string_view, kNumResources> kResourceNames = {
    "BRAM", "DSP", "FF", "LUT", "URAM"};

// Non-negative amounts of the five FPGA resource types.
class ResourceVector {
 public:
  using Amount = std::int64_t;

  ResourceVector() = default;
  ResourceVector(Amount bram, Amount dsp, Amount ff, Amount lut, Amount uram);

  Amount operator[](int t) const { return amounts_[static_cast<size_t>(t)]; }
  Amount operator[](Resource r) const { return (*this)[static_cast<int>(r)]; }

  ResourceVector& operator+=(const ResourceVector& other);
  // Throws fado::Error if any component would go negative.
  ResourceVector& operator-=(const ResourceVector& other);

  friend ResourceVector operator+(ResourceVector a, const ResourceVector& b) { return a += b; }
  friend ResourceVector operator-(ResourceVector a, const ResourceVector& b) { return a -= b; }
  friend bool operator==(const ResourceVector&, const ResourceVector&) = default;

  bool is_zero() const;
  // Component-wise a <= b.
  bool le(const ResourceVector& other) const;
  // Component-wise max.
  static ResourceVector max(const ResourceVector& a, const ResourceVector& b);

 private:
  std::array<Amount, kNumResources> amounts_{};
};

// max_t used_t / cap_t. Throws when some used_t > 0 meets cap_t == 0.
double utilization_ratio(const ResourceVector& used, const ResourceVector& cap);

// Per-resource usable amount floor(limit * cap_t).
ResourceVector scaled_budget(const ResourceVector& cap, double limit);

// ---------------------------------------------------------------------------
// Device

struct Slot {
  int id = 0;
  int x = 0;
  int y = 0;
  ResourceVector capacity;
};

// Horizontal die boundary between slot rows y and y + 1. One SLL budget per
// column ("half").
struct DieBoundary {
  int y = 0;
  std::vector<std::int64_t> sll_capacity;
};

struct DeviceModel {
  int width = 1;
  int height = 1;
  std::vector<Slot> slots;                  // indexed by y * width + x
  std::vector<DieBoundary> die_boundaries;  // indexed by y, size height - 1
  std::vector<int> io_boundaries;           // column gaps x | x + 1
  double util_limit = 0.65;
  double sll_limit = 0.90;

  int slot_count() const { return static_cast<int>(slots.size()); }
  int slot_at(int x, int y) const { return y * width + x; }
  // Slot index for an external slot id, or -1.
  int index_of_id(int id) const;
  ResourceVector total_capacity() const;
  ResourceVector slot_budget(int slot) const { return scaled_budget(slots[slot].capacity, util_limit); }
  // Number of die-boundary halves, (height - 1) * width.
  int half_count() const { return (height - 1) * width; }
  int half_index(int boundary_y, int x) const { return boundary_y * width + x; }
  std::int64_t sll_budget(int half) const;

  // Checks grid coverage, boundary completeness and limits; throws fado::Error.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Design

enum class KernelKind { kDataflow, kNonDataflow };
enum class EdgeKind { kFifo, kRam };

struct Function {
  std::string name;
  std::string template_name;  // may be empty; resolved by the QoR library
  int kernel = 0;
};

struct Kernel {
  std::string name;
  KernelKind kind = KernelKind::kDataflow;
  std::vector<int> functions;
};

struct Edge {
  int src = 0;
  int dst = 0;
  EdgeKind kind = EdgeKind::kFifo;
  std::int64_t width = 0;
};

struct DesignGraph {
  std::vector<Kernel> kernels;
  std::vector<Function> functions;
  std::vector<Edge> edges;

  // Derived by finalize().
  std::unordered_map<std::string, int> function_index;
  std::vector<std::vector<int>> kernel_succ;
  std::vector<int> kernel_topo;          // topological order of kernels
  std::vector<int> fifo_edges;           // indices into edges, canonical order
  std::vector<std::vector<int>> incident_fifo;  // function -> indices into fifo_edges

  int function_count() const { return static_cast<int>(functions.size()); }
  int find_function(std::string_view name) const;

  // Builds indices, checks kernel/edge invariants and kernel-level acyclicity.
  void finalize();
};

// ---------------------------------------------------------------------------
// QoR library

struct LoopInfo {
  std::string label;
  std::string nest;    // loops sharing a nest key form one loop nest
  int depth = 1;       // 1 = innermost
  std::int64_t bound = 1;
  std::int64_t min_ii = 1;
  std::int64_t iter_latency = 1;
};

struct QoRPoint {
  std::string id;
  std::map<std::string, std::string> directives;
  Cycles latency = 1;
  ResourceVector resources;
};

inline constexpr std::string_view kBaselineId = "baseline";

struct QoRTemplate {
  std::string name;
  std::vector<LoopInfo> loops;
  std::vector<QoRPoint> points;  // latency ascending
  int baseline = 0;              // index of the no-directive point
  bool baseline_not_slowest = false;

  int find_point(std::string_view id) const;
};

struct NameRule {
  std::string pattern;
  std::string template_name;
};

class QoRLibrary {
 public:
  QoRLibrary() = default;
  QoRLibrary(std::vector<QoRTemplate> templates, std::vector<NameRule> rules);

  // Resolves every function of `graph` to a template. Throws on unresolved or
  // ambiguous names.
  void bind(const DesignGraph& graph);

  const std::vector<QoRTemplate>& templates() const { return templates_; }
  const std::vector<NameRule>& rules() const { return rules_; }
  int find_template(std::string_view name) const;
  int template_of(int function) const { return function_template_[function]; }
  const QoRTemplate& of(int function) const { return templates_[function_template_[function]]; }
  const QoRPoint& point(int function, int p) const { return of(function).points[p]; }
  int point_count(int function) const { return static_cast<int>(of(function).points.size()); }
  int baseline(int function) const { return of(function).baseline; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<QoRTemplate> templates_;
  std::vector<NameRule> rules_;
  std::vector<std::regex> compiled_;
  std::vector<int> function_template_;
  std::vector<std::string> warnings_;
};

// Sorts points latency ascending, then max-utilization ascending, then id.
// Utilization is normalized by the per-resource maximum across `points`.
void sort_points(std::vector<QoRPoint>& points);

// One chosen point index (into the template's sorted list) per function.
struct Configuration {
  std::vector<int> chosen;
  friend bool operator==(const Configuration&, const Configuration&) = default;
};

Configuration baseline_configuration(const DesignGraph& graph, const QoRLibrary& qor);

// Longest kernel-level path, with dataflow kernels costing the max over their
// functions and non-dataflow kernels costing their single function.
Cycles design_latency(const DesignGraph& graph, const Configuration& config, const QoRLibrary& qor);
Cycles design_latency(const DesignGraph& graph, const std::vector<Cycles>& function_latency);

// ---------------------------------------------------------------------------
// JSON ingestion and emission

DeviceModel device_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DeviceModel& device);
DesignGraph design_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DesignGraph& graph);
QoRLibrary qor_from_json(const nlohmann::json& j, const DesignGraph& graph);
nlohmann::json to_json(const QoRLibrary& qor);
nlohmann::json to_json(const ResourceVector& r);
ResourceVector resources_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

DeviceModel load_device(const std::filesystem::path& path);
DesignGraph load_design(const std::filesystem::path& path);
QoRLibrary load_qor(const std::filesystem::path& path, const DesignGraph& graph);

}  // namespace fado
