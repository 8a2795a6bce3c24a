#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fado/floorplan.hpp"
#include "fado/model.hpp"
#include "fado/pipeliner.hpp"

namespace fado {

inline constexpr int kOracleMaxFunctions = 12;
inline constexpr std::int64_t kOracleDefaultBudget = 20'000'000;

enum class OracleStatus { kOptimal, kInfeasible, kBudgetExceeded };
std::string_view oracle_status_name(OracleStatus s);

// How SLL feasibility of a witness floorplan was established.
enum class RoutingProof { kGreedy, kExact };

struct Witness {
  Configuration config;
  std::vector<int> slot_of;
  RoutingProof routing = RoutingProof::kGreedy;
};

struct OracleResult {
  OracleStatus status = OracleStatus::kInfeasible;
  Cycles latency = 0;
  std::optional<Witness> witness;
  std::int64_t nodes = 0;
};

struct OracleLimits {
  std::int64_t node_budget = kOracleDefaultBudget;
  int max_functions = kOracleMaxFunctions;
};

// Existence of a legal slot assignment for a fixed configuration.
// Assignments are explored group by group in slot order; the first one whose
// canonical greedy routing meets the SLL budgets wins. When none does, an assignment
// admitting some monotone half choice is returned with RoutingProof::kExact.
class FloorplanSearch {
 public:
  FloorplanSearch(const DesignGraph& graph, const QoRLibrary& qor, const DeviceModel& device, const RamGroups& groups);

  // nullopt when no legal floorplan exists or the node budget ran out
  // (`exhausted` tells which).
  std::optional<Witness> find(const Configuration& config, std::int64_t& nodes, std::int64_t budget,
                              bool& exhausted) const;

 private:
  bool exact_routing(const std::vector<int>& slot_of, std::int64_t& nodes, std::int64_t budget) const;

  const DesignGraph* graph_;
  const QoRLibrary* qor_;
  const DeviceModel* device_;
  const RamGroups* groups_;
};

// Exact minimum design latency. Throws fado::Error when the instance is over
// the function guard. Ties resolve to the lexicographically smallest
// configuration (point indices), then slot assignment.
OracleResult solve(const DesignGraph& graph, const QoRLibrary& qor, const DeviceModel& device,
                   const OracleLimits& limits = {});

enum class Verdict { kOptimal, kCounterexample, kInconclusive };
std::string_view verdict_name(Verdict v);

struct VerifyOptions {
  std::int64_t node_budget = kOracleDefaultBudget;
  // Configurations below this count are enumerated exhaustively; larger
  // spaces are sampled.
  std::int64_t exhaustive_limit = 1'000'000;
  int samples = 2000;
  std::uint64_t seed = 2022;
};

struct VerifyResult {
  Verdict verdict = Verdict::kInconclusive;
  std::optional<Witness> counterexample;
  Cycles counterexample_latency = 0;
  bool exhaustive = true;
  double better = 0.0;       // size of the better-latency set (estimated when sampled)
  std::int64_t checked = 0;  // configurations that needed a floorplan search
  double coverage = 0.0;     // fraction of the better-latency set decided
  std::int64_t nodes = 0;
};

// Decides whether any configuration with design latency strictly below
// `latency` admits a legal floorplan.
VerifyResult verify_optimal(const DesignGraph& graph, const QoRLibrary& qor, const DeviceModel& device,
                            Cycles latency, const VerifyOptions& options = {});

}  // namespace fado
