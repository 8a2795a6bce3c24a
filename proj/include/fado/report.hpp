#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fado/floorplan.hpp"
#include "fado/model.hpp"
#include "fado/packer.hpp"
#include "fado/search.hpp"
#include "json.hpp"

namespace fado {

inline constexpr std::string_view kToolVersion = "0.3.0";

// Parsed inputs plus their source documents. PackState keeps pointers into a
// Problem, so keep it at a fixed address once states exist.
struct Problem {
  nlohmann::json design_json;
  nlohmann::json qor_json;
  nlohmann::json device_json;
  DesignGraph graph;
  QoRLibrary qor;
  DeviceModel device;
  RamGroups groups;
};

struct LimitOverrides {
  std::optional<double> util_limit;
  std::optional<double> sll_limit;
};

std::unique_ptr<Problem> make_problem(nlohmann::json design, nlohmann::json qor, nlohmann::json device,
                                      const LimitOverrides& overrides = {});

enum class InitialKind { kMinCut, kBalanced };
InitialKind parse_initial(const std::string& name);
std::string_view initial_name(InitialKind kind);
InitResult boot(const Problem& p, InitialKind kind);

struct RunManifest {
  nlohmann::json inputs = nlohmann::json::object();  // role -> path
  nlohmann::json flags = nlohmann::json::object();
  std::string started;
  std::string finished;
  double wall_seconds = 0.0;
};

std::string utc_timestamp();

nlohmann::json route_state_json(const Problem& p, const RouteState& routes);
nlohmann::json floorplan_json(const Problem& p, const PackState& state, const InitResult* init = nullptr);
nlohmann::json result_json(const Problem& p, const RunManifest& manifest, InitialKind initial, const InitResult& init,
                           const SearchResult& search, const PackState& state);

// A result-shaped document for an arbitrary state (oracle witnesses,
// counterexamples); check_result() accepts it.
nlohmann::json state_document(const Problem& p, const Configuration& config, const std::vector<int>& slot_of);

// Iteration rows followed by the move rows of each iteration.
std::string trace_csv(const Problem& p, const SearchResult& search);
std::string directives_text(const Problem& p, const Configuration& config);
std::string tcl_stub(const Problem& p, const Configuration& config);

// A result document turned back into a problem and a state description.
struct LoadedResult {
  std::unique_ptr<Problem> problem;
  Configuration config;
  std::vector<int> slot_of;
  Cycles latency = 0;
};

LoadedResult load_result(const nlohmann::json& result);

// Replays an emitted result: legality, routing against a fresh recompute,
// SLL conservation of the stored table and the stored latency.
std::vector<std::string> check_result(const nlohmann::json& result);

}  // namespace fado
