#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fado/model.hpp"
#include "fado/packer.hpp"

namespace fado {

inline constexpr int kDefaultLookahead = 8;

enum class LookaheadReading { kMin, kMax };

// Look-ahead step count from loop metadata: per loop nest, the innermost
// min(3, n) levels (all levels under kMax) contribute floor(log2(min(64, IL)))
// and floor(log2(min(64, B))); the innermost min(2, n) levels contribute
// floor(log2(min(64, B))) again. Each term is maximized over nests. Returns
// `fallback` when no template used by the design carries loops.
int compute_lookahead_N(const QoRLibrary& qor, const DesignGraph& graph, LookaheadReading reading = LookaheadReading::kMin,
                        int fallback = kDefaultLookahead);

struct LookaheadTerms {
  int n1 = 0;
  int n2 = 0;
  int n3 = 0;
  int total() const { return n1 + n2 + n3; }
};

// Look-ahead terms over explicit loop nests, each ordered innermost first.
LookaheadTerms lookahead_terms(const std::vector<std::vector<LoopInfo>>& nests, LookaheadReading reading);

// Groups a template's loops by nest key (a loop without one is its own nest),
// innermost first.
std::vector<std::vector<LoopInfo>> loop_nests(const std::vector<LoopInfo>& loops);

struct Bottleneck {
  std::vector<int> batch;  // function indices, ascending
  Cycles l1 = 0;
  Cycles l2 = 0;  // largest latency strictly below l1, 0 if none
};

std::optional<Bottleneck> select_bottleneck(const PackState& state, const std::vector<bool>& excluded);

struct Pruned {
  std::vector<int> ds;    // point indices, latency ascending
  std::optional<int> dp;  // largest-latency member of ds
};

// Points faster than l2; when none is, points faster than l1.
Pruned prune(const QoRLibrary& qor, int function, Cycles l1, Cycles l2);

enum class Stage { kNone, kOnline, kOffline, kLookAhead, kLookBack };
std::string_view stage_name(Stage stage);

struct StagedMove {
  Stage stage = Stage::kNone;
  Move move;
};

struct IterationRecord {
  int iter = 0;
  std::vector<int> batch;
  Cycles l1 = 0;
  Cycles l2 = 0;
  Stage stage = Stage::kNone;        // stage that accepted, kNone on exclusion
  std::vector<int> points;           // accepted point per batch member, -1 if none
  std::vector<int> excluded;         // functions excluded in this iteration
  std::vector<StagedMove> moves;
  int register_delta = 0;
  Cycles latency = 0;  // design latency after the iteration
  double max_util = 0.0;
  double max_sll = 0.0;
};

struct SearchOptions {
  std::optional<int> lookahead;  // overrides compute_lookahead_N
  LookaheadReading reading = LookaheadReading::kMin;
  int default_lookahead = kDefaultLookahead;
  std::optional<int> iteration_cap;  // default 10 * functions
  bool frozen = false;               // in-place fits only, no packer moves
};

struct SearchResult {
  std::vector<IterationRecord> log;
  std::vector<bool> excluded;
  int lookahead = 0;
  bool cap_reached = false;
  Cycles initial_latency = 0;
  Cycles final_latency = 0;
};

using IterationObserver = std::function<void(const IterationRecord&, const PackState&)>;

double max_slot_utilization(const PackState& state);
double max_sll_utilization(const PackState& state);

// Bottleneck-guided co-optimization loop. `state` must hold a legal booted
// floorplan; it is left legal after every iteration.
SearchResult run_search(PackState& state, const SearchOptions& options = {}, const IterationObserver& observer = {});

}  // namespace fado
