#include "fado/search.hpp"

#include <algorithm>
#include <bit>
#include <map>

#include "fado/error.hpp"

namespace fado {

namespace {

int log2_capped(std::int64_t v) {
  const auto c = static_cast<std::uint64_t>(std::clamp<std::int64_t>(v, 1, 64));
  return std::bit_width(c) - 1;
}

}  // namespace

std::vector<std::vector<LoopInfo>> loop_nests(const std::vector<LoopInfo>& loops) {
  std::map<std::string, std::vector<LoopInfo>> keyed;
  std::vector<std::vector<LoopInfo>> nests;
  for (const LoopInfo& l : loops) {
    if (l.nest.empty()) {
      nests.push_back({l});
    } else {
      keyed[l.nest].push_back(l);
    }
  }
  for (auto& [key, nest] : keyed) {
    std::stable_sort(nest.begin(), nest.end(), [](const LoopInfo& a, const LoopInfo& b) { return a.depth < b.depth; });
    nests.push_back(std::move(nest));
  }
  return nests;
}

LookaheadTerms lookahead_terms(const std::vector<std::vector<LoopInfo>>& nests, LookaheadReading reading) {
  LookaheadTerms t;
  for (const auto& nest : nests) {
    const int n = static_cast<int>(nest.size());
    const int deep = reading == LookaheadReading::kMin ? std::min(3, n) : n;
    const int shallow = reading == LookaheadReading::kMin ? std::min(2, n) : n;
    int s1 = 0, s2 = 0, s3 = 0;
    for (int j = 0; j < deep; ++j) {
      s1 += log2_capped(nest[j].iter_latency);
      s2 += log2_capped(nest[j].bound);
    }
    for (int j = 0; j < shallow; ++j) s3 += log2_capped(nest[j].bound);
    t.n1 = std::max(t.n1, s1);
    t.n2 = std::max(t.n2, s2);
    t.n3 = std::max(t.n3, s3);
  }
  return t;
}

int compute_lookahead_N(const QoRLibrary& qor, const DesignGraph& graph, LookaheadReading reading, int fallback) {
  std::vector<bool> seen(qor.templates().size(), false);
  std::vector<std::vector<LoopInfo>> nests;
  for (int f = 0; f < graph.function_count(); ++f) {
    const int t = qor.template_of(f);
    if (seen[t]) continue;
    seen[t] = true;
    for (auto& nest : loop_nests(qor.templates()[t].loops)) nests.push_back(std::move(nest));
  }
  if (nests.empty()) return fallback;
  return lookahead_terms(nests, reading).total();
}

std::optional<Bottleneck> select_bottleneck(const PackState& state, const std::vector<bool>& excluded) {
  Bottleneck b;
  bool any = false;
  for (int f = 0; f < state.graph().function_count(); ++f) {
    if (excluded[f]) continue;
    const Cycles l = state.latency_of(f);
    if (!any || l > b.l1) {
      if (any) b.l2 = std::max(b.l2, b.l1);
      b.l1 = l;
      b.batch.clear();
      any = true;
    } else if (l < b.l1) {
      b.l2 = std::max(b.l2, l);
    }
    if (l == b.l1) b.batch.push_back(f);
  }
  if (!any) return std::nullopt;
  return b;
}

Pruned prune(const QoRLibrary& qor, int function, Cycles l1, Cycles l2) {
  const auto& points = qor.of(function).points;
  Pruned out;
  for (Cycles bound : {l2, l1}) {
    for (int p = 0; p < static_cast<int>(points.size()); ++p) {
      if (points[p].latency < bound) out.ds.push_back(p);
    }
    if (!out.ds.empty()) break;
  }
  if (!out.ds.empty()) out.dp = out.ds.back();
  return out;
}

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kOnline: return "online";
    case Stage::kOffline: return "offline";
    case Stage::kLookAhead: return "look_ahead";
    case Stage::kLookBack: return "look_back";
    case Stage::kNone: break;
  }
  return "none";
}

double max_slot_utilization(const PackState& state) {
  double m = 0.0;
  for (int s = 0; s < state.device().slot_count(); ++s) m = std::max(m, state.utilization(s));
  return m;
}

double max_sll_utilization(const PackState& state) {
  const DeviceModel& device = state.device();
  double m = 0.0;
  for (int h = 0; h < device.half_count(); ++h) {
    const std::int64_t cap = device.die_boundaries[h / device.width].sll_capacity[h % device.width];
    const std::int64_t used = state.routes().sll_used[h];
    if (cap > 0) {
      m = std::max(m, static_cast<double>(used) / static_cast<double>(cap));
    } else if (used > 0) {
      m = std::max(m, 1e9);
    }
  }
  return m;
}

namespace {

class Runner {
 public:
  Runner(PackState& state, const SearchOptions& options, SearchResult& result)
      : state_(state), options_(options), result_(result) {}

  // One bottleneck iteration. Returns false when nothing is left to optimize.
  bool step(IterationRecord& rec) {
    const auto bottleneck = select_bottleneck(state_, result_.excluded);
    if (!bottleneck) return false;
    rec.batch = bottleneck->batch;
    rec.l1 = bottleneck->l1;
    rec.l2 = bottleneck->l2;
    rec.points.assign(rec.batch.size(), -1);

    const QoRLibrary& qor = state_.qor();
    std::vector<size_t> live;  // positions in rec.batch
    std::vector<int> dp;
    for (size_t i = 0; i < rec.batch.size(); ++i) {
      const int f = rec.batch[i];
      const Pruned pr = prune(qor, f, bottleneck->l1, bottleneck->l2);
      if (!pr.dp) {
        exclude(f, rec);
        continue;
      }
      live.push_back(i);
      dp.push_back(*pr.dp);
    }
    if (live.empty()) return true;

    auto targets_at = [&](const std::vector<int>& pts) {
      std::vector<PackTarget> t;
      for (size_t k = 0; k < live.size(); ++k) t.push_back({rec.batch[live[k]], pts[k]});
      return t;
    };
    auto accept = [&](const std::vector<int>& pts, Stage stage) {
      rec.stage = stage;
      for (size_t k = 0; k < live.size(); ++k) rec.points[live[k]] = pts[k];
    };

    if (online(targets_at(dp), Stage::kOnline, rec)) {
      accept(dp, Stage::kOnline);
      return true;
    }
    if (!options_.frozen && repack_then_online(targets_at(dp), Stage::kOffline, rec)) {
      accept(dp, Stage::kOffline);
      return true;
    }

    // Look-ahead walks down from DP, look-back up towards L1; every member
    // advances one point per step and the window closes when any runs out.
    std::vector<std::vector<int>> ahead(live.size()), back(live.size());
    for (size_t k = 0; k < live.size(); ++k) {
      const auto& points = qor.of(rec.batch[live[k]]).points;
      const Cycles lat = points[dp[k]].latency;
      for (int p = dp[k] - 1; p >= 0; --p) {
        if (points[p].latency < lat) ahead[k].push_back(p);
      }
      for (int p = dp[k] + 1; p < static_cast<int>(points.size()); ++p) {
        if (points[p].latency > lat && points[p].latency < bottleneck->l1) back[k].push_back(p);
      }
    }
    auto window = [&](const std::vector<std::vector<int>>& lists, size_t limit, Stage stage) {
      for (size_t step = 0; step < limit; ++step) {
        std::vector<int> pts;
        for (const auto& l : lists) {
          if (step >= l.size()) return false;
          pts.push_back(l[step]);
        }
        if (fit(targets_at(pts), stage, rec)) {
          accept(pts, stage);
          return true;
        }
      }
      return false;
    };
    if (window(ahead, static_cast<size_t>(std::max(0, result_.lookahead)), Stage::kLookAhead)) return true;
    if (window(back, SIZE_MAX, Stage::kLookBack)) return true;

    for (size_t k : live) exclude(rec.batch[k], rec);
    return true;
  }

 private:
  void exclude(int f, IterationRecord& rec) {
    result_.excluded[f] = true;
    rec.excluded.push_back(f);
  }

  void note(const std::vector<Move>& moves, const std::vector<RouteDelta>& deltas, Stage stage,
            IterationRecord& rec) {
    for (const Move& m : moves) rec.moves.push_back({stage, m});
    for (const RouteDelta& d : deltas) rec.register_delta += d.register_delta();
  }

  bool online(const std::vector<PackTarget>& targets, Stage stage, IterationRecord& rec) {
    OnlineResult r = online_pack(targets, state_, !options_.frozen);
    if (!r.fit) return false;
    note(r.moves, r.route_deltas, stage, rec);
    return true;
  }

  bool repack_then_online(const std::vector<PackTarget>& targets, Stage stage, IterationRecord& rec) {
    OfflineResult off = offline_repack(state_);
    note(off.moves, off.route_deltas, Stage::kOffline, rec);
    return online(targets, stage, rec);
  }

  // Online packing with one retry after offline re-packing.
  bool fit(const std::vector<PackTarget>& targets, Stage stage, IterationRecord& rec) {
    if (online(targets, stage, rec)) return true;
    return !options_.frozen && repack_then_online(targets, stage, rec);
  }

  PackState& state_;
  const SearchOptions& options_;
  SearchResult& result_;
};

}  // namespace

SearchResult run_search(PackState& state, const SearchOptions& options, const IterationObserver& observer) {
  const DesignGraph& graph = state.graph();
  SearchResult result;
  result.excluded.assign(graph.function_count(), false);
  result.lookahead = options.lookahead
                         ? *options.lookahead
                         : compute_lookahead_N(state.qor(), graph, options.reading, options.default_lookahead);
  const int cap = options.iteration_cap.value_or(10 * graph.function_count());
  if (cap < 0) throw Error("iteration cap must be non-negative");
  result.initial_latency = design_latency(graph, state.config(), state.qor());

  Runner runner(state, options, result);
  for (int iter = 0;; ++iter) {
    if (!select_bottleneck(state, result.excluded)) break;
    if (iter >= cap) {
      result.cap_reached = true;
      break;
    }
    IterationRecord rec;
    rec.iter = iter;
    runner.step(rec);
    rec.latency = design_latency(graph, state.config(), state.qor());
    rec.max_util = max_slot_utilization(state);
    rec.max_sll = max_sll_utilization(state);
    if (observer) observer(rec, state);
    result.log.push_back(std::move(rec));
  }
  result.final_latency = design_latency(graph, state.config(), state.qor());
  return result;
}

}  // namespace fado
