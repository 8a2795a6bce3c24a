#include "fado/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "fado/error.hpp"

namespace fado {

using nlohmann::json;

std::unique_ptr<Problem> make_problem(json design, json qor, json device, const LimitOverrides& overrides) {
  auto p = std::make_unique<Problem>();
  p->design_json = std::move(design);
  p->qor_json = std::move(qor);
  p->device_json = std::move(device);
  p->graph = design_from_json(p->design_json);
  p->qor = qor_from_json(p->qor_json, p->graph);
  p->device = device_from_json(p->device_json);
  if (overrides.util_limit) p->device.util_limit = *overrides.util_limit;
  if (overrides.sll_limit) p->device.sll_limit = *overrides.sll_limit;
  p->device.validate();
  p->groups = build_ram_groups(p->graph);
  return p;
}

InitialKind parse_initial(const std::string& name) {
  if (name == "mincut") return InitialKind::kMinCut;
  if (name == "balanced") return InitialKind::kBalanced;
  throw Error("unknown initial floorplan '" + name + "' (mincut | balanced)");
}

std::string_view initial_name(InitialKind kind) { return kind == InitialKind::kMinCut ? "mincut" : "balanced"; }

InitResult boot(const Problem& p, InitialKind kind) {
  const Configuration base = baseline_configuration(p.graph, p.qor);
  return kind == InitialKind::kMinCut ? min_cut_initial(p.graph, p.qor, base, p.device, p.groups)
                                      : balanced_initial(p.graph, p.qor, base, p.device, p.groups);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

json crossing_json(const Crossing& c) {
  return {{"kind", c.kind == CrossingKind::kDie ? "die" : "io"}, {"boundary", c.boundary}, {"position", c.position}};
}

Crossing crossing_from(const json& j) {
  Crossing c;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "die") {
    c.kind = CrossingKind::kDie;
  } else if (kind == "io") {
    c.kind = CrossingKind::kIo;
  } else {
    throw Error("result: unknown crossing kind '" + kind + "'");
  }
  c.boundary = j.at("boundary").get<int>();
  c.position = j.at("position").get<int>();
  return c;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

json route_state_json(const Problem& p, const RouteState& routes) {
  json halves = json::array();
  for (int b = 0; b + 1 < p.device.height; ++b) {
    for (int x = 0; x < p.device.width; ++x) {
      const int h = p.device.half_index(b, x);
      halves.push_back({{"boundary", b}, {"x", x}, {"used", routes.sll_used[h]}, {"budget", p.device.sll_budget(h)}});
    }
  }
  json edges = json::array();
  for (size_t j = 0; j < p.graph.fifo_edges.size(); ++j) {
    const Edge& e = p.graph.edges[p.graph.fifo_edges[j]];
    json crossings = json::array();
    for (const Crossing& c : routes.routes[j]) crossings.push_back(crossing_json(c));
    edges.push_back({{"src", p.graph.functions[e.src].name},
                     {"dst", p.graph.functions[e.dst].name},
                     {"width", e.width},
                     {"register_groups", routes.register_groups[j]},
                     {"crossings", std::move(crossings)}});
  }
  return {{"sll_used", std::move(halves)}, {"edges", std::move(edges)}};
}

json floorplan_json(const Problem& p, const PackState& state, const InitResult* init) {
  json assignment = json::object();
  for (int f = 0; f < p.graph.function_count(); ++f) {
    assignment[p.graph.functions[f].name] = p.device.slots[state.slot_of(f)].id;
  }
  json slots = json::array();
  for (int s = 0; s < p.device.slot_count(); ++s) {
    json members = json::array();
    for (int f = 0; f < p.graph.function_count(); ++f) {
      if (state.slot_of(f) == s) members.push_back(p.graph.functions[f].name);
    }
    slots.push_back({{"id", p.device.slots[s].id},
                     {"x", p.device.slots[s].x},
                     {"y", p.device.slots[s].y},
                     {"usage", to_json(state.usage(s))},
                     {"budget", to_json(state.budget(s))},
                     {"utilization", state.utilization(s)},
                     {"functions", std::move(members)}});
  }
  json out = {{"assignment", std::move(assignment)},
              {"slots", std::move(slots)},
              {"cut_width", cut_width(p.graph, state.floorplan())}};
  if (init) {
    json bis = json::array();
    for (const Bisection& b : init->bisections) {
      bis.push_back({{"depth", b.depth}, {"axis", b.axis}, {"cut", b.cut}, {"exact", b.exact}});
    }
    out["initial"] = {{"cut_width", init->cut}, {"limit_used", init->limit_used}, {"bisections", std::move(bis)}};
  }
  return out;
}

json result_json(const Problem& p, const RunManifest& manifest, InitialKind initial, const InitResult& init,
                 const SearchResult& search, const PackState& state) {
  json config = json::object();
  json assignment = json::object();
  for (int f = 0; f < p.graph.function_count(); ++f) {
    const std::string& name = p.graph.functions[f].name;
    config[name] = p.qor.point(f, state.config().chosen[f]).id;
    assignment[name] = p.device.slots[state.slot_of(f)].id;
  }
  json excluded = json::array();
  for (int f = 0; f < p.graph.function_count(); ++f) {
    if (search.excluded[f]) excluded.push_back(p.graph.functions[f].name);
  }
  json warnings = init.warnings;
  for (const std::string& w : p.qor.warnings()) warnings.push_back(w);

  return {{"tool", {{"name", "fado"}, {"version", std::string(kToolVersion)}}},
          {"manifest",
           {{"inputs", manifest.inputs},
            {"flags", manifest.flags},
            {"started", manifest.started},
            {"finished", manifest.finished},
            {"wall_seconds", manifest.wall_seconds}}},
          {"inputs", {{"design", p.design_json}, {"qor", p.qor_json}, {"device", p.device_json}}},
          {"limits", {{"util_limit", p.device.util_limit}, {"sll_limit", p.device.sll_limit}}},
          {"initial", {{"kind", std::string(initial_name(initial))}, {"cut_width", init.cut}, {"latency", search.initial_latency}}},
          {"configuration", std::move(config)},
          {"assignment", std::move(assignment)},
          {"routing", route_state_json(p, state.routes())},
          {"latency", design_latency(p.graph, state.config(), p.qor)},
          {"search",
           {{"iterations", static_cast<int>(search.log.size())},
            {"lookahead", search.lookahead},
            {"cap_reached", search.cap_reached},
            {"excluded", std::move(excluded)}}},
          {"summary", {{"max_utilization", max_slot_utilization(state)}, {"max_sll_utilization", max_sll_utilization(state)}}},
          {"warnings", std::move(warnings)}};
}

json state_document(const Problem& p, const Configuration& config, const std::vector<int>& slot_of) {
  json cj = json::object();
  json aj = json::object();
  for (int f = 0; f < p.graph.function_count(); ++f) {
    const std::string& name = p.graph.functions[f].name;
    cj[name] = p.qor.point(f, config.chosen[f]).id;
    aj[name] = p.device.slots[slot_of[f]].id;
  }
  return {{"tool", {{"name", "fado"}, {"version", std::string(kToolVersion)}}},
          {"inputs", {{"design", p.design_json}, {"qor", p.qor_json}, {"device", p.device_json}}},
          {"limits", {{"util_limit", p.device.util_limit}, {"sll_limit", p.device.sll_limit}}},
          {"configuration", std::move(cj)},
          {"assignment", std::move(aj)},
          {"routing", route_state_json(p, recompute_all(p.graph, p.device, slot_of).state)},
          {"latency", design_latency(p.graph, config, p.qor)}};
}

// Iteration rows and their move rows share one file; `record` tells them apart.
std::string trace_csv(const Problem& p, const SearchResult& search) {
  std::ostringstream out;
  out << "record,iter,stage,batch,points,latency,max_util,max_sll,function,from,to\n";
  for (const IterationRecord& r : search.log) {
    std::vector<std::string> batch;
    std::vector<std::string> points;
    for (size_t i = 0; i < r.batch.size(); ++i) {
      const int f = r.batch[i];
      batch.push_back(p.graph.functions[f].name);
      points.push_back(r.points[i] < 0 ? "-" : p.qor.point(f, r.points[i]).id);
    }
    out << "iteration," << r.iter << ',' << stage_name(r.stage) << ',' << join(batch, ' ') << ','
        << join(points, ' ') << ',' << r.latency << ',' << fmt(r.max_util) << ',' << fmt(r.max_sll) << ",,,\n";
    for (const StagedMove& m : r.moves) {
      out << "move," << r.iter << ',' << stage_name(m.stage) << ",,,,,," << p.graph.functions[m.move.function].name
          << ',' << p.device.slots[m.move.from].id << ',' << p.device.slots[m.move.to].id << '\n';
    }
  }
  return out.str();
}

std::string directives_text(const Problem& p, const Configuration& config) {
  std::ostringstream out;
  for (int f = 0; f < p.graph.function_count(); ++f) {
    const QoRPoint& pt = p.qor.point(f, config.chosen[f]);
    out << p.graph.functions[f].name << " [" << pt.id << "]";
    if (pt.directives.empty()) out << " none";
    for (const auto& [k, v] : pt.directives) out << ' ' << k << '=' << v;
    out << '\n';
  }
  return out.str();
}

// Inspection only: the key/value pairs are written as commented-out
// set_directive lines because directive keys are not vendor syntax.
std::string tcl_stub(const Problem& p, const Configuration& config) {
  std::ostringstream out;
  out << "# generated by fado " << kToolVersion << "; not a vendor script\n";
  for (int f = 0; f < p.graph.function_count(); ++f) {
    const QoRPoint& pt = p.qor.point(f, config.chosen[f]);
    const std::string& name = p.graph.functions[f].name;
    out << "# " << name << " point " << pt.id << '\n';
    for (const auto& [k, v] : pt.directives) {
      out << "set_directive {" << name << "} {" << k << "} {" << v << "}\n";
    }
  }
  return out.str();
}

LoadedResult load_result(const json& result) {
  if (!result.is_object()) throw Error("result: top level must be an object");
  for (const char* key : {"inputs", "configuration", "assignment", "routing", "latency"}) {
    if (!result.contains(key)) throw Error(std::string("result: missing '") + key + "'");
  }
  const json& in = result.at("inputs");
  LimitOverrides limits;
  if (result.contains("limits")) {
    limits.util_limit = result["limits"].at("util_limit").get<double>();
    limits.sll_limit = result["limits"].at("sll_limit").get<double>();
  }
  LoadedResult out;
  out.problem = make_problem(in.at("design"), in.at("qor"), in.at("device"), limits);
  const Problem& p = *out.problem;
  const int n = p.graph.function_count();
  out.config.chosen.assign(n, -1);
  out.slot_of.assign(n, -1);
  for (int f = 0; f < n; ++f) {
    const std::string& name = p.graph.functions[f].name;
    const json& cj = result.at("configuration");
    if (!cj.contains(name)) throw Error("result: configuration has no entry for " + name);
    const std::string id = cj.at(name).get<std::string>();
    out.config.chosen[f] = p.qor.of(f).find_point(id);
    if (out.config.chosen[f] < 0) throw Error("result: unknown point '" + id + "' for " + name);
    const json& aj = result.at("assignment");
    if (!aj.contains(name)) throw Error("result: assignment has no entry for " + name);
    out.slot_of[f] = p.device.index_of_id(aj.at(name).get<int>());
    if (out.slot_of[f] < 0) throw Error("result: unknown slot for " + name);
  }
  out.latency = result.at("latency").get<Cycles>();
  return out;
}

std::vector<std::string> check_result(const json& result) {
  LoadedResult loaded = load_result(result);
  const Problem& p = *loaded.problem;
  std::vector<std::string> violations;

  PackState state(p.graph, p.qor, p.device, p.groups, loaded.config, loaded.slot_of);
  for (std::string& s : check_legal(state).describe(state)) violations.push_back(std::move(s));

  // Stored routing table, as written.
  const json& rj = result.at("routing");
  RouteState stored;
  stored.sll_used.assign(p.device.half_count(), 0);
  for (const json& h : rj.at("sll_used")) {
    const int b = h.at("boundary").get<int>();
    const int x = h.at("x").get<int>();
    if (b < 0 || b + 1 >= p.device.height || x < 0 || x >= p.device.width) {
      throw Error("result: SLL entry outside the device");
    }
    stored.sll_used[p.device.half_index(b, x)] = h.at("used").get<std::int64_t>();
  }
  const json& ej = rj.at("edges");
  if (ej.size() != p.graph.fifo_edges.size()) {
    violations.push_back("routing: " + std::to_string(ej.size()) + " routed edges, design has " +
                         std::to_string(p.graph.fifo_edges.size()) + " FIFO edges");
    return violations;
  }
  for (const json& e : ej) {
    Route r;
    for (const json& c : e.at("crossings")) r.push_back(crossing_from(c));
    stored.routes.push_back(std::move(r));
    stored.register_groups.push_back(e.at("register_groups").get<int>());
  }

  if (!sll_conserved(p.graph, stored)) {
    std::int64_t table = 0;
    for (std::int64_t u : stored.sll_used) table += u;
    std::int64_t carried = 0;
    for (size_t j = 0; j < stored.routes.size(); ++j) {
      for (const Crossing& c : stored.routes[j]) {
        if (c.kind == CrossingKind::kDie) carried += p.graph.edges[p.graph.fifo_edges[j]].width;
      }
    }
    violations.push_back("sll-conservation: table sums to " + std::to_string(table) + " but routes carry " +
                         std::to_string(carried));
  }

  const RecomputeResult fresh = recompute_all(p.graph, p.device, loaded.slot_of);
  if (!(state.routes() == fresh.state)) violations.push_back("routing: incremental state differs from a full recompute");
  for (int h = 0; h < p.device.half_count(); ++h) {
    if (stored.sll_used[h] != fresh.state.sll_used[h]) {
      violations.push_back("routing: half " + std::to_string(h) + " stores " + std::to_string(stored.sll_used[h]) +
                           " SLLs, recompute gives " + std::to_string(fresh.state.sll_used[h]));
    }
  }
  for (size_t j = 0; j < stored.routes.size(); ++j) {
    const Edge& e = p.graph.edges[p.graph.fifo_edges[j]];
    const std::string label = p.graph.functions[e.src].name + "->" + p.graph.functions[e.dst].name;
    if (stored.routes[j] != fresh.state.routes[j]) violations.push_back("routing: edge " + label + " route differs");
    if (stored.register_groups[j] != fresh.state.register_groups[j]) {
      violations.push_back("routing: edge " + label + " stores " + std::to_string(stored.register_groups[j]) +
                           " register groups, recompute gives " + std::to_string(fresh.state.register_groups[j]));
    }
  }

  const Cycles latency = design_latency(p.graph, loaded.config, p.qor);
  if (latency != loaded.latency) {
    violations.push_back("latency: stored " + std::to_string(loaded.latency) + ", configuration gives " +
                         std::to_string(latency));
  }
  return violations;
}

}  // namespace fado
