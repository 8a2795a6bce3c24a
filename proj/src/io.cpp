#include <algorithm>
#include <fstream>
#include <sstream>

#include "fado/error.hpp"
#include "fado/model.hpp"

namespace fado {

using nlohmann::json;

namespace {

template <typename T>
T require(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(std::string(what) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string(what) + ": bad field '" + key + "': " + e.what());
  }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string("bad field '") + key + "': " + e.what());
  }
}

KernelKind parse_kernel_kind(const std::string& s) {
  if (s == "dataflow") return KernelKind::kDataflow;
  if (s == "non_dataflow") return KernelKind::kNonDataflow;
  throw Error("design: unknown kernel kind '" + s + "'");
}

EdgeKind parse_edge_kind(const std::string& s) {
  if (s == "fifo") return EdgeKind::kFifo;
  if (s == "ram") return EdgeKind::kRam;
  throw Error("design: unknown edge kind '" + s + "'");
}

}  // namespace

ResourceVector resources_from_json(const json& j) {
  if (!j.is_object()) throw Error("resource vector must be an object");
  std::array<ResourceVector::Amount, kNumResources> a{};
  for (auto it = j.begin(); it != j.end(); ++it) {
    int idx = -1;
    for (int t = 0; t < kNumResources; ++t) {
      if (it.key() == kResourceNames[t]) idx = t;
    }
    if (idx < 0) throw Error("unknown resource type '" + it.key() + "'");
    if (!it.value().is_number_integer()) throw Error("resource amount for " + it.key() + " must be an integer");
    a[idx] = it.value().get<ResourceVector::Amount>();
  }
  return ResourceVector(a[0], a[1], a[2], a[3], a[4]);
}

json to_json(const ResourceVector& r) {
  json j = json::object();
  for (int t = 0; t < kNumResources; ++t) j[std::string(kResourceNames[t])] = r[t];
  return j;
}

DeviceModel device_from_json(const json& j) {
  if (!j.is_object()) throw Error("device: top level must be an object");
  DeviceModel d;
  d.width = require<int>(j, "width", "device");
  d.height = require<int>(j, "height", "device");
  d.util_limit = optional_field<double>(j, "util_limit", 0.65);
  d.sll_limit = optional_field<double>(j, "sll_limit", 0.90);
  if (d.width < 1 || d.height < 1) throw Error("device: width and height must be positive");

  const json& slots = j.contains("slots") ? j.at("slots") : json();
  if (!slots.is_array()) throw Error("device: missing slot list");
  std::vector<Slot> parsed;
  for (const json& s : slots) {
    Slot slot;
    slot.id = require<int>(s, "id", "device slot");
    slot.x = require<int>(s, "x", "device slot");
    slot.y = require<int>(s, "y", "device slot");
    if (!s.contains("capacity")) throw Error("device slot: missing field 'capacity'");
    slot.capacity = resources_from_json(s.at("capacity"));
    parsed.push_back(slot);
  }
  if (static_cast<int>(parsed.size()) != d.width * d.height) {
    throw Error("device: slots do not cover the grid exactly once");
  }
  d.slots.assign(parsed.size(), Slot{});
  std::vector<bool> seen(parsed.size(), false);
  for (const Slot& s : parsed) {
    if (s.x < 0 || s.x >= d.width || s.y < 0 || s.y >= d.height) {
      throw Error("device: slot " + std::to_string(s.id) + " lies outside the grid");
    }
    const int idx = d.slot_at(s.x, s.y);
    if (seen[idx]) throw Error("device: grid cell covered twice");
    seen[idx] = true;
    d.slots[idx] = s;
  }

  d.die_boundaries.assign(std::max(0, d.height - 1), DieBoundary{});
  std::vector<bool> have_boundary(d.die_boundaries.size(), false);
  if (j.contains("die_boundaries")) {
    for (const json& b : j.at("die_boundaries")) {
      const int y = require<int>(b, "y", "die boundary");
      if (y < 0 || y >= d.height - 1) throw Error("device: die boundary y out of range");
      if (have_boundary[y]) throw Error("device: duplicate die boundary y=" + std::to_string(y));
      have_boundary[y] = true;
      DieBoundary& db = d.die_boundaries[y];
      db.y = y;
      db.sll_capacity.assign(d.width, -1);
      if (!b.contains("halves") || !b.at("halves").is_array()) throw Error("die boundary: missing halves");
      for (const json& h : b.at("halves")) {
        const int x = require<int>(h, "x", "die boundary half");
        if (x < 0 || x >= d.width) throw Error("device: half x out of range");
        if (db.sll_capacity[x] >= 0) throw Error("device: duplicate half x=" + std::to_string(x));
        db.sll_capacity[x] = require<std::int64_t>(h, "sll_capacity", "die boundary half");
        if (db.sll_capacity[x] < 0) throw Error("device: negative SLL capacity");
      }
      for (std::int64_t c : db.sll_capacity) {
        if (c < 0) {
          throw Error("device: die boundary " + std::to_string(y) + " must have exactly " +
                      std::to_string(d.width) + " halves");
        }
      }
    }
  }
  for (size_t y = 0; y < have_boundary.size(); ++y) {
    if (!have_boundary[y]) throw Error("device: missing die boundary y=" + std::to_string(y));
  }

  if (j.contains("io_boundaries")) {
    for (const json& b : j.at("io_boundaries")) d.io_boundaries.push_back(require<int>(b, "x", "io boundary"));
    std::sort(d.io_boundaries.begin(), d.io_boundaries.end());
  } else {
    for (int x = 0; x + 1 < d.width; ++x) d.io_boundaries.push_back(x);
  }
  d.validate();
  return d;
}

json to_json(const DeviceModel& d) {
  json j;
  j["width"] = d.width;
  j["height"] = d.height;
  j["util_limit"] = d.util_limit;
  j["sll_limit"] = d.sll_limit;
  j["slots"] = json::array();
  for (const Slot& s : d.slots) {
    j["slots"].push_back({{"id", s.id}, {"x", s.x}, {"y", s.y}, {"capacity", to_json(s.capacity)}});
  }
  j["die_boundaries"] = json::array();
  for (const DieBoundary& b : d.die_boundaries) {
    json halves = json::array();
    for (int x = 0; x < d.width; ++x) halves.push_back({{"x", x}, {"sll_capacity", b.sll_capacity[x]}});
    j["die_boundaries"].push_back({{"y", b.y}, {"halves", halves}});
  }
  j["io_boundaries"] = json::array();
  for (int x : d.io_boundaries) j["io_boundaries"].push_back({{"x", x}});
  return j;
}

DesignGraph design_from_json(const json& j) {
  if (!j.is_object()) throw Error("design: top level must be an object");
  DesignGraph g;
  if (!j.contains("kernels") || !j.at("kernels").is_array()) throw Error("design: missing kernel list");
  for (const json& k : j.at("kernels")) {
    Kernel kernel;
    kernel.name = require<std::string>(k, "name", "kernel");
    kernel.kind = parse_kernel_kind(require<std::string>(k, "kind", "kernel"));
    if (!k.contains("functions") || !k.at("functions").is_array()) {
      throw Error("design: kernel '" + kernel.name + "' lacks a function list");
    }
    for (const json& f : k.at("functions")) {
      Function fn;
      fn.name = require<std::string>(f, "name", "function");
      fn.template_name = optional_field<std::string>(f, "template_name", "");
      fn.kernel = static_cast<int>(g.kernels.size());
      kernel.functions.push_back(static_cast<int>(g.functions.size()));
      g.functions.push_back(std::move(fn));
    }
    g.kernels.push_back(std::move(kernel));
  }
  if (g.kernels.empty()) throw Error("design: empty kernel list");
  std::unordered_map<std::string, int> names;
  for (size_t f = 0; f < g.functions.size(); ++f) names.emplace(g.functions[f].name, static_cast<int>(f));
  if (j.contains("edges")) {
    for (const json& e : j.at("edges")) {
      Edge edge;
      const auto src = require<std::string>(e, "src", "edge");
      const auto dst = require<std::string>(e, "dst", "edge");
      auto s = names.find(src);
      auto d = names.find(dst);
      if (s == names.end()) throw Error("design: edge references unknown function '" + src + "'");
      if (d == names.end()) throw Error("design: edge references unknown function '" + dst + "'");
      edge.src = s->second;
      edge.dst = d->second;
      edge.kind = parse_edge_kind(require<std::string>(e, "kind", "edge"));
      edge.width = optional_field<std::int64_t>(e, "width", 0);
      g.edges.push_back(edge);
    }
  }
  g.finalize();
  return g;
}

json to_json(const DesignGraph& g) {
  json j;
  j["kernels"] = json::array();
  for (const Kernel& k : g.kernels) {
    json fs = json::array();
    for (int f : k.functions) {
      json fj = {{"name", g.functions[f].name}};
      if (!g.functions[f].template_name.empty()) fj["template_name"] = g.functions[f].template_name;
      fs.push_back(fj);
    }
    j["kernels"].push_back(
        {{"name", k.name}, {"kind", k.kind == KernelKind::kDataflow ? "dataflow" : "non_dataflow"}, {"functions", fs}});
  }
  j["edges"] = json::array();
  for (const Edge& e : g.edges) {
    j["edges"].push_back({{"src", g.functions[e.src].name},
                          {"dst", g.functions[e.dst].name},
                          {"kind", e.kind == EdgeKind::kFifo ? "fifo" : "ram"},
                          {"width", e.width}});
  }
  return j;
}

QoRLibrary qor_from_json(const json& j, const DesignGraph& graph) {
  if (!j.is_object()) throw Error("qor: top level must be an object");
  std::vector<QoRTemplate> templates;
  if (!j.contains("templates") || !j.at("templates").is_array()) throw Error("qor: missing template list");
  for (const json& t : j.at("templates")) {
    QoRTemplate tpl;
    tpl.name = require<std::string>(t, "name", "template");
    if (t.contains("loops")) {
      for (const json& l : t.at("loops")) {
        LoopInfo loop;
        loop.label = require<std::string>(l, "label", "loop");
        loop.nest = optional_field<std::string>(l, "nest", tpl.name);
        loop.depth = optional_field<int>(l, "nest_depth_index", 1);
        loop.bound = require<std::int64_t>(l, "bound", "loop");
        loop.min_ii = require<std::int64_t>(l, "min_ii", "loop");
        loop.iter_latency = require<std::int64_t>(l, "iter_latency", "loop");
        tpl.loops.push_back(std::move(loop));
      }
    }
    if (t.contains("points")) {
      for (const json& p : t.at("points")) {
        QoRPoint point;
        point.id = require<std::string>(p, "id", "point");
        if (p.contains("directives")) {
          for (auto it = p.at("directives").begin(); it != p.at("directives").end(); ++it) {
            point.directives[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
          }
        }
        point.latency = require<Cycles>(p, "latency", "point");
        if (!p.contains("resources")) throw Error("point: missing field 'resources'");
        point.resources = resources_from_json(p.at("resources"));
        tpl.points.push_back(std::move(point));
      }
    }
    templates.push_back(std::move(tpl));
  }
  std::vector<NameRule> rules;
  if (j.contains("name_rules")) {
    for (const json& r : j.at("name_rules")) {
      rules.push_back({require<std::string>(r, "regex", "name rule"), require<std::string>(r, "template", "name rule")});
    }
  }
  QoRLibrary lib(std::move(templates), std::move(rules));
  lib.bind(graph);
  return lib;
}

json to_json(const QoRLibrary& qor) {
  json j;
  j["templates"] = json::array();
  for (const QoRTemplate& t : qor.templates()) {
    json loops = json::array();
    for (const LoopInfo& l : t.loops) {
      loops.push_back({{"label", l.label},
                       {"nest", l.nest},
                       {"nest_depth_index", l.depth},
                       {"bound", l.bound},
                       {"min_ii", l.min_ii},
                       {"iter_latency", l.iter_latency}});
    }
    json points = json::array();
    for (const QoRPoint& p : t.points) {
      points.push_back({{"id", p.id},
                        {"directives", p.directives},
                        {"latency", p.latency},
                        {"resources", to_json(p.resources)}});
    }
    j["templates"].push_back({{"name", t.name}, {"loops", loops}, {"points", points}});
  }
  j["name_rules"] = json::array();
  for (const NameRule& r : qor.rules()) j["name_rules"].push_back({{"regex", r.pattern}, {"template", r.template_name}});
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DeviceModel load_device(const std::filesystem::path& path) { return device_from_json(read_json_file(path)); }

DesignGraph load_design(const std::filesystem::path& path) { return design_from_json(read_json_file(path)); }

QoRLibrary load_qor(const std::filesystem::path& path, const DesignGraph& graph) {
  return qor_from_json(read_json_file(path), graph);
}

}  // namespace fado
