#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fado/report.hpp"
#include "json.hpp"

namespace fado::test {

using nlohmann::json;

inline ResourceVector lut(ResourceVector::Amount n) { return {0, 0, 0, n, 0}; }

inline ResourceVector uniform(ResourceVector::Amount n) { return {n, n, n, n, n}; }

// Builds small design/qor/device documents. Every function gets a template of
// its own name; the first point listed is the baseline.
struct Builder {
  json design = {{"kernels", json::array()}, {"edges", json::array()}};
  json qor = {{"templates", json::array()}};
  json device;

  Builder& kernel(const std::string& name, bool dataflow, const std::vector<std::string>& functions) {
    json fs = json::array();
    for (const auto& f : functions) fs.push_back({{"name", f}});
    design["kernels"].push_back({{"name", name}, {"kind", dataflow ? "dataflow" : "non_dataflow"}, {"functions", fs}});
    return *this;
  }
  Builder& fifo(const std::string& a, const std::string& b, std::int64_t width) {
    design["edges"].push_back({{"src", a}, {"dst", b}, {"kind", "fifo"}, {"width", width}});
    return *this;
  }
  Builder& ram(const std::string& a, const std::string& b) {
    design["edges"].push_back({{"src", a}, {"dst", b}, {"kind", "ram"}});
    return *this;
  }
  Builder& points(const std::string& fn, const std::vector<std::pair<Cycles, ResourceVector>>& pts,
                  const json& loops = json::array()) {
    json ps = json::array();
    for (size_t i = 0; i < pts.size(); ++i) {
      ps.push_back({{"id", i == 0 ? std::string(kBaselineId) : "p" + std::to_string(i)},
                    {"latency", pts[i].first},
                    {"resources", to_json(pts[i].second)}});
    }
    qor["templates"].push_back({{"name", fn}, {"points", ps}, {"loops", loops}});
    return *this;
  }
  Builder& grid(int width, int height, ResourceVector cap, std::int64_t sll = 1000, double util = 0.7,
                double sll_limit = 0.9) {
    device = {{"width", width}, {"height", height}, {"util_limit", util}, {"sll_limit", sll_limit}};
    device["slots"] = json::array();
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        device["slots"].push_back({{"id", y * width + x}, {"x", x}, {"y", y}, {"capacity", to_json(cap)}});
      }
    }
    device["die_boundaries"] = json::array();
    for (int y = 0; y + 1 < height; ++y) {
      json halves = json::array();
      for (int x = 0; x < width; ++x) halves.push_back({{"x", x}, {"sll_capacity", sll}});
      device["die_boundaries"].push_back({{"y", y}, {"halves", halves}});
    }
    return *this;
  }

  std::unique_ptr<Problem> build() const { return make_problem(design, qor, device); }
};

inline int fn(const Problem& p, const std::string& name) { return p.graph.find_function(name); }

// Assignment by function name, in function index order.
inline std::vector<int> place(const Problem& p, const std::vector<std::pair<std::string, int>>& where) {
  std::vector<int> slot_of(p.graph.function_count(), 0);
  for (const auto& [name, slot] : where) slot_of[fn(p, name)] = slot;
  return slot_of;
}

inline PackState baseline_state(const Problem& p, std::vector<int> slot_of) {
  return PackState(p.graph, p.qor, p.device, p.groups, baseline_configuration(p.graph, p.qor), std::move(slot_of));
}

}  // namespace fado::test
