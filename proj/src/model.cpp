#include "fado/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

#include "fado/error.hpp"

namespace fado {

ResourceVector::ResourceVector(Amount bram, Amount dsp, Amount ff, Amount lut, Amount uram)
    : amounts_{bram, dsp, ff, lut, uram} {
  for (Amount a : amounts_) {
    if (a < 0) throw Error("resource amounts must be non-negative");
  }
}

ResourceVector& ResourceVector::operator+=(const ResourceVector& other) {
  for (int t = 0; t < kNumResources; ++t) amounts_[t] += other.amounts_[t];
  return *this;
}

ResourceVector& ResourceVector::operator-=(const ResourceVector& other) {
  for (int t = 0; t < kNumResources; ++t) {
    if (amounts_[t] < other.amounts_[t]) {
      throw Error("resource subtraction below zero on " + std::string(kResourceNames[t]));
    }
  }
  for (int t = 0; t < kNumResources; ++t) amounts_[t] -= other.amounts_[t];
  return *this;
}

bool ResourceVector::is_zero() const {
  return std::all_of(amounts_.begin(), amounts_.end(), [](Amount a) { return a == 0; });
}

bool ResourceVector::le(const ResourceVector& other) const {
  for (int t = 0; t < kNumResources; ++t) {
    if (amounts_[t] > other.amounts_[t]) return false;
  }
  return true;
}

ResourceVector ResourceVector::max(const ResourceVector& a, const ResourceVector& b) {
  ResourceVector r;
  for (int t = 0; t < kNumResources; ++t) r.amounts_[t] = std::max(a.amounts_[t], b.amounts_[t]);
  return r;
}

double utilization_ratio(const ResourceVector& used, const ResourceVector& cap) {
  double best = 0.0;
  for (int t = 0; t < kNumResources; ++t) {
    if (used[t] == 0) continue;
    if (cap[t] <= 0) {
      throw Error("utilization of " + std::string(kResourceNames[t]) + " against zero capacity");
    }
    best = std::max(best, static_cast<double>(used[t]) / static_cast<double>(cap[t]));
  }
  return best;
}

ResourceVector scaled_budget(const ResourceVector& cap, double limit) {
  auto f = [&](int t) {
    return static_cast<ResourceVector::Amount>(std::floor(limit * static_cast<double>(cap[t]) + 1e-9));
  };
  return ResourceVector(f(0), f(1), f(2), f(3), f(4));
}

// ---------------------------------------------------------------------------

int DeviceModel::index_of_id(int id) const {
  for (int s = 0; s < slot_count(); ++s) {
    if (slots[s].id == id) return s;
  }
  return -1;
}

ResourceVector DeviceModel::total_capacity() const {
  ResourceVector total;
  for (const Slot& s : slots) total += s.capacity;
  return total;
}

std::int64_t DeviceModel::sll_budget(int half) const {
  const int y = half / width;
  const int x = half % width;
  const double cap = static_cast<double>(die_boundaries[y].sll_capacity[x]);
  return static_cast<std::int64_t>(std::floor(sll_limit * cap + 1e-9));
}

void DeviceModel::validate() const {
  if (width < 1 || height < 1) throw Error("device: width and height must be positive");
  if (!(util_limit > 0.0 && util_limit <= 1.0)) throw Error("device: util_limit must be in (0, 1]");
  if (!(sll_limit > 0.0 && sll_limit <= 1.0)) throw Error("device: sll_limit must be in (0, 1]");
  if (slot_count() != width * height) {
    throw Error("device: slots do not cover the " + std::to_string(width) + "x" +
                std::to_string(height) + " grid exactly once");
  }
  std::set<int> ids;
  for (int i = 0; i < slot_count(); ++i) {
    const Slot& s = slots[i];
    if (s.x < 0 || s.x >= width || s.y < 0 || s.y >= height || slot_at(s.x, s.y) != i) {
      throw Error("device: slot grid coverage violation at slot id " + std::to_string(s.id));
    }
    if (!ids.insert(s.id).second) throw Error("device: duplicate slot id " + std::to_string(s.id));
    for (int t = 0; t < kNumResources; ++t) {
      if (s.capacity[t] <= 0) {
        throw Error("device: non-positive " + std::string(kResourceNames[t]) +
                    " capacity on slot " + std::to_string(s.id));
      }
    }
  }
  if (static_cast<int>(die_boundaries.size()) != height - 1) {
    throw Error("device: expected one die boundary per row gap");
  }
  for (int y = 0; y + 1 < height; ++y) {
    const DieBoundary& b = die_boundaries[y];
    if (b.y != y) throw Error("device: die boundaries must cover y = 0.." + std::to_string(height - 2));
    if (static_cast<int>(b.sll_capacity.size()) != width) {
      throw Error("device: die boundary " + std::to_string(y) + " must have exactly " +
                  std::to_string(width) + " halves");
    }
    for (std::int64_t c : b.sll_capacity) {
      if (c < 0) throw Error("device: negative SLL capacity");
    }
  }
  if (static_cast<int>(io_boundaries.size()) != width - 1) {
    throw Error("device: expected one I/O boundary per column gap");
  }
  for (int x = 0; x + 1 < width; ++x) {
    if (io_boundaries[x] != x) throw Error("device: I/O boundaries must cover x = 0.." + std::to_string(width - 2));
  }
}

// ---------------------------------------------------------------------------

int DesignGraph::find_function(std::string_view name) const {
  auto it = function_index.find(std::string(name));
  return it == function_index.end() ? -1 : it->second;
}

void DesignGraph::finalize() {
  if (kernels.empty()) throw Error("design: empty kernel list");
  function_index.clear();
  for (int f = 0; f < function_count(); ++f) {
    if (!function_index.emplace(functions[f].name, f).second) {
      throw Error("design: duplicate function name '" + functions[f].name + "'");
    }
  }
  for (size_t k = 0; k < kernels.size(); ++k) {
    const Kernel& kernel = kernels[k];
    if (kernel.functions.empty()) throw Error("design: kernel '" + kernel.name + "' has no functions");
    if (kernel.kind == KernelKind::kNonDataflow && kernel.functions.size() != 1) {
      throw Error("design: non-dataflow kernel '" + kernel.name + "' must have exactly one function");
    }
  }

  const int nk = static_cast<int>(kernels.size());
  kernel_succ.assign(nk, {});
  fifo_edges.clear();
  incident_fifo.assign(functions.size(), {});
  std::vector<std::set<int>> succ(nk);
  for (size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    if (edge.src < 0 || edge.src >= function_count() || edge.dst < 0 || edge.dst >= function_count()) {
      throw Error("design: edge references an unknown function");
    }
    if (edge.kind == EdgeKind::kFifo) {
      if (edge.src == edge.dst) throw Error("design: FIFO self-loop on '" + functions[edge.src].name + "'");
      if (edge.width <= 0) throw Error("design: FIFO edge width must be positive");
      const int idx = static_cast<int>(fifo_edges.size());
      fifo_edges.push_back(static_cast<int>(e));
      incident_fifo[edge.src].push_back(idx);
      incident_fifo[edge.dst].push_back(idx);
    } else if (edge.width < 0) {
      throw Error("design: negative RAM edge width");
    }
    const int ks = functions[edge.src].kernel;
    const int kd = functions[edge.dst].kernel;
    if (ks != kd) succ[ks].insert(kd);
  }
  for (int k = 0; k < nk; ++k) kernel_succ[k].assign(succ[k].begin(), succ[k].end());

  std::vector<int> indeg(nk, 0);
  for (int k = 0; k < nk; ++k) {
    for (int s : kernel_succ[k]) ++indeg[s];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int k = 0; k < nk; ++k) {
    if (indeg[k] == 0) ready.push(k);
  }
  kernel_topo.clear();
  while (!ready.empty()) {
    const int k = ready.top();
    ready.pop();
    kernel_topo.push_back(k);
    for (int s : kernel_succ[k]) {
      if (--indeg[s] == 0) ready.push(s);
    }
  }
  if (static_cast<int>(kernel_topo.size()) != nk) throw Error("design: kernel-level graph has a cycle");
}

// ---------------------------------------------------------------------------

int QoRTemplate::find_point(std::string_view id) const {
  for (size_t p = 0; p < points.size(); ++p) {
    if (points[p].id == id) return static_cast<int>(p);
  }
  return -1;
}

void sort_points(std::vector<QoRPoint>& points) {
  ResourceVector norm;
  for (const QoRPoint& p : points) norm = ResourceVector::max(norm, p.resources);
  // Avoid zero denominators; a resource nobody uses contributes nothing.
  ResourceVector denom(std::max<std::int64_t>(norm[0], 1), std::max<std::int64_t>(norm[1], 1),
                       std::max<std::int64_t>(norm[2], 1), std::max<std::int64_t>(norm[3], 1),
                       std::max<std::int64_t>(norm[4], 1));
  std::vector<std::pair<double, size_t>> keys;
  keys.reserve(points.size());
  for (size_t i = 0; i < points.size(); ++i) keys.emplace_back(utilization_ratio(points[i].resources, denom), i);
  std::vector<size_t> order(points.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (points[a].latency != points[b].latency) return points[a].latency < points[b].latency;
    if (keys[a].first != keys[b].first) return keys[a].first < keys[b].first;
    return points[a].id < points[b].id;
  });
  std::vector<QoRPoint> sorted;
  sorted.reserve(points.size());
  for (size_t i : order) sorted.push_back(std::move(points[i]));
  points = std::move(sorted);
}

QoRLibrary::QoRLibrary(std::vector<QoRTemplate> templates, std::vector<NameRule> rules)
    : templates_(std::move(templates)), rules_(std::move(rules)) {
  std::set<std::string> names;
  for (QoRTemplate& t : templates_) {
    if (!names.insert(t.name).second) throw Error("qor: duplicate template '" + t.name + "'");
    if (t.points.empty()) throw Error("qor: template '" + t.name + "' has an empty point list");
    std::set<std::string> ids;
    for (const QoRPoint& p : t.points) {
      if (!ids.insert(p.id).second) {
        throw Error("qor: duplicate point id '" + p.id + "' in template '" + t.name + "'");
      }
      if (p.latency < 1) throw Error("qor: point '" + p.id + "' in '" + t.name + "' has latency < 1");
    }
    for (const LoopInfo& l : t.loops) {
      if (l.bound < 1 || l.min_ii < 1 || l.iter_latency < l.min_ii || l.depth < 1) {
        throw Error("qor: invalid loop '" + l.label + "' in template '" + t.name + "'");
      }
    }
    sort_points(t.points);
    t.baseline = t.find_point(kBaselineId);
    if (t.baseline < 0) throw Error("qor: template '" + t.name + "' lacks a baseline point");
    const Cycles slowest = t.points.back().latency;
    t.baseline_not_slowest = t.points[t.baseline].latency < slowest;
    if (t.baseline_not_slowest) {
      warnings_.push_back("template '" + t.name + "': baseline point is not the slowest point");
    }
  }
  for (const NameRule& r : rules_) {
    if (find_template(r.template_name) < 0) {
      throw Error("qor: name rule '" + r.pattern + "' targets unknown template '" + r.template_name + "'");
    }
    try {
      compiled_.emplace_back(r.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error("qor: bad regex '" + r.pattern + "': " + e.what());
    }
  }
}

int QoRLibrary::find_template(std::string_view name) const {
  for (size_t t = 0; t < templates_.size(); ++t) {
    if (templates_[t].name == name) return static_cast<int>(t);
  }
  return -1;
}

void QoRLibrary::bind(const DesignGraph& graph) {
  function_template_.assign(graph.functions.size(), -1);
  for (int f = 0; f < graph.function_count(); ++f) {
    const Function& fn = graph.functions[f];
    int by_rule = -1;
    for (size_t r = 0; r < rules_.size(); ++r) {
      if (!std::regex_match(fn.name, compiled_[r])) continue;
      if (by_rule >= 0) throw Error("qor: function '" + fn.name + "' matches more than one name rule");
      by_rule = find_template(rules_[r].template_name);
    }
    int by_name = -1;
    if (!fn.template_name.empty()) {
      by_name = find_template(fn.template_name);
      if (by_name < 0 && by_rule < 0) {
        throw Error("qor: function '" + fn.name + "' names unknown template '" + fn.template_name + "'");
      }
    } else {
      by_name = find_template(fn.name);
    }
    if (by_rule >= 0 && !fn.template_name.empty() && by_name >= 0 && by_name != by_rule) {
      throw Error("qor: function '" + fn.name + "' resolves to two templates");
    }
    const int t = by_rule >= 0 ? by_rule : by_name;
    if (t < 0) throw Error("qor: function '" + fn.name + "' does not resolve to any template");
    function_template_[f] = t;
  }
}

Configuration baseline_configuration(const DesignGraph& graph, const QoRLibrary& qor) {
  Configuration c;
  c.chosen.resize(graph.functions.size());
  for (int f = 0; f < graph.function_count(); ++f) c.chosen[f] = qor.baseline(f);
  return c;
}

Cycles design_latency(const DesignGraph& graph, const std::vector<Cycles>& function_latency) {
  const size_t nk = graph.kernels.size();
  std::vector<Cycles> kernel_lat(nk, 0);
  for (size_t k = 0; k < nk; ++k) {
    for (int f : graph.kernels[k].functions) kernel_lat[k] = std::max(kernel_lat[k], function_latency[f]);
  }
  std::vector<Cycles> finish(nk, 0);
  Cycles best = 0;
  // Longest path ending at each kernel, in topological order.
  std::vector<Cycles> start(nk, 0);
  for (int k : graph.kernel_topo) {
    finish[k] = start[k] + kernel_lat[k];
    best = std::max(best, finish[k]);
    for (int s : graph.kernel_succ[k]) start[s] = std::max(start[s], finish[k]);
  }
  return best;
}

Cycles design_latency(const DesignGraph& graph, const Configuration& config, const QoRLibrary& qor) {
  if (config.chosen.size() != graph.functions.size()) throw Error("configuration is incomplete");
  std::vector<Cycles> lat(graph.functions.size());
  for (int f = 0; f < graph.function_count(); ++f) {
    const int p = config.chosen[f];
    if (p < 0 || p >= qor.point_count(f)) {
      throw Error("configuration: missing chosen point for '" + graph.functions[f].name + "'");
    }
    lat[f] = qor.point(f, p).latency;
  }
  return design_latency(graph, lat);
}

}  // namespace fado
