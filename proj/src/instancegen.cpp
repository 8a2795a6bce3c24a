#include "fado/instancegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "fado/error.hpp"
#include "fado/floorplan.hpp"

namespace fado {

using nlohmann::json;

std::vector<int> pipeline_choices(const LoopInfo& loop) {
  std::vector<int> out{0};
  const std::int64_t hi = std::min(4 * loop.min_ii, loop.iter_latency);
  for (std::int64_t ii = loop.min_ii; ii <= hi; ++ii) out.push_back(static_cast<int>(ii));
  return out;
}

std::vector<int> unroll_choices(const LoopInfo& loop) {
  std::vector<int> out;
  for (std::int64_t f = 1; f <= loop.bound; f *= 2) out.push_back(static_cast<int>(f));
  if (out.back() != loop.bound) out.push_back(static_cast<int>(loop.bound));
  return out;
}

std::vector<PartitionChoice> partition_choices(const ArrayInfo& array) {
  std::vector<PartitionChoice> out{{"", 0}};
  for (const char* type : {"block", "cyclic", "complete"}) {
    for (int d = 1; d <= array.dims; ++d) out.push_back({type, d});
  }
  return out;
}

namespace {

constexpr int kPartitionFactor = 4;
constexpr int kCompleteBanks = 16;

}  // namespace

std::vector<DirectiveSkeleton> gen_directive_space(const std::vector<LoopInfo>& loops,
                                                   const std::vector<ArrayInfo>& arrays, int cap) {
  // Mixed-radix digits: per loop (pipeline, unroll), per array (partition, storage).
  std::vector<std::vector<int>> pipe, unroll;
  std::vector<std::vector<PartitionChoice>> part;
  std::vector<int> radix;
  for (const LoopInfo& l : loops) {
    pipe.push_back(pipeline_choices(l));
    unroll.push_back(unroll_choices(l));
    radix.push_back(static_cast<int>(pipe.back().size()));
    radix.push_back(static_cast<int>(unroll.back().size()));
  }
  for (const ArrayInfo& a : arrays) {
    part.push_back(partition_choices(a));
    radix.push_back(static_cast<int>(part.back().size()));
    radix.push_back(2);
  }
  double total = 1.0;
  for (int r : radix) total *= r;

  std::vector<double> indices;
  if (cap <= 0 || total <= cap) {
    for (double i = 0; i < total; i += 1.0) indices.push_back(i);
  } else {
    for (int k = 0; k < cap; ++k) indices.push_back(std::floor(k * total / cap));
  }

  std::vector<DirectiveSkeleton> out;
  for (double index : indices) {
    std::vector<int> digit(radix.size());
    double rest = index;
    for (size_t d = radix.size(); d-- > 0;) {
      digit[d] = static_cast<int>(std::fmod(rest, radix[d]));
      rest = std::floor(rest / radix[d]);
    }
    DirectiveSkeleton s;
    size_t d = 0;
    for (size_t l = 0; l < loops.size(); ++l) {
      const int ii = pipe[l][digit[d++]];
      const int u = unroll[l][digit[d++]];
      s.ii.push_back(ii);
      s.unroll.push_back(u);
      if (ii > 0) s.directives["PIPELINE " + loops[l].label] = "II=" + std::to_string(ii);
      if (u > 1) s.directives["UNROLL " + loops[l].label] = "factor=" + std::to_string(u);
    }
    for (size_t a = 0; a < arrays.size(); ++a) {
      const PartitionChoice& p = part[a][digit[d++]];
      const bool uram = digit[d++] == 1;
      s.banks.push_back(p.type.empty() ? 1 : (p.type == "complete" ? kCompleteBanks : kPartitionFactor));
      s.complete.push_back(p.type == "complete");
      s.uram.push_back(uram);
      if (!p.type.empty()) {
        s.directives["ARRAY_PARTITION " + arrays[a].name] = "type=" + p.type + " dim=" + std::to_string(p.dim);
      }
      if (uram) s.directives["BIND_STORAGE " + arrays[a].name] = "impl=URAM";
    }
    out.push_back(std::move(s));
  }
  return out;
}

GenSpec preset_spec(const std::string& preset, std::uint64_t seed) {
  GenSpec s;
  s.seed = seed;
  s.preset = preset;
  if (preset == "mixed") {
    s.dataflow_kernels = 40;
    s.non_dataflow_kernels = 16;
    s.min_functions = 8;
    s.max_functions = 12;
    s.min_loops = 1;
    s.max_loops = 2;
    s.min_depth = 1;
    s.max_depth = 3;
    s.max_points = 16;
    s.device = "u250_lower";
    s.fill = 0.3;
    s.kernel_types = 6;
  } else if (preset == "small") {
    s.dataflow_kernels = 2;
    s.non_dataflow_kernels = 1;
    s.min_functions = 1;
    s.max_functions = 2;
    s.min_loops = 1;
    s.max_loops = 1;
    s.min_depth = 1;
    s.max_depth = 1;
    s.max_points = 4;
    s.device = "two_slot";
    s.fill = 0.5;
  } else if (preset == "medium") {
    s.dataflow_kernels = 6;
    s.non_dataflow_kernels = 3;
    s.min_functions = 4;
    s.max_functions = 8;
    s.max_points = 12;
    s.device = "u250_lower";
    s.fill = 0.35;
  } else if (preset != "toy") {
    throw Error("unknown preset '" + preset + "'");
  }
  return s;
}

DeviceModel device_preset(const std::string& name) {
  DeviceModel d;
  const ResourceVector slot_cap(504, 1296, 329760, 164880, 136);
  constexpr std::int64_t kSllPerHalf = 11520;  // synthetic
  if (name == "u250_lower") {
    d.width = 2;
    d.height = 2;
    d.io_boundaries = {0};
  } else if (name == "two_slot") {
    d.width = 1;
    d.height = 2;
  } else {
    throw Error("unknown device preset '" + name + "'");
  }
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) d.slots.push_back({y * d.width + x, x, y, slot_cap});
  }
  for (int y = 0; y + 1 < d.height; ++y) d.die_boundaries.push_back({y, std::vector<std::int64_t>(d.width, kSllPerHalf)});
  d.validate();
  return d;
}

namespace {

struct TemplateModel {
  std::vector<LoopInfo> loops;
  std::vector<ArrayInfo> arrays;
  std::vector<int> array_of_loop;
  double lut = 0, ff = 0, dsp = 0;
  std::vector<double> bram;  // per array
  bool lu_like = false;      // II = 2 costs extra buffering
};

struct Costed {
  Cycles latency;
  std::array<double, kNumResources> res;
};

Costed cost(const TemplateModel& m, const DirectiveSkeleton& s, std::mt19937_64& rng, bool jitter) {
  // Loops of one nest are stored innermost first and consecutive.
  Cycles total = 10;
  double parallel = 1.0;
  double extra_lut = 0.0;
  Cycles nest_lat = 0;
  for (size_t l = 0; l < m.loops.size(); ++l) {
    const LoopInfo& loop = m.loops[l];
    const bool innermost = loop.depth == 1;
    const std::int64_t u = s.unroll[l];
    const std::int64_t trip = (loop.bound + u - 1) / u;
    const int a = m.array_of_loop[l];
    const std::int64_t banks = a >= 0 ? s.banks[a] : 1;
    const std::int64_t mem_ii = (u + 2 * banks - 1) / (2 * banks);
    const Cycles body = innermost ? loop.iter_latency : nest_lat + 2;
    Cycles lat;
    if (s.ii[l] > 0) {
      const std::int64_t ii = std::max<std::int64_t>(s.ii[l], mem_ii);
      lat = (trip - 1) * ii + body;
      parallel *= static_cast<double>(u) * std::max(1.0, static_cast<double>(loop.iter_latency) / ii);
      if (m.lu_like && s.ii[l] == 2) extra_lut += 0.35;
    } else {
      lat = trip * std::max<Cycles>(body, mem_ii);
      parallel *= static_cast<double>(u);
    }
    const bool last_of_nest = l + 1 == m.loops.size() || m.loops[l + 1].nest != loop.nest;
    nest_lat = lat;
    if (last_of_nest) {
      total += nest_lat;
      nest_lat = 0;
    }
  }
  parallel = std::min(parallel, 256.0);
  Costed c{total, {}};
  const double j = jitter ? std::uniform_real_distribution<double>(0.85, 1.15)(rng) : 1.0;
  c.res[static_cast<int>(Resource::kLut)] = m.lut * (1.0 + 0.6 * (parallel - 1.0) + extra_lut) * j;
  c.res[static_cast<int>(Resource::kFf)] = m.ff * (1.0 + 0.7 * (parallel - 1.0)) * j;
  c.res[static_cast<int>(Resource::kDsp)] = m.dsp * parallel;
  double bram = 0, uram = 0;
  for (size_t a = 0; a < m.arrays.size(); ++a) {
    if (s.complete[a]) {
      c.res[static_cast<int>(Resource::kFf)] += 32.0 * m.bram[a];
      continue;
    }
    const double blocks = std::max(m.bram[a], static_cast<double>(s.banks[a]));
    if (s.uram[a]) {
      uram += std::ceil(blocks / 4.0);
    } else {
      bram += blocks;
    }
  }
  c.res[static_cast<int>(Resource::kBram)] = bram;
  c.res[static_cast<int>(Resource::kUram)] = uram;
  return c;
}

TemplateModel random_template(const GenSpec& spec, const std::string& name, std::mt19937_64& rng) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  TemplateModel m;
  const int nests = uni(spec.min_loops, spec.max_loops);
  const bool small = spec.max_points <= 4;
  for (int n = 0; n < nests; ++n) {
    const int depth = uni(spec.min_depth, spec.max_depth);
    const std::string nest = name + "_n" + std::to_string(n);
    for (int d = 1; d <= depth; ++d) {
      LoopInfo l;
      l.nest = nest;
      l.depth = d;
      l.label = nest + "_l" + std::to_string(d);
      l.bound = small ? (std::int64_t{1} << uni(1, 3)) : (std::int64_t{1} << uni(3, 6));
      l.min_ii = uni(1, 2);
      l.iter_latency = l.min_ii + uni(2, 14);
      m.loops.push_back(l);
      m.array_of_loop.push_back(-1);
    }
  }
  const int arrays = small ? 0 : uni(0, 1);
  for (int a = 0; a < arrays; ++a) {
    m.arrays.push_back({name + "_buf" + std::to_string(a), uni(1, 2)});
    m.bram.push_back(uni(1, 8));
  }
  for (size_t l = 0; l < m.loops.size(); ++l) {
    if (!m.arrays.empty() && m.loops[l].depth == 1) m.array_of_loop[l] = 0;
  }
  m.lut = uni(200, 2000);
  m.ff = m.lut * 1.5;
  m.dsp = uni(0, 8);
  if (m.arrays.empty() && uni(0, 1)) m.bram.clear();
  m.lu_like = spec.mode == Monotonicity::kNonMonotone && uni(0, 2) == 0;
  return m;
}

// Builds the QoR points of one template; the no-directive point comes first.
std::vector<std::pair<Cycles, std::array<double, kNumResources>>> cost_space(
    const TemplateModel& m, const std::vector<DirectiveSkeleton>& space, const GenSpec& spec, std::mt19937_64& rng) {
  std::vector<std::pair<Cycles, std::array<double, kNumResources>>> pts;
  for (const DirectiveSkeleton& s : space) {
    const Costed c = cost(m, s, rng, spec.mode == Monotonicity::kNonMonotone);
    pts.push_back({c.latency, c.res});
  }
  if (spec.mode == Monotonicity::kMonotone) {
    // Faster never cheaper: running component-wise max from the slowest down.
    std::vector<size_t> order(pts.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return pts[a].first > pts[b].first; });
    std::array<double, kNumResources> floor{};
    size_t i = 0;
    while (i < order.size()) {
      size_t j = i;
      std::array<double, kNumResources> level = floor;
      while (j < order.size() && pts[order[j]].first == pts[order[i]].first) {
        for (int t = 0; t < kNumResources; ++t) pts[order[j]].second[t] = std::max(pts[order[j]].second[t], floor[t]);
        for (int t = 0; t < kNumResources; ++t) level[t] = std::max(level[t], pts[order[j]].second[t]);
        ++j;
      }
      floor = level;
      i = j;
    }
  }
  return pts;
}

}  // namespace

Instance gen_instance(const GenSpec& spec) {
  if (spec.preset == "toy") return toy_instance();
  if (spec.dataflow_kernels < 0 || spec.non_dataflow_kernels < 0 ||
      spec.dataflow_kernels + spec.non_dataflow_kernels < 1) {
    throw Error("gen: need at least one kernel");
  }
  if (spec.min_functions < 1 || spec.max_functions < spec.min_functions) throw Error("gen: bad function range");
  if (spec.min_loops < 1 || spec.max_loops < spec.min_loops) throw Error("gen: bad loop range");
  if (spec.min_depth < 1 || spec.max_depth < spec.min_depth) throw Error("gen: bad depth range");
  std::mt19937_64 rng(spec.seed);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const DeviceModel device = device_preset(spec.device);

  // Kernels in a random interleaving of dataflow and non-dataflow ones.
  std::vector<bool> is_df;
  for (int k = 0; k < spec.dataflow_kernels; ++k) is_df.push_back(true);
  for (int k = 0; k < spec.non_dataflow_kernels; ++k) is_df.push_back(false);
  std::shuffle(is_df.begin() + 1, is_df.end(), rng);

  DesignGraph graph;
  std::vector<TemplateModel> models;
  std::vector<std::string> template_names;
  std::vector<NameRule> rules;
  std::map<std::string, int> template_index;
  auto template_for = [&](const std::string& name) {
    auto it = template_index.find(name);
    if (it != template_index.end()) return it->second;
    const int id = static_cast<int>(models.size());
    models.push_back(random_template(spec, name, rng));
    template_names.push_back(name);
    template_index[name] = id;
    return id;
  };

  std::vector<int> type_size(std::max(0, spec.kernel_types));
  for (int& n : type_size) n = uni(spec.min_functions, spec.max_functions);
  int df_count = 0, nd_count = 0;
  for (size_t k = 0; k < is_df.size(); ++k) {
    Kernel kernel;
    if (is_df[k]) {
      const int type = spec.kernel_types > 0 ? df_count % spec.kernel_types : -1;
      kernel.name = "df" + std::to_string(df_count);
      kernel.kind = KernelKind::kDataflow;
      // Kernel instances of one type share a shape.
      const int n = type >= 0 ? type_size[type] : uni(spec.min_functions, spec.max_functions);
      for (int j = 0; j < n; ++j) {
        Function fn;
        if (type >= 0) {
          const std::string tpl = "t" + std::to_string(type) + "_f" + std::to_string(j);
          fn.name = tpl + "_" + std::to_string(df_count);
          if (template_index.find(tpl) == template_index.end()) {
            rules.push_back({tpl + "_[0-9]+", tpl});
          }
          template_for(tpl);
        } else {
          fn.name = kernel.name + "_f" + std::to_string(j);
          fn.template_name = fn.name;
          template_for(fn.name);
        }
        fn.kernel = static_cast<int>(k);
        kernel.functions.push_back(graph.function_count());
        graph.functions.push_back(fn);
      }
      ++df_count;
    } else {
      kernel.name = "nd" + std::to_string(nd_count++);
      kernel.kind = KernelKind::kNonDataflow;
      Function fn;
      fn.name = kernel.name + "_main";
      fn.template_name = fn.name;
      template_for(fn.name);
      fn.kernel = static_cast<int>(k);
      kernel.functions.push_back(graph.function_count());
      graph.functions.push_back(fn);
    }
    graph.kernels.push_back(kernel);
  }

  const std::vector<std::int64_t> widths{8, 16, 32, 64, 128};
  auto width = [&] { return widths[uni(0, static_cast<int>(widths.size()) - 1)]; };
  std::vector<bool> ram_bound(graph.function_count(), false);
  for (const Kernel& k : graph.kernels) {
    for (size_t j = 1; j < k.functions.size(); ++j) {
      graph.edges.push_back({k.functions[j - 1], k.functions[j], EdgeKind::kFifo, width()});
    }
  }
  // Each later kernel consumes from one earlier kernel. Non-dataflow
  // kernels talk through RAM to functions not yet RAM-bound.
  for (size_t k = 1; k < graph.kernels.size(); ++k) {
    const int from = uni(0, static_cast<int>(k) - 1);
    const Kernel& src = graph.kernels[from];
    const Kernel& dst = graph.kernels[k];
    const bool ram = !is_df[from] || !is_df[k];
    int s = src.functions.back();
    int d = dst.functions.front();
    if (ram) {
      auto free_fn = [&](const Kernel& kern, bool last) {
        if (kern.kind == KernelKind::kNonDataflow) return kern.functions.front();
        const int n = static_cast<int>(kern.functions.size());
        for (int i = 0; i < n; ++i) {
          const int f = kern.functions[last ? n - 1 - i : i];
          if (!ram_bound[f]) return f;
        }
        return -1;
      };
      s = free_fn(src, true);
      d = free_fn(dst, false);
      if (s >= 0 && d >= 0) {
        graph.edges.push_back({s, d, EdgeKind::kRam, width()});
        if (is_df[from]) ram_bound[s] = true;
        if (is_df[k]) ram_bound[d] = true;
        continue;
      }
      s = src.functions.back();
      d = dst.functions.front();
    }
    graph.edges.push_back({s, d, EdgeKind::kFifo, width()});
  }
  graph.finalize();

  // Cost every template.
  std::vector<std::vector<std::pair<Cycles, std::array<double, kNumResources>>>> costed(models.size());
  std::vector<std::vector<DirectiveSkeleton>> spaces(models.size());
  for (size_t t = 0; t < models.size(); ++t) {
    spaces[t] = gen_directive_space(models[t].loops, models[t].arrays, spec.max_points);
    costed[t] = cost_space(models[t], spaces[t], spec, rng);
  }

  // Scale resources so the baseline fills `fill` of the summed slot budget.
  std::array<double, kNumResources> base{};
  std::vector<int> tpl_of(graph.function_count());
  for (int f = 0; f < graph.function_count(); ++f) {
    const Function& fn = graph.functions[f];
    std::string tpl = fn.template_name;
    if (tpl.empty()) tpl = fn.name.substr(0, fn.name.rfind('_'));
    tpl_of[f] = template_index.at(tpl);
    for (int t = 0; t < kNumResources; ++t) base[t] += costed[tpl_of[f]][0].second[t];
  }
  ResourceVector budget;
  for (int s = 0; s < device.slot_count(); ++s) budget += device.slot_budget(s);
  std::array<double, kNumResources> scale{};
  for (int t = 0; t < kNumResources; ++t) {
    scale[t] = base[t] > 0 ? spec.fill * static_cast<double>(budget[t]) / base[t] : 1.0;
  }
  // Keep every RAM group well inside one slot at baseline.
  const RamGroups groups = build_ram_groups(graph);
  const ResourceVector slot_budget = device.slot_budget(0);
  double shrink = 1.0;
  for (int g = 0; g < groups.count(); ++g) {
    for (int t = 0; t < kNumResources; ++t) {
      double sum = 0;
      for (int f : groups.members[g]) sum += costed[tpl_of[f]][0].second[t] * scale[t];
      if (sum > 0) shrink = std::min(shrink, 0.8 * static_cast<double>(slot_budget[t]) / sum);
    }
  }
  for (double& s : scale) s *= shrink;

  std::vector<QoRTemplate> templates;
  for (size_t t = 0; t < models.size(); ++t) {
    QoRTemplate tpl;
    tpl.name = template_names[t];
    tpl.loops = models[t].loops;
    for (size_t p = 0; p < costed[t].size(); ++p) {
      QoRPoint pt;
      pt.id = p == 0 ? std::string(kBaselineId) : "p" + std::to_string(p);
      pt.directives = spaces[t][p].directives;
      pt.latency = costed[t][p].first;
      std::array<std::int64_t, kNumResources> r{};
      for (int k = 0; k < kNumResources; ++k) {
        r[k] = static_cast<std::int64_t>(std::llround(costed[t][p].second[k] * scale[k]));
      }
      pt.resources = ResourceVector(r[0], r[1], r[2], r[3], r[4]);
      tpl.points.push_back(std::move(pt));
    }
    templates.push_back(std::move(tpl));
  }
  QoRLibrary qor(std::move(templates), std::move(rules));
  qor.bind(graph);

  Instance inst;
  inst.design = to_json(graph);
  inst.qor = to_json(qor);
  inst.device = to_json(device);
  return inst;
}

void write_instance(const Instance& inst, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "design.json", inst.design);
  write_json_file(dir / "qor.json", inst.qor);
  write_json_file(dir / "device.json", inst.device);
}

}  // namespace fado

namespace fado {

namespace {

struct ToyFunction {
  const char* name;
  Cycles latency;
  std::int64_t lut;
  Cycles fast_latency;
  std::int64_t fast_lut;
};

// LUT-only costs on two slots of 100 units at a 70% limit.
constexpr ToyFunction kToy[] = {
    {"A", 5, 30, 4, 60},
    {"B", 6, 8, 3, 12},
    {"C", 4, 22, 3, 80},
    {"D", 7, 5, 5, 14},
    {"E", 8, 10, 2, 15},
};

}  // namespace

Instance toy_instance() {
  Instance inst;
  inst.design = {{"kernels",
                  {{{"name", "K1"}, {"kind", "dataflow"}, {"functions", {{{"name", "A"}}, {{"name", "B"}}}}},
                   {{"name", "K2"}, {"kind", "non_dataflow"}, {"functions", {{{"name", "C"}}}}},
                   {{"name", "K3"}, {"kind", "dataflow"}, {"functions", {{{"name", "D"}}, {{"name", "E"}}}}}}},
                 {"edges",
                  {{{"src", "A"}, {"dst", "B"}, {"kind", "fifo"}, {"width", 16}},
                   {{"src", "B"}, {"dst", "C"}, {"kind", "ram"}, {"width", 32}},
                   {{"src", "C"}, {"dst", "D"}, {"kind", "ram"}, {"width", 32}},
                   {{"src", "D"}, {"dst", "E"}, {"kind", "fifo"}, {"width", 8}}}}};
  json templates = json::array();
  for (const ToyFunction& f : kToy) {
    auto res = [](std::int64_t lut) { return json{{"BRAM", 0}, {"DSP", 0}, {"FF", 0}, {"LUT", lut}, {"URAM", 0}}; };
    templates.push_back({{"name", f.name},
                         {"points",
                          {{{"id", "baseline"}, {"directives", json::object()}, {"latency", f.latency}, {"resources", res(f.lut)}},
                           {{"id", "pipelined"},
                            {"directives", {{"PIPELINE main", "II=1"}}},
                            {"latency", f.fast_latency},
                            {"resources", res(f.fast_lut)}}}}});
  }
  inst.qor = {{"templates", templates}, {"name_rules", json::array()}};
  json slot_cap = {{"BRAM", 100}, {"DSP", 100}, {"FF", 100}, {"LUT", 100}, {"URAM", 100}};
  inst.device = {{"width", 1},
                 {"height", 2},
                 {"util_limit", 0.7},
                 {"sll_limit", 0.9},
                 {"slots", {{{"id", 0}, {"x", 0}, {"y", 0}, {"capacity", slot_cap}}, {{"id", 1}, {"x", 0}, {"y", 1}, {"capacity", slot_cap}}}},
                 {"die_boundaries", {{{"y", 0}, {"halves", {{{"x", 0}, {"sll_capacity", 1000}}}}}}}};
  return inst;
}

}  // namespace fado
