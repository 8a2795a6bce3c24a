#include <functional>
#include <random>

#include "doctest.h"
#include "fado/error.hpp"
#include "fado/instancegen.hpp"
#include "support.hpp"

using namespace fado;
using namespace fado::test;

TEST_CASE("resource vector arithmetic") {
  ResourceVector a(1, 2, 3, 4, 5), b(1, 1, 1, 1, 1);
  CHECK(a + b == ResourceVector(2, 3, 4, 5, 6));
  CHECK(a - b == ResourceVector(0, 1, 2, 3, 4));
  CHECK_THROWS_AS(b - a, Error);
  CHECK(b.le(a));
  CHECK_FALSE(a.le(b));
  CHECK(ResourceVector::max(ResourceVector(5, 0, 0, 0, 0), b) == ResourceVector(5, 1, 1, 1, 1));
  CHECK(ResourceVector().is_zero());
}

TEST_CASE("utilization ratio") {
  const ResourceVector cap(2016, 5184, 1319040, 659520, 544);
  CHECK(utilization_ratio(ResourceVector(), cap) == 0.0);
  CHECK(utilization_ratio(cap, cap) == 1.0);
  CHECK(utilization_ratio(ResourceVector(1008, 0, 0, 0, 0), cap) == 0.5);
  CHECK_THROWS_AS(utilization_ratio(ResourceVector(1, 0, 0, 0, 0), ResourceVector(0, 1, 1, 1, 1)), Error);
  CHECK(scaled_budget(ResourceVector(10, 11, 100, 3, 1), 0.65) == ResourceVector(6, 7, 65, 1, 0));
}

TEST_CASE("device presets and validation") {
  const DeviceModel u250 = device_preset("u250_lower");
  CHECK(u250.slot_count() == 4);
  CHECK(u250.total_capacity() == ResourceVector(2016, 5184, 1319040, 659520, 544));
  for (const Slot& s : u250.slots) CHECK(s.capacity == ResourceVector(504, 1296, 329760, 164880, 136));

  Builder one;
  one.grid(1, 1, uniform(10));
  const DeviceModel d = device_from_json(one.device);
  CHECK(d.half_count() == 0);
  CHECK(d.die_boundaries.empty());

  Builder two;
  two.grid(2, 2, uniform(10));
  two.device["die_boundaries"][0]["halves"].erase(1);
  CHECK_THROWS_AS(device_from_json(two.device), Error);

  Builder bad;
  bad.grid(1, 2, uniform(10), 100, 1.5);
  CHECK_THROWS_AS(device_from_json(bad.device), Error);
}

TEST_CASE("design graph validation") {
  const Instance toy = toy_instance();
  const DesignGraph g = design_from_json(toy.design);
  CHECK(g.function_count() == 5);
  CHECK(g.kernels.size() == 3);
  CHECK(g.fifo_edges.size() == 2);

  json empty = {{"kernels", json::array()}};
  CHECK_THROWS_AS(design_from_json(empty), Error);

  Builder self;
  self.kernel("K", true, {"a"}).ram("a", "a").points("a", {{3, lut(1)}}).grid(1, 1, uniform(10));
  auto p = self.build();
  CHECK(p->groups.count() == 1);

  Builder cyc;
  cyc.kernel("K1", true, {"a"}).kernel("K2", true, {"b"}).fifo("a", "b", 4).fifo("b", "a", 4);
  CHECK_THROWS_AS(design_from_json(cyc.design), Error);

  Builder unknown;
  unknown.kernel("K1", true, {"a"}).fifo("a", "zz", 4);
  CHECK_THROWS_AS(design_from_json(unknown.design), Error);
}

TEST_CASE("template resolution") {
  Builder b;
  b.kernel("K", true, {"funcA_0_1", "plain"}).grid(1, 1, uniform(10));
  b.points("funcA", {{5, lut(1)}}).points("plain", {{4, lut(1)}});
  b.qor["name_rules"] = json::array({{{"regex", "funcA_[0-9]_[0-9]"}, {"template", "funcA"}}});
  auto p = b.build();
  CHECK(p->qor.of(fn(*p, "funcA_0_1")).name == "funcA");
  CHECK(p->qor.of(fn(*p, "plain")).name == "plain");

  Builder amb = b;
  amb.qor["name_rules"].push_back({{"regex", "funcA_.*"}, {"template", "plain"}});
  CHECK_THROWS_AS(amb.build(), Error);

  Builder missing;
  missing.kernel("K", true, {"nobody"}).points("other", {{1, lut(1)}}).grid(1, 1, uniform(10));
  CHECK_THROWS_AS(missing.build(), Error);
}

TEST_CASE("points are sorted and the baseline is located") {
  Builder b;
  b.kernel("K", true, {"f"}).grid(1, 1, uniform(100));
  b.points("f", {{10, lut(5)}, {3, lut(40)}, {7, lut(20)}, {3, lut(30)}});
  auto p = b.build();
  const QoRTemplate& t = p->qor.of(0);
  for (size_t i = 1; i < t.points.size(); ++i) CHECK(t.points[i - 1].latency <= t.points[i].latency);
  CHECK(t.points[0].resources == lut(30));  // latency tie broken by utilization
  CHECK(t.points[t.baseline].id == kBaselineId);
  CHECK_FALSE(t.baseline_not_slowest);

  Builder nm;
  nm.kernel("K", true, {"f"}).grid(1, 1, uniform(100));
  nm.points("f", {{5, lut(5)}, {9, lut(1)}});
  auto q = nm.build();
  CHECK(q->qor.of(0).baseline_not_slowest);
  CHECK(q->qor.warnings().size() == 1);
}

TEST_CASE("design latency") {
  Builder b;
  b.kernel("K", true, {"a", "b", "c"}).grid(1, 1, uniform(100));
  b.points("a", {{3, lut(1)}}).points("b", {{7, lut(1)}}).points("c", {{5, lut(1)}});
  auto p = b.build();
  CHECK(design_latency(p->graph, baseline_configuration(p->graph, p->qor), p->qor) == 7);

  Builder s;
  s.kernel("K1", true, {"x"}).kernel("K2", true, {"y"}).kernel("K3", true, {"z"}).fifo("x", "y", 1);
  s.grid(1, 1, uniform(100)).points("x", {{7, lut(1)}}).points("y", {{4, lut(1)}}).points("z", {{5, lut(1)}});
  auto q = s.build();
  CHECK(design_latency(q->graph, baseline_configuration(q->graph, q->qor), q->qor) == 11);

  Builder n;
  n.kernel("K", false, {"only"}).grid(1, 1, uniform(100)).points("only", {{42, lut(1)}});
  auto r = n.build();
  CHECK(design_latency(r->graph, baseline_configuration(r->graph, r->qor), r->qor) == 42);

  Builder two;
  two.kernel("K", false, {"u", "v"}).grid(1, 1, uniform(100));
  CHECK_THROWS_AS(design_from_json(two.design), Error);
}

TEST_CASE("design latency equals the longest kernel path") {
  // Random kernel DAGs against path enumeration.
  std::mt19937 rng(7);
  for (int round = 0; round < 30; ++round) {
    const int k = 2 + static_cast<int>(rng() % 5);
    DesignGraph g;
    std::vector<Cycles> lat;
    for (int i = 0; i < k; ++i) {
      Kernel kern{"k" + std::to_string(i), KernelKind::kDataflow, {}};
      const int nf = 1 + static_cast<int>(rng() % 3);
      for (int j = 0; j < nf; ++j) {
        kern.functions.push_back(g.function_count());
        g.functions.push_back({"f" + std::to_string(g.function_count()), "", i});
        lat.push_back(1 + static_cast<Cycles>(rng() % 20));
      }
      g.kernels.push_back(kern);
    }
    std::vector<std::vector<int>> succ(k);
    for (int a = 0; a < k; ++a) {
      for (int b2 = a + 1; b2 < k; ++b2) {
        if (rng() % 2) {
          g.edges.push_back({g.kernels[a].functions[0], g.kernels[b2].functions[0], EdgeKind::kFifo, 1});
          succ[a].push_back(b2);
        }
      }
    }
    g.finalize();
    std::vector<Cycles> kl(k, 0);
    for (int i = 0; i < k; ++i) {
      for (int f : g.kernels[i].functions) kl[i] = std::max(kl[i], lat[f]);
    }
    Cycles best = 0;
    std::function<void(int, Cycles)> walk = [&](int v, Cycles acc) {
      acc += kl[v];
      best = std::max(best, acc);
      for (int w : succ[v]) walk(w, acc);
    };
    for (int i = 0; i < k; ++i) walk(i, 0);
    CHECK(design_latency(g, lat) == best);
  }
}

TEST_CASE("json round trip") {
  const Instance toy = toy_instance();
  auto p = make_problem(toy.design, toy.qor, toy.device);
  const DesignGraph g2 = design_from_json(to_json(p->graph));
  CHECK(g2.function_count() == p->graph.function_count());
  const QoRLibrary q2 = qor_from_json(to_json(p->qor), g2);
  for (int f = 0; f < g2.function_count(); ++f) {
    REQUIRE(q2.point_count(f) == p->qor.point_count(f));
    for (int i = 0; i < q2.point_count(f); ++i) {
      CHECK(q2.point(f, i).latency == p->qor.point(f, i).latency);
      CHECK(q2.point(f, i).resources == p->qor.point(f, i).resources);
    }
  }
  const DeviceModel d2 = device_from_json(to_json(p->device));
  CHECK(d2.slot_count() == p->device.slot_count());
  CHECK(d2.sll_budget(0) == p->device.sll_budget(0));
}
