#include <random>

#include "doctest.h"
#include "fado/error.hpp"
#include "support.hpp"

using namespace fado;
using namespace fado::test;

namespace {

int die_crossings(const Route& r) {
  int n = 0;
  for (const Crossing& c : r) n += c.kind == CrossingKind::kDie;
  return n;
}

}  // namespace

TEST_CASE("route shapes") {
  Builder b;
  b.grid(2, 4, uniform(100));
  const DeviceModel d = device_from_json(b.device);
  const Edge e{0, 1, EdgeKind::kFifo, 32};
  const RouteState empty{{}, std::vector<std::int64_t>(d.half_count(), 0), {}};

  CHECK(route_edge(e, 3, 3, d, empty).route.empty());

  // Top row, column 0 down to bottom row, column 1.
  const RouteResult r = route_edge(e, d.slot_at(0, 3), d.slot_at(1, 0), d, empty);
  CHECK(r.feasible);
  CHECK(die_crossings(r.route) == 3);
  CHECK(r.route.size() == 4);

  const Edge ram{0, 1, EdgeKind::kRam, 0};
  CHECK_THROWS_AS(route_edge(ram, 0, 1, d, empty), Error);
}

TEST_CASE("equal edges share a boundary evenly") {
  Builder b;
  b.kernel("K", true, {"s1", "t1", "s2", "t2"}).fifo("s1", "t1", 50).fifo("s2", "t2", 50);
  b.grid(2, 2, uniform(100), 1000);
  for (auto n : {"s1", "t1", "s2", "t2"}) b.points(n, {{1, lut(1)}});
  auto p = b.build();
  // Both edges go from (0,0) to (1,1) and may cross in either column.
  const auto slot_of = place(*p, {{"s1", 0}, {"t1", 3}, {"s2", 0}, {"t2", 3}});
  const RecomputeResult r = recompute_all(p->graph, p->device, slot_of);
  CHECK(r.feasible);
  CHECK(r.state.sll_used[0] == 50);
  CHECK(r.state.sll_used[1] == 50);
}

TEST_CASE("moving a function two slots away adds two register groups") {
  Builder b;
  b.kernel("K", true, {"s", "d"}).fifo("s", "d", 16).grid(2, 2, uniform(100));
  b.points("s", {{1, lut(1)}}).points("d", {{1, lut(1)}});
  auto p = b.build();
  std::vector<int> slot_of = place(*p, {{"s", 0}, {"d", 0}});
  Pipeliner pl(p->graph, p->device);
  REQUIRE(pl.reset(slot_of));
  CHECK(pl.state().register_groups[0] == 0);

  const int d = fn(*p, "d");
  slot_of[d] = 3;
  const std::vector<int> moved{d};
  auto delta = pl.update(moved, slot_of);
  REQUIRE(delta);
  CHECK(delta->register_delta() == 2);
  CHECK(pl.state().register_groups[0] == 2);

  CHECK(pl.update({}, slot_of)->empty());

  const RouteState before = recompute_all(p->graph, p->device, place(*p, {{"s", 0}, {"d", 0}})).state;
  slot_of[d] = 0;
  REQUIRE(pl.update(moved, slot_of));
  CHECK(pl.state() == before);
}

TEST_CASE("no cross-slot edges and a single over-budget edge") {
  Builder b;
  b.kernel("K", true, {"a", "b"}).fifo("a", "b", 95).grid(1, 2, uniform(100), 100);
  b.points("a", {{1, lut(1)}}).points("b", {{1, lut(1)}});
  auto p = b.build();
  const RecomputeResult same = recompute_all(p->graph, p->device, {0, 0});
  CHECK(same.feasible);
  CHECK(same.state.routes[0].empty());
  CHECK(same.state.sll_used[0] == 0);

  const RecomputeResult apart = recompute_all(p->graph, p->device, {0, 1});
  CHECK_FALSE(apart.feasible);  // 95 > floor(0.9 * 100)

  Pipeliner pl(p->graph, p->device);
  REQUIRE(pl.reset({0, 0}));
  const std::vector<int> moved{1};
  CHECK_FALSE(pl.update(moved, {0, 1}));
  CHECK(pl.state() == same.state);
}

TEST_CASE("incremental routing equals a full recompute under random moves") {
  std::mt19937 rng(3);
  for (int round = 0; round < 40; ++round) {
    const int w = 1 + static_cast<int>(rng() % 3);
    const int h = 2 + static_cast<int>(rng() % 3);
    const int n = 4 + static_cast<int>(rng() % 8);
    Builder b;
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("f" + std::to_string(i));
    b.kernel("K", true, names).grid(w, h, uniform(1000), 200 + static_cast<std::int64_t>(rng() % 200));
    for (auto& nm : names) b.points(nm, {{1, lut(1)}});
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng() % 3 == 0) b.fifo(names[i], names[j], 1 + static_cast<std::int64_t>(rng() % 64));
      }
    }
    auto p = b.build();
    const int slots = w * h;
    std::vector<int> slot_of(n, 0);
    Pipeliner pl(p->graph, p->device);
    REQUIRE(pl.reset(slot_of));

    std::vector<std::pair<std::vector<int>, RouteDelta>> history;
    for (int step = 0; step < 60; ++step) {
      std::vector<int> next = slot_of;
      std::vector<int> moved;
      const int k = 1 + static_cast<int>(rng() % 2);
      for (int i = 0; i < k; ++i) {
        const int f = static_cast<int>(rng() % n);
        next[f] = static_cast<int>(rng() % slots);
        moved.push_back(f);
      }
      const RecomputeResult fresh = recompute_all(p->graph, p->device, next);
      auto delta = pl.update(moved, next);
      CHECK(delta.has_value() == fresh.feasible);
      if (delta) {
        CHECK(pl.state() == fresh.state);
        CHECK(sll_conserved(p->graph, pl.state()));
        history.emplace_back(slot_of, *delta);
        slot_of = next;
      } else {
        CHECK(pl.state() == recompute_all(p->graph, p->device, slot_of).state);
      }
    }
    // Reverting newest first walks back through the same states.
    while (!history.empty()) {
      pl.revert(history.back().second);
      CHECK(pl.state() == recompute_all(p->graph, p->device, history.back().first).state);
      history.pop_back();
    }
  }
}

TEST_CASE("conservation catches an edited table") {
  Builder b;
  b.kernel("K", true, {"a", "b"}).fifo("a", "b", 10).grid(1, 2, uniform(100));
  b.points("a", {{1, lut(1)}}).points("b", {{1, lut(1)}});
  auto p = b.build();
  RouteState s = recompute_all(p->graph, p->device, {0, 1}).state;
  CHECK(sll_conserved(p->graph, s));
  s.sll_used[0] += 1;
  CHECK_FALSE(sll_conserved(p->graph, s));
}
