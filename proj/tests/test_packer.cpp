#include <random>

#include "doctest.h"
#include "fado/error.hpp"
#include "fado/instancegen.hpp"
#include "support.hpp"

using namespace fado;
using namespace fado::test;

namespace {

int point(const Problem& p, const std::string& function, const std::string& id) {
  return p.qor.of(fn(p, function)).find_point(id);
}

double headroom(const PackState& s) {
  double best = 0.0;
  for (int slot = 0; slot < s.device().slot_count(); ++slot) best = std::max(best, 1.0 - s.utilization(slot));
  return best;
}

}  // namespace

TEST_CASE("legality report") {
  const Instance t = toy_instance();
  auto p = make_problem(t.design, t.qor, t.device);
  const InitResult init = boot(*p, InitialKind::kMinCut);
  CHECK(check_legal(baseline_state(*p, init.floorplan.slot_of)).legal());

  std::vector<int> split = init.floorplan.slot_of;
  split[fn(*p, "C")] = 1 - split[fn(*p, "B")];
  PackState s = baseline_state(*p, split);
  const LegalityReport r = check_legal(s);
  REQUIRE(r.split_groups.size() == 1);
  CHECK(r.split_groups[0].group == p->groups.group_of[fn(*p, "B")]);
  const auto text = r.describe(s);
  REQUIRE(text.size() == 1);
  CHECK(text[0].find("{B,C,D}") != std::string::npos);

  Builder b;
  b.kernel("K", true, {"a", "b"}).fifo("a", "b", 95).grid(1, 2, uniform(100), 100);
  b.points("a", {{1, lut(1)}}).points("b", {{1, lut(1)}});
  auto q = b.build();
  PackState over = baseline_state(*q, {0, 1});
  const LegalityReport sll = check_legal(over);
  REQUIRE(sll.sll.size() == 1);
  CHECK(sll.sll[0].used == 95);
  CHECK(sll.sll[0].budget == 90);
  CHECK(sll.overflows.empty());
}

TEST_CASE("critical resource") {
  const ResourceVector cap(504, 1296, 329760, 164880, 136);
  const CriticalResource empty = critical_resource(ResourceVector(), cap, ResourceVector(504, 0, 0, 0, 0));
  CHECK(empty.resource == Resource::kBram);
  CHECK(empty.ratio == 1.0);

  const ResourceVector used(10, 1000, 0, 0, 0);
  const CriticalResource same = critical_resource(used, cap, ResourceVector());
  CHECK(same.resource == Resource::kDsp);
  CHECK(same.ratio == doctest::Approx(1000.0 / 1296.0));

  // Ties go to the earlier resource.
  const CriticalResource tie = critical_resource(ResourceVector(), uniform(10), uniform(5));
  CHECK(tie.resource == Resource::kBram);

  std::mt19937 rng(9);
  for (int i = 0; i < 200; ++i) {
    auto r = [&](int hi) { return static_cast<ResourceVector::Amount>(rng() % hi); };
    const ResourceVector u(r(300), r(900), r(200000), r(100000), r(100));
    const ResourceVector c(r(200), r(300), r(100000), r(60000), r(30));
    const ResourceVector after = u + c;
    int arg = 0;
    double best = -1.0, sum = 0.0;
    for (int t = 0; t < kNumResources; ++t) {
      const double ratio = static_cast<double>(after[t]) / static_cast<double>(cap[t]);
      sum += ratio;
      if (ratio > best) {
        best = ratio;
        arg = t;
      }
    }
    const CriticalResource cr = critical_resource(u, cap, c);
    CHECK(static_cast<int>(cr.resource) == arg);
    CHECK(cr.ratio == doctest::Approx(best));
    CHECK(cr.others_mean == doctest::Approx((sum - best) / 4.0));
  }
}

TEST_CASE("online packing") {
  SUBCASE("in-place growth") {
    Builder b;
    b.kernel("K", true, {"f", "g"}).grid(1, 2, uniform(100), 1000, 0.7);
    b.points("f", {{10, lut(20)}, {5, lut(40)}}).points("g", {{10, lut(20)}});
    auto p = b.build();
    PackState s = baseline_state(*p, {0, 1});
    const PackTarget t{fn(*p, "f"), point(*p, "f", "p1")};
    const OnlineResult r = online_pack(std::span(&t, 1), s);
    CHECK(r.fit);
    CHECK(r.moves.empty());
    CHECK(s.latency_of(fn(*p, "f")) == 5);
  }

  SUBCASE("the grown function fits nowhere") {
    Builder b;
    b.kernel("K", true, {"blue", "x", "y", "z", "w"}).grid(2, 2, uniform(100), 1000, 0.7);
    b.points("blue", {{10, lut(30)}, {5, lut(60)}}).points("x", {{1, lut(20)}});
    b.points("y", {{1, lut(50)}}).points("z", {{1, lut(50)}}).points("w", {{1, lut(45)}});
    auto p = b.build();
    PackState s = baseline_state(*p, place(*p, {{"blue", 0}, {"x", 0}, {"y", 1}, {"z", 2}, {"w", 3}}));
    const PackState before = s;
    const PackTarget t{fn(*p, "blue"), point(*p, "blue", "p1")};
    const OnlineResult r = online_pack(std::span(&t, 1), s);
    CHECK_FALSE(r.fit);
    CHECK(s == before);
  }

  SUBCASE("the target moves to the other slot") {
    Builder b;
    b.kernel("K", true, {"f", "g"}).fifo("f", "g", 16).grid(1, 2, uniform(100), 1000, 0.7);
    b.points("f", {{10, lut(20)}, {5, lut(50)}}).points("g", {{10, lut(30)}});
    auto p = b.build();
    PackState s = baseline_state(*p, {0, 0});
    const PackTarget t{fn(*p, "f"), point(*p, "f", "p1")};
    const OnlineResult r = online_pack(std::span(&t, 1), s);
    CHECK(r.fit);
    REQUIRE(r.moves.size() == 1);
    CHECK(r.moves[0] == Move{fn(*p, "f"), 0, 1});
    REQUIRE(r.route_deltas.size() == 1);
    CHECK(r.route_deltas[0].register_delta() == 1);
    CHECK(check_legal(s).legal());
  }

  SUBCASE("a move over the SLL budget is rejected") {
    Builder b;
    b.kernel("K", true, {"f", "g"}).fifo("f", "g", 95).grid(1, 2, uniform(100), 100, 0.7);
    b.points("f", {{10, lut(20)}, {5, lut(50)}}).points("g", {{10, lut(30)}});
    auto p = b.build();
    PackState s = baseline_state(*p, {0, 0});
    const PackState before = s;
    const PackTarget t{fn(*p, "f"), point(*p, "f", "p1")};
    CHECK_FALSE(online_pack(std::span(&t, 1), s).fit);
    CHECK(s == before);
  }

  SUBCASE("frozen mode accepts only in-place fits") {
    Builder b;
    b.kernel("K", true, {"f", "g"}).grid(1, 2, uniform(100), 1000, 0.7);
    b.points("f", {{10, lut(20)}, {5, lut(50)}}).points("g", {{10, lut(30)}});
    auto p = b.build();
    PackState s = baseline_state(*p, {0, 0});
    const PackTarget t{fn(*p, "f"), point(*p, "f", "p1")};
    CHECK_FALSE(online_pack(std::span(&t, 1), s, false).fit);
    CHECK(online_pack(std::span(&t, 1), s, true).fit);
  }

  SUBCASE("batches are all or nothing") {
    // f fits only by moving; g then fits nowhere, so f's move is undone.
    Builder b;
    b.kernel("K", true, {"f", "g", "k", "h"}).grid(1, 2, uniform(100), 1000, 0.65);
    b.points("f", {{10, lut(20)}, {5, lut(60)}}).points("g", {{10, lut(20)}, {5, lut(50)}});
    b.points("k", {{1, lut(20)}}).points("h", {{1, lut(5)}});
    auto p = b.build();
    PackState s = baseline_state(*p, place(*p, {{"f", 0}, {"g", 0}, {"k", 0}, {"h", 1}}));
    const PackState before = s;
    const PackTarget batch[] = {{fn(*p, "f"), point(*p, "f", "p1")}, {fn(*p, "g"), point(*p, "g", "p1")}};
    CHECK_FALSE(online_pack(batch, s).fit);
    CHECK(s == before);
    const PackTarget first[] = {{fn(*p, "f"), point(*p, "f", "p1")}};
    const OnlineResult r = online_pack(first, s);
    CHECK(r.fit);
    CHECK(r.moves == std::vector<Move>{{fn(*p, "f"), 0, 1}});
  }
}

TEST_CASE("offline compaction schedule") {
  // Fullness order: slot 3, slot 0, slot 2, slot 1.
  Builder b;
  b.kernel("K", true, {"f3", "f0", "f2", "f1"}).grid(2, 2, uniform(100), 1000, 1.0);
  b.points("f3", {{1, lut(95)}}).points("f0", {{1, lut(70)}}).points("f2", {{1, lut(30)}});
  b.points("f1", {{1, lut(20)}});
  auto p = b.build();
  PackState s = baseline_state(*p, place(*p, {{"f3", 3}, {"f0", 0}, {"f2", 2}, {"f1", 1}}));
  const OfflineResult r = offline_repack(s);
  CHECK(r.trials == 6);
  REQUIRE(r.moves.size() == 1);
  CHECK(r.moves[0] == Move{fn(*p, "f2"), 2, 0});
  CHECK(headroom(s) >= 0.6);
  CHECK(check_legal(s).legal());
}

TEST_CASE("offline re-packing on one slot does nothing") {
  Builder b;
  b.kernel("K", true, {"a", "b"}).grid(1, 1, uniform(100));
  b.points("a", {{1, lut(10)}}).points("b", {{1, lut(10)}});
  auto p = b.build();
  PackState s = baseline_state(*p, {0, 0});
  CHECK(offline_repack(s).moves.empty());
}

TEST_CASE("offline re-packing clears slots hosting pinned groups") {
  Builder b;
  b.kernel("K1", false, {"n"}).kernel("K2", true, {"d"}).grid(1, 2, uniform(100), 1000, 0.7);
  b.points("n", {{1, lut(30)}}).points("d", {{1, lut(10)}});
  auto p = b.build();
  PackState s = baseline_state(*p, {0, 0});
  const OfflineResult r = offline_repack(s);
  REQUIRE(r.moves.size() == 1);
  CHECK(r.moves[0] == Move{fn(*p, "d"), 0, 1});
  CHECK(s.slot_of(fn(*p, "n")) == 0);
}

TEST_CASE("offline re-packing keeps states legal and does not lose headroom") {
  std::mt19937 rng(21);
  for (int round = 0; round < 40; ++round) {
    Builder b;
    const int n = 4 + static_cast<int>(rng() % 8);
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("f" + std::to_string(i));
    b.kernel("K", true, names).grid(2, 2, uniform(100), 120, 0.8);
    for (auto& nm : names) b.points(nm, {{1, lut(2 + static_cast<std::int64_t>(rng() % 18))}});
    for (int i = 0; i + 1 < n; ++i) {
      if (rng() % 2) b.fifo(names[i], names[i + 1], 1 + static_cast<std::int64_t>(rng() % 40));
    }
    auto p = b.build();
    const InitResult init = boot(*p, InitialKind::kBalanced);
    PackState s = baseline_state(*p, init.floorplan.slot_of);
    if (!check_legal(s).legal()) continue;  // start over SLL budget
    const double before = headroom(s);
    offline_repack(s);
    CHECK(check_legal(s).legal());
    CHECK(headroom(s) >= before - 1e-12);
    CHECK(s.routes() == recompute_all(p->graph, p->device, s.floorplan().slot_of).state);
  }
}
