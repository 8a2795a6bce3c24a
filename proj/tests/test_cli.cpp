#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fado/cli.hpp"
#include "support.hpp"

using namespace fado;
using namespace fado::test;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run fado_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fado");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fado_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> inputs(const fs::path& dir) {
  return {"--design", (dir / "design.json").string(), "--qor", (dir / "qor.json").string(), "--device",
          (dir / "device.json").string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("optimize, check and verify on the toy fixture") {
  const fs::path dir = scratch("toy");
  REQUIRE(fado_cli({"gen", "--preset", "toy", "--out", (dir / "in").string()}).code == kExitOk);

  const Run mc = fado_cli(concat({"optimize", "--out", (dir / "mincut").string()}, inputs(dir / "in")));
  REQUIRE(mc.code == kExitOk);
  CHECK(mc.out.find("latency 13 (baseline 18)") != std::string::npos);
  for (auto f : {"result.json", "trace.csv", "directives.txt", "floorplan.json"}) CHECK(fs::exists(dir / "mincut" / f));
  CHECK_FALSE(fs::exists(dir / "mincut" / "directives.tcl"));

  const Run bal = fado_cli(
      concat({"optimize", "--initial", "balanced", "--tcl-stub", "--out", (dir / "balanced").string()}, inputs(dir / "in")));
  REQUIRE(bal.code == kExitOk);
  CHECK(bal.out.find("latency 13") != std::string::npos);
  CHECK(fs::exists(dir / "balanced" / "directives.tcl"));
  CHECK(slurp(dir / "mincut" / "trace.csv") != slurp(dir / "balanced" / "trace.csv"));

  const json result = read_json_file(dir / "mincut" / "result.json");
  CHECK(result["latency"] == 13);
  CHECK(result["manifest"]["flags"]["initial"] == "mincut");
  CHECK(result["manifest"]["inputs"]["design"] == (dir / "in" / "design.json").string());

  CHECK(fado_cli({"check", (dir / "mincut" / "result.json").string()}).code == kExitOk);
  const Run v = fado_cli({"verify-optimal", (dir / "mincut" / "result.json").string(), "--out", (dir / "v").string()});
  CHECK(v.code == kExitOk);
  CHECK(v.out.rfind("optimal", 0) == 0);
  CHECK(read_json_file(dir / "v" / "verdict.json")["verdict"] == "optimal");

  // The result stands on its own once the inputs are gone.
  fs::remove_all(dir / "in");
  CHECK(fado_cli({"check", (dir / "mincut" / "result.json").string()}).code == kExitOk);
}

TEST_CASE("iteration cap zero keeps the baseline") {
  const fs::path dir = scratch("cap");
  REQUIRE(fado_cli({"gen", "--preset", "toy", "--out", (dir / "in").string()}).code == kExitOk);
  const Run r = fado_cli(concat({"optimize", "--iter-cap", "0", "--out", (dir / "o").string()}, inputs(dir / "in")));
  REQUIRE(r.code == kExitOk);
  const json result = read_json_file(dir / "o" / "result.json");
  CHECK(result["latency"] == 18);
  for (auto& [name, id] : result["configuration"].items()) CHECK(id == std::string(kBaselineId));
  CHECK(slurp(dir / "o" / "trace.csv").find("iteration,") == std::string::npos);
}

TEST_CASE("check rejects edited results") {
  const fs::path dir = scratch("edit");
  REQUIRE(fado_cli({"gen", "--preset", "toy", "--out", (dir / "in").string()}).code == kExitOk);
  REQUIRE(fado_cli(concat({"optimize", "--out", (dir / "o").string()}, inputs(dir / "in"))).code == kExitOk);
  const json result = read_json_file(dir / "o" / "result.json");

  json split = result;
  const int b_slot = split["assignment"]["B"];
  split["assignment"]["C"] = 1 - b_slot;
  write_json_file(dir / "split.json", split);
  const Run s = fado_cli({"check", (dir / "split.json").string()});
  CHECK(s.code == kExitInfeasible);
  CHECK(s.out.find("ram-group") != std::string::npos);

  json sll = result;
  sll["routing"]["sll_used"][0]["used"] = sll["routing"]["sll_used"][0]["used"].get<int>() + 5;
  write_json_file(dir / "sll.json", sll);
  const Run c = fado_cli({"check", (dir / "sll.json").string()});
  CHECK(c.code == kExitInfeasible);
  CHECK(c.out.find("sll-conservation") != std::string::npos);

  json lat = result;
  lat["latency"] = 12;
  write_json_file(dir / "lat.json", lat);
  CHECK(fado_cli({"check", (dir / "lat.json").string()}).code == kExitInfeasible);

  json broken = result;
  broken.erase("configuration");
  write_json_file(dir / "broken.json", broken);
  CHECK(fado_cli({"check", (dir / "broken.json").string()}).code == kExitUsage);
}

TEST_CASE("oracle and verify exit codes") {
  const fs::path dir = scratch("oracle");
  Builder b;
  b.kernel("K", true, {"f"}).grid(1, 2, uniform(100)).points("f", {{9, lut(5)}, {4, lut(20)}});
  fs::create_directories(dir / "one");
  write_json_file(dir / "one" / "design.json", b.design);
  write_json_file(dir / "one" / "qor.json", b.qor);
  write_json_file(dir / "one" / "device.json", b.device);
  const Run o = fado_cli(concat({"oracle", "--out", (dir / "o").string()}, inputs(dir / "one")));
  CHECK(o.code == kExitOk);
  CHECK(o.out.find("latency 4") != std::string::npos);
  const json verdict = read_json_file(dir / "o" / "oracle.json");
  CHECK(verdict["witness"]["configuration"]["f"] == "p1");
  write_json_file(dir / "witness.json", verdict["witness"]);
  CHECK(fado_cli({"check", (dir / "witness.json").string()}).code == kExitOk);

  Builder big;
  big.kernel("K", true, {"f"}).grid(1, 2, uniform(100)).points("f", {{9, lut(80)}});
  write_json_file(dir / "one" / "qor.json", big.qor);
  CHECK(fado_cli(concat({"oracle"}, inputs(dir / "one"))).code == kExitInfeasible);

  REQUIRE(fado_cli({"gen", "--preset", "toy", "--out", (dir / "toy").string()}).code == kExitOk);
  REQUIRE(fado_cli(concat({"optimize", "--iter-cap", "1", "--out", (dir / "cut").string()}, inputs(dir / "toy")))
              .code == kExitOk);
  const Run v = fado_cli({"verify-optimal", (dir / "cut" / "result.json").string(), "--out", (dir / "v").string()});
  CHECK(v.code == kExitCounterexample);
  CHECK(fado_cli({"check", (dir / "v" / "counterexample.json").string()}).code == kExitOk);

  CHECK(fado_cli({"verify-optimal", (dir / "cut" / "result.json").string(), "--budget", "1"}).code == kExitBudget);
  CHECK(fado_cli(concat({"oracle", "--budget", "1"}, inputs(dir / "toy"))).code == kExitBudget);
}

TEST_CASE("usage errors") {
  CHECK(fado_cli({}).code == kExitUsage);
  CHECK(fado_cli({"optimize"}).code == kExitUsage);
  CHECK(fado_cli({"bogus"}).code == kExitUsage);
  CHECK(fado_cli({"check", "/nonexistent/result.json"}).code == kExitUsage);
  CHECK(fado_cli({"gen", "--preset", "nope", "--out", "/tmp/x"}).code == kExitUsage);
  CHECK(fado_cli({"--help"}).code == kExitOk);

  const fs::path dir = scratch("usage");
  REQUIRE(fado_cli({"gen", "--preset", "toy", "--out", (dir / "in").string()}).code == kExitOk);
  CHECK(fado_cli(concat({"optimize", "--util-limit", "1.5", "--out", (dir / "o").string()}, inputs(dir / "in"))).code ==
        kExitUsage);
  // Nothing fits at a tiny limit, even after the retry at full capacity.
  Builder b;
  b.kernel("K", true, {"f"}).grid(1, 2, uniform(100)).points("f", {{9, lut(120)}});
  write_json_file(dir / "in" / "design.json", b.design);
  write_json_file(dir / "in" / "qor.json", b.qor);
  write_json_file(dir / "in" / "device.json", b.device);
  CHECK(fado_cli(concat({"optimize", "--out", (dir / "o").string()}, inputs(dir / "in"))).code == kExitInfeasible);
}

TEST_CASE("gen is reproducible") {
  const fs::path dir = scratch("gen");
  for (auto sub : {"a", "b"}) {
    REQUIRE(fado_cli({"gen", "--preset", "medium", "--seed", "9", "--out", (dir / sub).string()}).code == kExitOk);
  }
  for (auto f : {"design.json", "qor.json", "device.json"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}
