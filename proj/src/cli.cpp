#include "fado/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "fado/error.hpp"
#include "fado/instancegen.hpp"
#include "fado/oracle.hpp"
#include "fado/report.hpp"
#include "fado/search.hpp"

namespace fado {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct OptimizeArgs {
  std::string design, qor, device, out;
  std::string initial = "mincut";
  std::optional<double> util_limit, sll_limit;
  std::optional<int> lookahead, iter_cap;
  std::string reading = "min";
  std::uint64_t seed = 0;
  bool frozen = false;
  bool tcl_stub = false;
};

struct OracleArgs {
  std::string design, qor, device, out;
  std::optional<double> util_limit, sll_limit;
  std::int64_t budget = kOracleDefaultBudget;
  int max_functions = kOracleMaxFunctions;
};

struct VerifyArgs {
  std::string result, out;
  std::int64_t budget = kOracleDefaultBudget;
  std::int64_t exhaustive_limit = VerifyOptions{}.exhaustive_limit;
  int samples = VerifyOptions{}.samples;
  std::uint64_t seed = VerifyOptions{}.seed;
};

struct GenArgs {
  std::string preset = "toy", out, mode, device;
  std::uint64_t seed = 1;
  std::optional<int> max_points;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

int cmd_optimize(const OptimizeArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.started = utc_timestamp();
  manifest.inputs = {{"design", a.design}, {"qor", a.qor}, {"device", a.device}};
  json flags = {{"initial", a.initial}, {"lookahead_reading", a.reading}, {"frozen", a.frozen}, {"seed", a.seed},
                {"tcl_stub", a.tcl_stub}};
  flags["util_limit"] = a.util_limit ? json(*a.util_limit) : json(nullptr);
  flags["sll_limit"] = a.sll_limit ? json(*a.sll_limit) : json(nullptr);
  flags["lookahead"] = a.lookahead ? json(*a.lookahead) : json(nullptr);
  flags["iter_cap"] = a.iter_cap ? json(*a.iter_cap) : json(nullptr);
  manifest.flags = flags;

  const InitialKind initial = parse_initial(a.initial);
  auto p = make_problem(read_json_file(a.design), read_json_file(a.qor), read_json_file(a.device),
                        {a.util_limit, a.sll_limit});
  const InitResult init = boot(*p, initial);
  PackState state(p->graph, p->qor, p->device, p->groups, baseline_configuration(p->graph, p->qor),
                  init.floorplan.slot_of);

  SearchOptions opts;
  opts.lookahead = a.lookahead;
  opts.reading = a.reading == "max" ? LookaheadReading::kMax : LookaheadReading::kMin;
  opts.iteration_cap = a.iter_cap;
  opts.frozen = a.frozen;
  const SearchResult search = run_search(state, opts);

  manifest.finished = utc_timestamp();
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_json_file(dir / "result.json", result_json(*p, manifest, initial, init, search, state));
  write_json_file(dir / "floorplan.json", floorplan_json(*p, state, &init));
  write_text(dir / "trace.csv", trace_csv(*p, search));
  write_text(dir / "directives.txt", directives_text(*p, state.config()));
  if (a.tcl_stub) write_text(dir / "directives.tcl", tcl_stub(*p, state.config()));

  for (const std::string& w : init.warnings) out << "warning: " << w << '\n';
  out << "latency " << search.final_latency << " (baseline " << search.initial_latency << ")\n"
      << "max utilization " << fixed(max_slot_utilization(state), 4) << '\n'
      << "max SLL utilization " << fixed(max_sll_utilization(state), 4) << '\n'
      << "iterations " << search.log.size() << (search.cap_reached ? " (cap reached)" : "") << '\n'
      << "wall time " << fixed(manifest.wall_seconds, 3) << " s\n";
  return kExitOk;
}

int cmd_check(const std::string& path, std::ostream& out) {
  const std::vector<std::string> violations = check_result(read_json_file(path));
  if (violations.empty()) {
    out << "PASS " << path << '\n';
    return kExitOk;
  }
  out << "FAIL " << path << '\n';
  for (const std::string& v : violations) out << "  " << v << '\n';
  return kExitInfeasible;
}

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  auto p = make_problem(read_json_file(a.design), read_json_file(a.qor), read_json_file(a.device),
                        {a.util_limit, a.sll_limit});
  OracleLimits limits;
  limits.node_budget = a.budget;
  limits.max_functions = a.max_functions;
  const OracleResult r = solve(p->graph, p->qor, p->device, limits);

  json verdict = {{"status", std::string(oracle_status_name(r.status))}, {"nodes", r.nodes}};
  if (r.witness) {
    verdict["latency"] = r.latency;
    verdict["routing_proof"] = r.witness->routing == RoutingProof::kGreedy ? "greedy" : "exact";
    verdict["witness"] = state_document(*p, r.witness->config, r.witness->slot_of);
  }
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_json_file(fs::path(a.out) / "oracle.json", verdict);
  }
  out << "status " << oracle_status_name(r.status) << '\n';
  if (r.witness) out << "latency " << r.latency << '\n';
  out << "nodes " << r.nodes << '\n';
  switch (r.status) {
    case OracleStatus::kOptimal: return kExitOk;
    case OracleStatus::kInfeasible: return kExitInfeasible;
    case OracleStatus::kBudgetExceeded: return kExitBudget;
  }
  return kExitOk;
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const json result = read_json_file(a.result);
  LoadedResult loaded = load_result(result);
  const Problem& p = *loaded.problem;
  VerifyOptions opts;
  opts.node_budget = a.budget;
  opts.exhaustive_limit = a.exhaustive_limit;
  opts.samples = a.samples;
  opts.seed = a.seed;
  const VerifyResult r = verify_optimal(p.graph, p.qor, p.device, loaded.latency, opts);

  json verdict = {{"verdict", std::string(verdict_name(r.verdict))},
                  {"latency", loaded.latency},
                  {"exhaustive", r.exhaustive},
                  {"better", r.better},
                  {"checked", r.checked},
                  {"coverage", r.coverage},
                  {"nodes", r.nodes}};
  if (r.counterexample) {
    verdict["counterexample_latency"] = r.counterexample_latency;
    verdict["counterexample"] = state_document(p, r.counterexample->config, r.counterexample->slot_of);
  }
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_json_file(fs::path(a.out) / "verdict.json", verdict);
    if (r.counterexample) write_json_file(fs::path(a.out) / "counterexample.json", verdict["counterexample"]);
  }
  out << verdict_name(r.verdict) << '\n';
  out << (r.exhaustive ? "exhaustive" : "sampled") << ": " << fixed(r.better, 0) << " faster configurations, "
      << r.checked << " floorplan searches, coverage " << fixed(r.coverage, 4) << '\n';
  if (r.counterexample) out << "counterexample latency " << r.counterexample_latency << '\n';
  switch (r.verdict) {
    case Verdict::kOptimal: return kExitOk;
    case Verdict::kCounterexample: return kExitCounterexample;
    case Verdict::kInconclusive: return kExitBudget;
  }
  return kExitOk;
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
  Instance inst;
  if (a.preset == "toy") {
    inst = toy_instance();
  } else {
    GenSpec spec = preset_spec(a.preset, a.seed);
    if (a.mode == "monotone") spec.mode = Monotonicity::kMonotone;
    if (a.mode == "non-monotone") spec.mode = Monotonicity::kNonMonotone;
    if (!a.device.empty()) spec.device = a.device;
    if (a.max_points) spec.max_points = *a.max_points;
    inst = gen_instance(spec);
  }
  write_instance(inst, a.out);
  out << "wrote design.json, qor.json, device.json to " << a.out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Directive and floorplan co-optimization for multi-die FPGAs", "fado"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Boot, co-optimize and emit result artifacts");
  optimize->add_option("--design", opt.design, "Design graph JSON")->required();
  optimize->add_option("--qor", opt.qor, "QoR library JSON")->required();
  optimize->add_option("--device", opt.device, "Device JSON")->required();
  optimize->add_option("--out", opt.out, "Output directory")->required();
  optimize->add_option("--initial", opt.initial, "Initial floorplan")->check(CLI::IsMember({"mincut", "balanced"}));
  optimize->add_option("--util-limit", opt.util_limit, "Override the slot utilization limit")
      ->check(CLI::Range(0.0, 1.0));
  optimize->add_option("--sll-limit", opt.sll_limit, "Override the SLL limit")->check(CLI::Range(0.0, 1.0));
  optimize->add_option("--lookahead", opt.lookahead, "Look-ahead/back step count")->check(CLI::NonNegativeNumber);
  optimize->add_option("--lookahead-levels", opt.reading, "Loop levels counted for the step count (min | max)")
      ->check(CLI::IsMember({"min", "max"}));
  optimize->add_option("--iter-cap", opt.iter_cap, "Iteration cap (default 10 x functions)")
      ->check(CLI::NonNegativeNumber);
  optimize->add_option("--seed", opt.seed, "Recorded in the manifest");
  optimize->add_flag("--frozen", opt.frozen, "Keep the initial floorplan (in-place fits only)");
  optimize->add_flag("--tcl-stub", opt.tcl_stub, "Also write directives.tcl for inspection");

  std::string check_path;
  auto* check = app.add_subcommand("check", "Replay legality and routing on a result.json");
  check->add_option("result", check_path, "result.json")->required();

  OracleArgs orc;
  auto* oracle = app.add_subcommand("oracle", "Exact minimum latency for small instances");
  oracle->add_option("--design", orc.design)->required();
  oracle->add_option("--qor", orc.qor)->required();
  oracle->add_option("--device", orc.device)->required();
  oracle->add_option("--out", orc.out, "Directory for oracle.json");
  oracle->add_option("--util-limit", orc.util_limit)->check(CLI::Range(0.0, 1.0));
  oracle->add_option("--sll-limit", orc.sll_limit)->check(CLI::Range(0.0, 1.0));
  oracle->add_option("--budget", orc.budget, "Node budget")->check(CLI::PositiveNumber);
  oracle->add_option("--max-functions", orc.max_functions, "Function guard")->check(CLI::PositiveNumber);

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify-optimal", "Search for a legal configuration faster than a result");
  verify->add_option("result", ver.result, "result.json")->required();
  verify->add_option("--out", ver.out, "Directory for verdict.json and counterexample.json");
  verify->add_option("--budget", ver.budget, "Node budget")->check(CLI::PositiveNumber);
  verify->add_option("--exhaustive-limit", ver.exhaustive_limit, "Largest space enumerated exhaustively");
  verify->add_option("--samples", ver.samples, "Samples drawn from larger spaces")->check(CLI::PositiveNumber);
  verify->add_option("--seed", ver.seed, "Sampling seed");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic instance");
  gen_cmd->add_option("--preset", gen.preset)->check(CLI::IsMember({"toy", "small", "medium", "mixed"}));
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out)->required();
  gen_cmd->add_option("--mode", gen.mode)->check(CLI::IsMember({"monotone", "non-monotone"}));
  gen_cmd->add_option("--device", gen.device)->check(CLI::IsMember({"u250_lower", "two_slot"}));
  gen_cmd->add_option("--max-points", gen.max_points)->check(CLI::PositiveNumber);

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*optimize) return cmd_optimize(opt, out);
    if (*check) return cmd_check(check_path, out);
    if (*oracle) return cmd_oracle(orc, out);
    if (*verify) return cmd_verify(ver, out);
    if (*gen_cmd) return cmd_gen(gen, out);
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "error: malformed input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace fado
