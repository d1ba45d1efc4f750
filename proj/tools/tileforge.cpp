// tileforge command-line driver: full pipeline (`optimize`) plus one
// subcommand per stage so the steps compose through documented JSON files.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tileforge/codegen.hpp"
#include "tileforge/json_io.hpp"
#include "tileforge/parser.hpp"
#include "tileforge/verifier.hpp"

using namespace tileforge;
using ordered_json = nlohmann::ordered_json;

namespace {

// ---- logging (TILEFORGE_LOG = debug | info | warn | error) -----------------

int log_level() {
  static int lvl = [] {
    const char* e = std::getenv("TILEFORGE_LOG");
    std::string s = e ? e : "warn";
    if (s == "debug") return 0;
    if (s == "info") return 1;
    if (s == "error") return 3;
    return 2;
  }();
  return lvl;
}

void log_at(int lvl, const char* tag, const std::string& msg) {
  if (lvl >= log_level()) std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}
void log_debug(const std::string& m) { log_at(0, "debug", m); }
void log_info(const std::string& m) { log_at(1, "info", m); }

// ---- file plumbing ---------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

void emit_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-")
    std::cout << text;
  else
    write_file(out_path, text);
}

PlatformConfig load_config(const std::string& path) {
  if (path.empty()) return PlatformConfig{};
  std::ifstream probe(path);
  if (!probe) throw std::runtime_error("config not found: '" + path + "'");
  return load_platform_config(path);
}

KernelIR load_kernel(const std::string& path, bool ir_json) {
  std::string text = read_file(path);
  return ir_json ? ir_from_json(text) : parse_kernel(text);
}

std::vector<Pin> collect_pins(const PlatformConfig& cfg,
                              const std::vector<std::string>& flags) {
  std::vector<Pin> pins;
  for (const auto& [path, value] : cfg.pins) pins.push_back({path, value});
  for (const auto& f : flags) {
    size_t eq = f.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--pin expects path=value, got '" + f + "'");
    pins.push_back({f.substr(0, eq), f.substr(eq + 1)});
  }
  return pins;
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// ---- shared pipeline pieces (used identically by optimize and the stages,
// so staged runs are byte-identical) ----------------------------------------

// Optimistic-reuse solve first; if the result would overrun the device
// without cross-body DSP reuse, re-solve pessimistically.
SolveOutcome solve_with_retry(const DesignSpace& space, PlatformConfig& cfg,
                              const std::vector<Pin>& pins, double budget,
                              int threads) {
  log_info("solving (optimistic DSP reuse, budget " + fixed3(budget) + "s)");
  SolveOutcome out = solve(space, cfg, pins, budget, threads);
  if (cfg.reuse_opt && out.status != SolveStatus::Infeasible) {
    DspUsage d = dsp_usage(space, cfg, out.best);
    if (d.pessimistic > cfg.dsp_available) {
      log_info("pessimistic DSP " + std::to_string(d.pessimistic) +
               " over budget; re-solving without cross-body reuse");
      cfg.reuse_opt = false;
      out = solve(space, cfg, pins, budget, threads);
    }
  }
  return out;
}

std::int64_t kernel_flops(const KernelIR& ir) {
  std::int64_t flops = 0;
  for (const auto& s : ir.statements) {
    std::int64_t per = 0;
    for (const auto& [op, n] : s.ops) per += n;
    flops += per * ir.trip_product(s);
  }
  return flops;
}

double modeled_gflops(const KernelIR& ir, const PlatformConfig& cfg,
                      std::int64_t cycles) {
  if (cycles <= 0) return 0.0;
  double seconds =
      static_cast<double>(cycles) / (cfg.clock_mhz * 1e6);
  return static_cast<double>(kernel_flops(ir)) / seconds / 1e9;
}

// Deterministic prediction report: latency breakdown, resource usage and
// constraint margins. Built only from (space, cfg, assignment, status) so the
// staged `emit` step reproduces the `optimize` output byte for byte.
std::string report_to_json(const DesignSpace& space, const PlatformConfig& cfg,
                           const Assignment& a, const std::string& status,
                           const EmittedDesign& design) {
  LatencyBreakdown lb = latency(space, cfg, a);
  DspUsage dsp = dsp_usage(space, cfg, a);
  std::int64_t mem = memory_bytes_used(space, a);

  ordered_json j;
  j["kernel"] = space.ir.name;
  j["status"] = status;
  j["objective_cycles"] = lb.objective;
  j["clock_mhz"] = cfg.clock_mhz;
  j["modeled_gflops"] = fixed3(modeled_gflops(space.ir, cfg, lb.objective));
  ordered_json stmts = ordered_json::object();
  for (const auto& [sid, p] : lb.stmts) {
    stmts[sid] = {{"lat2", p.lat2},     {"lat1", p.lat1},
                  {"lat0", p.lat0},     {"lat_mem", p.lat_mem},
                  {"lat_total", p.lat_total}, {"ii", p.ii}};
  }
  j["latency"] = stmts;
  j["dsp"] = {{"mode", cfg.reuse_opt ? "optimistic" : "pessimistic"},
              {"optimistic", dsp.optimistic},
              {"pessimistic", dsp.pessimistic},
              {"available", cfg.dsp_available},
              {"margin", cfg.dsp_available -
                             (cfg.reuse_opt ? dsp.optimistic : dsp.pessimistic)}};
  j["memory"] = {{"bytes_used", mem},
                 {"capacity", cfg.mem_bytes},
                 {"margin", cfg.mem_bytes - mem}};
  ordered_json part = ordered_json::object();
  std::int64_t worst = 1;
  for (const auto& arr : space.ir.arrays) {
    auto it = a.ap.find(arr.name);
    if (it == a.ap.end()) continue;
    part[arr.name] = it->second;
    std::int64_t prod = 1;
    for (auto f : it->second) prod *= f;
    worst = std::max(worst, prod);
  }
  j["partition"] = {{"factors", part},
                    {"max_product", worst},
                    {"max_part", cfg.max_part}};
  j["grouped_transfers"] = design.grouped_transfers;
  return j.dump(2) + "\n";
}

struct OutputSet {
  std::string opt_c, harness_c, solution, report;
};

OutputSet output_paths(const std::string& outdir, const std::string& kernel) {
  std::string d = outdir.empty() ? "." : outdir;
  return {d + "/" + kernel + "_opt.c", d + "/" + kernel + "_harness.c",
          d + "/solution.json", d + "/report.json"};
}

// emit stage: design + harness + report from a space and a solved assignment
void emit_outputs(const DesignSpace& space, const PlatformConfig& cfg,
                  const Assignment& a, const std::string& status,
                  const std::string& outdir) {
  EmittedDesign design = emit_design(space, cfg, a);
  OutputSet o = output_paths(outdir, space.ir.name);
  write_file(o.opt_c, design.source_text);
  write_file(o.harness_c, emit_reference_harness(space.ir, cfg));
  write_file(o.report, report_to_json(space, cfg, a, status, design));
  log_info("wrote " + o.opt_c + ", " + o.harness_c + ", " + o.report);
}

int wrap(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tileforge: affine loop-nest optimizer for HLS"};
  app.require_subcommand(1);

  // shared option storage
  std::string kernel_path, config_path, space_path, solution_path, out_path;
  std::string outdir = ".";
  bool ir_json = false;
  double budget = -1.0;
  int threads = -1;
  std::vector<std::string> pin_flags;

  auto add_kernel = [&](CLI::App* c) {
    c->add_option("kernel", kernel_path, "kernel source (.c)")->required();
    c->add_flag("--ir-json", ir_json, "input is kernel IR JSON, skip parsing");
  };
  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", config_path, "platform TOML/JSON config");
  };
  auto add_solver = [&](CLI::App* c) {
    c->add_option("--budget", budget, "solver budget in seconds");
    c->add_option("--threads", threads, "solver threads");
    c->add_option("--pin", pin_flags, "variable pin path=value");
  };
  auto add_out = [&](CLI::App* c) {
    c->add_option("--out", out_path, "output file ('-' = stdout)");
  };

  CLI::App* c_opt = app.add_subcommand("optimize", "full pipeline");
  add_kernel(c_opt);
  add_config(c_opt);
  add_solver(c_opt);
  c_opt->add_option("--outdir", outdir, "output directory");

  CLI::App* c_parse = app.add_subcommand("parse", "kernel -> IR JSON");
  add_kernel(c_parse);
  add_out(c_parse);

  CLI::App* c_deps = app.add_subcommand("deps", "kernel -> dependence JSON");
  add_kernel(c_deps);
  add_out(c_deps);

  CLI::App* c_space = app.add_subcommand("space", "kernel -> design-space JSON");
  add_kernel(c_space);
  add_out(c_space);

  CLI::App* c_solve = app.add_subcommand("solve", "design space -> solution");
  c_solve->add_option("--space", space_path, "design-space JSON")->required();
  add_config(c_solve);
  add_solver(c_solve);
  c_solve->add_option("--out", out_path, "solution file")
      ->default_val("solution.json");

  CLI::App* c_emit = app.add_subcommand("emit", "solution -> C design");
  c_emit->add_option("--space", space_path, "design-space JSON")->required();
  c_emit->add_option("--solution", solution_path, "solution JSON")->required();
  add_config(c_emit);
  c_emit->add_option("--outdir", outdir, "output directory");

  CLI::App* c_verify = app.add_subcommand("verify", "re-check a solution");
  c_verify->add_option("--kernel", kernel_path, "kernel source")->required();
  c_verify->add_flag("--ir-json", ir_json, "kernel input is IR JSON");
  add_config(c_verify);
  c_verify->add_option("--solution", solution_path, "solution JSON")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;  // usage error
  }

  if (app.got_subcommand(c_parse))
    return wrap([&] {
      emit_output(out_path, ir_to_json(load_kernel(kernel_path, ir_json)));
    });

  if (app.got_subcommand(c_deps))
    return wrap([&] {
      KernelIR ir = load_kernel(kernel_path, ir_json);
      auto deps = compute_dependences(ir);
      emit_output(out_path, deps_to_json(deps, reduction_loops(ir, deps)));
    });

  if (app.got_subcommand(c_space))
    return wrap([&] {
      emit_output(out_path, space_to_json(build_design_space(
                                load_kernel(kernel_path, ir_json))));
    });

  if (app.got_subcommand(c_solve))
    return wrap([&] {
      DesignSpace space = space_from_json(read_file(space_path));
      PlatformConfig cfg = load_config(config_path);
      if (budget > 0) cfg.budget_seconds = budget;
      if (threads >= 1) cfg.threads = threads;
      std::vector<Pin> pins = collect_pins(cfg, pin_flags);
      SolveOutcome out = solve_with_retry(space, cfg, pins,
                                          cfg.budget_seconds, cfg.threads);
      if (out.status == SolveStatus::Infeasible)
        throw InfeasibleError("no assignment satisfies the constraints");
      emit_output(out_path, solution_to_json(space, out));
    });

  if (app.got_subcommand(c_emit))
    return wrap([&] {
      DesignSpace space = space_from_json(read_file(space_path));
      PlatformConfig cfg = load_config(config_path);
      SolutionFile f = solution_from_json(read_file(solution_path));
      if (f.kernel != space.ir.name)
        throw std::runtime_error("solution is for kernel '" + f.kernel + "'");
      resolve_perm(space, f);
      // honor the recorded DSP mode so the report matches the solve
      DspUsage d = dsp_usage(space, cfg, f.assignment);
      if (cfg.reuse_opt && d.pessimistic > cfg.dsp_available)
        cfg.reuse_opt = false;
      emit_outputs(space, cfg, f.assignment, f.status, outdir);
    });

  if (app.got_subcommand(c_verify))
    return wrap([&] {
      KernelIR ir = load_kernel(kernel_path, ir_json);
      PlatformConfig cfg = load_config(config_path);
      VerifyReport r = verify_solution(ir, cfg, read_file(solution_path));
      ordered_json j;
      j["pass"] = r.pass;
      j["recomputed_objective"] = r.recomputed_objective;
      j["claimed_objective"] = r.claimed_objective;
      ordered_json v = ordered_json::array();
      for (const auto& x : r.violations)
        v.push_back({{"tag", x.tag},
                     {"stmt", x.stmt},
                     {"loop", x.loop},
                     {"array", x.array},
                     {"message", x.message},
                     {"observed", x.observed},
                     {"bound", x.bound}});
      j["violations"] = v;
      std::cout << j.dump(2) << "\n";
      if (!r.pass) throw std::runtime_error("verification failed");
    });

  // optimize: parse -> deps -> space -> solve -> emit -> verify -> summary
  return wrap([&] {
    log_info("parsing " + kernel_path);
    KernelIR ir = load_kernel(kernel_path, ir_json);
    PlatformConfig cfg = load_config(config_path);
    if (budget > 0) cfg.budget_seconds = budget;
    if (threads >= 1) cfg.threads = threads;
    DesignSpace space = build_design_space(ir);
    log_debug("design space: " + std::to_string(space.nests.size()) +
              " nests, " + std::to_string(space.ir.loops.size()) + " loops");
    std::vector<Pin> pins = collect_pins(cfg, pin_flags);
    SolveOutcome out = solve_with_retry(space, cfg, pins, cfg.budget_seconds,
                                        cfg.threads);
    if (out.status == SolveStatus::Infeasible)
      throw InfeasibleError("no assignment satisfies the constraints");

    OutputSet o = output_paths(outdir, space.ir.name);
    write_file(o.solution, solution_to_json(space, out));
    emit_outputs(space, cfg, out.best, solve_status_name(out.status), outdir);

    VerifyReport vr = verify_solution(ir, cfg, read_file(o.solution));

    DspUsage dsp = dsp_usage(space, cfg, out.best);
    std::int64_t dsp_used = cfg.reuse_opt ? dsp.optimistic : dsp.pessimistic;
    std::int64_t mem = memory_bytes_used(space, out.best);
    double ms = static_cast<double>(out.breakdown.objective) /
                (cfg.clock_mhz * 1e6) * 1e3;
    std::printf("tileforge: %s\n", space.ir.name.c_str());
    std::printf("  status          %s\n", solve_status_name(out.status));
    std::printf("  objective       %lld cycles  (%s ms @ %.0f MHz)\n",
                static_cast<long long>(out.breakdown.objective),
                fixed3(ms).c_str(), cfg.clock_mhz);
    std::printf("  modeled perf    %s GF/s (modeled, not measured)\n",
                fixed3(modeled_gflops(ir, cfg, out.breakdown.objective)).c_str());
    std::printf("  DSP             %lld / %lld (%s reuse)\n",
                static_cast<long long>(dsp_used),
                static_cast<long long>(cfg.dsp_available),
                cfg.reuse_opt ? "optimistic" : "pessimistic");
    std::printf("  on-chip memory  %lld / %lld bytes\n",
                static_cast<long long>(mem),
                static_cast<long long>(cfg.mem_bytes));
    std::printf("  solver          %lld nodes, %ss\n",
                static_cast<long long>(out.nodes_explored),
                fixed3(out.wall_time).c_str());
    std::printf("  verifier        %s\n", vr.pass ? "pass" : "FAIL");
    std::printf("  outputs         %s %s %s %s\n", o.opt_c.c_str(),
                o.harness_c.c_str(), o.solution.c_str(), o.report.c_str());
    if (!vr.pass) throw std::runtime_error("verifier rejected the solution");
  });
}
