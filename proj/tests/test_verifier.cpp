#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>

#include "tileforge/codegen.hpp"
#include "tileforge/json_io.hpp"
#include "tileforge/parser.hpp"
#include "tileforge/verifier.hpp"

using namespace tileforge;

namespace {

const char* kGemm8 =
    "void gemm8(float C[8][8], float A[8][8], float B[8][8]) {\n"
    "int i, j, k;\n"
    "for (i = 0; i < 8; i++)\n"
    "  for (j = 0; j < 8; j++) {\n"
    "    C[i][j] = 0;\n"
    "    for (k = 0; k < 8; k++)\n"
    "      C[i][j] += A[i][k] * B[k][j];\n"
    "  } }";

const char* kDot =
    "void dot(float y[1], float a[16], float b[16]) {\n"
    "int i;\n"
    "for (i = 0; i < 16; i++)\n"
    "  y[0] += a[i] * b[i]; }";

Assignment base(const DesignSpace& sp) {
  Assignment a;
  for (const auto& l : sp.ir.loops)
    a.loops[l.id] = {{l.trip_count, 1, 1}, false, 1};
  for (const auto& n : sp.nests) {
    std::vector<int> id(n.band.size());
    std::iota(id.begin(), id.end(), 0);
    a.perm.push_back(id);
    for (const auto& [key, dom] : n.cache) a.cache[key] = kBeforeNest;
  }
  return a;
}

bool has_tag(const std::vector<Violation>& v, const std::string& tag) {
  for (const auto& x : v)
    if (x.tag == tag) return true;
  return false;
}

// Uniform sample from the decision domains. Not filtered for feasibility:
// the point of the agreement test is that both implementations reject the
// same points.
Assignment random_point(const DesignSpace& sp, std::mt19937& rng) {
  Assignment a;
  auto pick = [&](std::int64_t n) {
    return std::uniform_int_distribution<std::int64_t>(0, n - 1)(rng);
  };
  for (const auto& l : sp.ir.loops) {
    const auto& dom = sp.triples.at(l.id);
    LoopAssign la;
    la.tc = dom[static_cast<size_t>(pick(static_cast<std::int64_t>(dom.size())))];
    std::vector<std::int64_t> divs;
    for (std::int64_t d = 1; d <= la.tc.t0; ++d)
      if (la.tc.t0 % d == 0) divs.push_back(d);
    la.uf = divs[static_cast<size_t>(pick(static_cast<std::int64_t>(divs.size())))];
    a.loops[l.id] = la;
  }
  for (const auto& n : sp.nests) {
    const auto& p =
        n.perms[static_cast<size_t>(pick(static_cast<std::int64_t>(n.perms.size())))];
    a.perm.push_back(p);
    // at most one pipelined loop per nest, possibly none
    std::int64_t slot = pick(static_cast<std::int64_t>(n.band.size()) + 1);
    if (slot < static_cast<std::int64_t>(n.band.size()))
      a.loops[n.band[static_cast<size_t>(slot)]].pip = true;
    for (const auto& [key, dom] : n.cache)
      a.cache[key] = static_cast<int>(pick(dom.num_slots + 1)) - 1;
  }
  a.ap = derive_partitioning(sp, a);
  return a;
}

}  // namespace

TEST_CASE("solver output verifies clean") {
  KernelIR ir = parse_kernel(kGemm8);
  DesignSpace sp = build_design_space(ir);
  PlatformConfig cfg;
  SolveOutcome out = solve(sp, cfg, {}, 20.0, 1);
  REQUIRE(out.status == SolveStatus::Optimal);
  std::string json = solution_to_json(sp, out);
  VerifyReport r = verify_solution(ir, cfg, json);
  CHECK(r.pass);
  CHECK(r.violations.empty());
  CHECK(r.recomputed_objective == out.breakdown.objective);
  CHECK(r.claimed_objective == out.breakdown.objective);
}

TEST_CASE("corrupted solutions are rejected") {
  KernelIR ir = parse_kernel(kGemm8);
  DesignSpace sp = build_design_space(ir);
  PlatformConfig cfg;
  SolveOutcome out = solve(sp, cfg, {}, 20.0, 1);
  REQUIRE(out.status == SolveStatus::Optimal);

  SUBCASE("factor triple broken") {
    SolveOutcome bad = out;
    bad.best.loops.begin()->second.tc = {3, 7, 10};  // 210, no loop has that
    VerifyReport r = verify_solution(ir, cfg, solution_to_json(sp, bad));
    CHECK_FALSE(r.pass);
    CHECK(has_tag(r.violations, "E1"));
  }
  SUBCASE("objective off by one") {
    SolveOutcome bad = out;
    bad.breakdown.objective += 1;
    VerifyReport r = verify_solution(ir, cfg, solution_to_json(sp, bad));
    CHECK_FALSE(r.pass);
    CHECK(has_tag(r.violations, "objective"));
    CHECK(r.recomputed_objective == out.breakdown.objective);
  }
  SUBCASE("wrong kernel name") {
    KernelIR other = parse_kernel(kDot);
    VerifyReport r = verify_solution(other, cfg, solution_to_json(sp, out));
    CHECK_FALSE(r.pass);
    CHECK(has_tag(r.violations, "structural"));
  }
}

TEST_CASE("malformed solution files raise SchemaError") {
  KernelIR ir = parse_kernel(kDot);
  PlatformConfig cfg;
  CHECK_THROWS_AS(verify_solution(ir, cfg, "{ not json"), SchemaError);
  CHECK_THROWS_AS(verify_solution(ir, cfg, "{\"kernel\": \"dot\"}"),
                  SchemaError);
}

TEST_CASE("feasibility agreement with the cost model on random points") {
  PlatformConfig cfg;
  std::mt19937 rng(7);
  int feasible = 0;
  for (const char* src : {kGemm8, kDot}) {
    KernelIR ir = parse_kernel(src);
    DesignSpace sp = build_design_space(ir);
    for (int n = 0; n < 400; ++n) {
      Assignment a = random_point(sp, rng);
      bool model_ok = check_all(sp, cfg, a).empty();
      VerifyReport r = verify_assignment(sp, cfg, a);
      CHECK(model_ok == r.pass);
      if (model_ok && r.pass) {
        feasible++;
        CHECK(r.recomputed_objective == latency(sp, cfg, a).objective);
      }
    }
  }
  CHECK(feasible > 10);  // the sampler must exercise the feasible region too
}

TEST_CASE("audit accepts emitted designs and flags tampering") {
  PlatformConfig cfg;
  for (const char* src : {kGemm8, kDot}) {
    KernelIR ir = parse_kernel(src);
    DesignSpace sp = build_design_space(ir);
    SolveOutcome out = solve(sp, cfg, {}, 20.0, 1);
    REQUIRE(out.status == SolveStatus::Optimal);
    EmittedDesign d = emit_design(sp, cfg, out.best);
    auto findings = audit_structure(ir, d.source_text);
    for (const auto& f : findings) CAPTURE(f.message);
    CHECK(findings.empty());
  }

  KernelIR ir = parse_kernel(kDot);
  DesignSpace sp = build_design_space(ir);
  Assignment a = base(sp);
  a.ap = derive_partitioning(sp, a);
  EmittedDesign d = emit_design(sp, cfg, a);

  SUBCASE("duplicated statement body") {
    std::string line = "y[0] += a[i] * b[i];";
    size_t p = d.source_text.find(line);
    REQUIRE(p != std::string::npos);
    std::string tampered = d.source_text;
    tampered.insert(p, line + "\n");
    auto findings = audit_structure(ir, tampered);
    bool coverage = false;
    for (const auto& f : findings)
      if (f.tag == "coverage") coverage = true;
    CHECK(coverage);
  }
  SUBCASE("pipeline pragma detached from its loop") {
    std::string tampered = d.source_text;
    size_t p = tampered.find("#pragma HLS pipeline");
    REQUIRE(p != std::string::npos);
    tampered.insert(p, "x0 = 0;\n");
    auto findings = audit_structure(ir, tampered);
    bool placement = false;
    for (const auto& f : findings)
      if (f.tag == "pragma-placement") placement = true;
    CHECK(placement);
  }
}
