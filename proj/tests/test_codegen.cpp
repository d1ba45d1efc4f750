#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "tileforge/codegen.hpp"
#include "tileforge/parser.hpp"
#include "tileforge/solver.hpp"

using namespace tileforge;
namespace fs = std::filesystem;

namespace {

const char* kCopy8 =
    "void copy(float A[8], float B[8]) { int i;\n"
    "for (i = 0; i < 8; i++) A[i] = B[i] + 1; }";

const char* kDot8 =
    "void dot(float s[1], float x[8], float y[8]) { int i;\n"
    "for (i = 0; i < 8; i++) s[0] += x[i] * y[i]; }";

const char* kChain8 =
    "void chain(float A[8], float B[8], float C[8]) { int i;\n"
    "for (i = 0; i < 8; i++) A[i] = B[i] + 1;\n"
    "for (i = 0; i < 8; i++) C[i] = A[i] * 2; }";

const char* kMatvec4 =
    "void mv(float y[4], float A[4][4], float x[4]) { int i, j;\n"
    "for (i = 0; i < 4; i++) for (j = 0; j < 4; j++)"
    " y[i] += A[i][j] * x[j]; }";

// backward loop-carried dependence keeps the two statements fused
const char* kFused8 =
    "void fuse(float A[8], float B[9]) { int i;\n"
    "for (i = 0; i < 8; i++) { A[i] = B[i] + 1; B[i + 1] = A[i] * 2; } }";

int count(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (size_t p = hay.find(needle); p != std::string::npos;
       p = hay.find(needle, p + needle.size()))
    n++;
  return n;
}

// Compiles design + harness with the system C compiler and runs the harness.
int compile_and_run(const std::string& tag, const EmittedDesign& d,
                    const std::string& harness) {
  fs::path dir = fs::temp_directory_path() / ("tileforge_cg_" + tag);
  fs::create_directories(dir);
  std::ofstream(dir / "design.c") << d.source_text;
  std::ofstream(dir / "harness.c") << harness;
  std::string cmd = "cc -std=c99 -O2 -o " + (dir / "h").string() + " " +
                    (dir / "design.c").string() + " " +
                    (dir / "harness.c").string() + " 2> " +
                    (dir / "cc.log").string();
  if (std::system(cmd.c_str()) != 0) return -1;
  return std::system(((dir / "h").string() + " > " +
                      (dir / "run.log").string())
                         .c_str());
}

struct Result {
  EmittedDesign design;
  Assignment best;
  int run = -2;
};

Result emit_and_run(const std::string& tag, const char* src,
                    PlatformConfig cfg, const std::vector<Pin>& pins = {}) {
  KernelIR ir = parse_kernel(src);
  DesignSpace sp = build_design_space(ir);
  SolveOutcome s = solve(sp, cfg, pins, 600.0);
  REQUIRE(s.status == SolveStatus::Optimal);
  Result r;
  r.design = emit_design(sp, cfg, s.best);
  r.best = s.best;
  r.run = compile_and_run(tag, r.design, emit_reference_harness(ir, cfg));
  return r;
}

}  // namespace

TEST_CASE("emitted designs compile and match the reference on 10 seeds") {
  PlatformConfig cfg;
  int k = 0;
  for (const char* src : {kCopy8, kDot8, kChain8, kMatvec4, kFused8}) {
    Result r = emit_and_run("base" + std::to_string(k++), src, cfg);
    CHECK(r.run == 0);
  }
}

TEST_CASE("pragma placement matches the selections") {
  PlatformConfig cfg;
  Result r = emit_and_run("prag", kMatvec4, cfg);
  const std::string& t = r.design.source_text;

  int pip_sel = 0;
  for (const auto& [lid, la] : r.best.loops) pip_sel += la.pip ? 1 : 0;
  int fn_count = static_cast<int>(r.design.transfer_fns.size());
  // each transfer function carries exactly one pipeline and one unroll pragma
  CHECK(count(t, "#pragma HLS pipeline") == pip_sel + fn_count);

  int l2 = 0;
  for (const auto& [lid, la] : r.best.loops) l2 += la.tc.t2 > 1 ? 1 : 0;
  CHECK(count(t, "#pragma HLS unroll") == l2 + fn_count);

  // partition pragmas per derived factor > 1
  int parts = 0;
  for (const auto& [arr, dims] : r.best.ap)
    for (auto f : dims) parts += f > 1 ? 1 : 0;
  CHECK(count(t, "array_partition") == parts);
}

TEST_CASE("identity-shaped design has no kernel pragmas and still passes") {
  PlatformConfig cfg;
  std::vector<Pin> pins = {{"tc.S0.i", "8,1,1"}, {"pip.S0", "none"}};
  Result r = emit_and_run("ident", kCopy8, cfg, pins);
  CHECK(r.run == 0);
  // the only pragmas left belong to the transfer functions
  int fn_count = static_cast<int>(r.design.transfer_fns.size());
  CHECK(count(r.design.source_text, "#pragma HLS pipeline") == fn_count);
  CHECK(count(r.design.source_text, "#pragma HLS unroll") == fn_count);
  CHECK(r.design.source_text.find("for (i0 = 0; i0 < 8") != std::string::npos);
}

TEST_CASE("trip-1 level-0 loops are elided") {
  PlatformConfig cfg;
  std::vector<Pin> pins = {{"tc.S0.i", "1,1,8"}, {"pip.S0", "i"}};
  Result r = emit_and_run("trip1", kCopy8, cfg, pins);
  CHECK(r.run == 0);
  CHECK(r.design.source_text.find("i0") == std::string::npos);
  CHECK(r.design.source_text.find("i = i2;") != std::string::npos);
}

TEST_CASE("mid-nest cache points produce offset transfer calls") {
  PlatformConfig cfg;
  std::vector<Pin> pins = {{"cache.S0.A", "1"},
                           {"tc.S0.i", "2,1,2"},
                           {"tc.S0.j", "4,1,1"},
                           {"pip.S0", "i"}};
  Result r = emit_and_run("midcache", kMatvec4, cfg, pins);
  CHECK(r.run == 0);
  CHECK(r.design.source_text.find("load_A(A, A_off, i0, j0);") !=
        std::string::npos);
}

TEST_CASE("resident arrays share one buffer and skip the second load") {
  PlatformConfig cfg;
  std::vector<Pin> pins = {{"cache.S0.A", "before"}, {"cache.S1.A", "before"}};
  Result r = emit_and_run("resident", kChain8, cfg, pins);
  CHECK(r.run == 0);
  const std::string& t = r.design.source_text;
  CHECK(t.find("already on chip") != std::string::npos);
  CHECK(count(t, "static float A[8];") == 1);
  CHECK(count(t, "load_A(") == 2);  // definition + one call site
  CHECK(t.find("store_A(") != std::string::npos);
}

TEST_CASE("coarse unroll replicates the fused body") {
  PlatformConfig cfg;
  std::vector<Pin> pins = {{"tc.S0.i", "8,1,1"},
                           {"uf.S0.i", "2"},
                           {"pip.S0", "none"}};
  Result r = emit_and_run("coarse", kFused8, cfg, pins);
  CHECK(r.run == 0);
  const std::string& t = r.design.source_text;
  CHECK(t.find("for (i0 = 0; i0 < 4;") != std::string::npos);
  CHECK(count(t, "/* coarse replica") == 2);
  CHECK(t.find("(i0 * 2 + 1)") != std::string::npos);
}

TEST_CASE("tree reduction rewrites into a balanced accumulator") {
  PlatformConfig cfg;
  cfg.tree_reduction = true;
  std::vector<Pin> pins = {{"tc.S0.i", "1,2,4"}, {"pip.S0", "i"}};
  Result r = emit_and_run("tree", kDot8, cfg, pins);
  CHECK(r.run == 0);
  const std::string& t = r.design.source_text;
  CHECK(t.find("float red_S0[4];") != std::string::npos);
  CHECK(t.find("float acc_S0 = ((red_S0[0] + red_S0[1]) + (red_S0[2] + "
               "red_S0[3]));") != std::string::npos);
  CHECK(t.find("+= acc_S0;") != std::string::npos);
}

TEST_CASE("infeasible assignments are refused at emission") {
  PlatformConfig cfg;
  KernelIR ir = parse_kernel(kCopy8);
  DesignSpace sp = build_design_space(ir);
  SolveOutcome s = solve(sp, cfg, {}, 600.0);
  Assignment broken = s.best;
  broken.loops.at("L0").tc = {3, 1, 1};
  CHECK_THROWS_AS(emit_design(sp, cfg, broken), InternalInvariantError);
}

TEST_CASE("index recovery expressions are recorded per statement") {
  PlatformConfig cfg;
  std::vector<Pin> pins = {{"tc.S0.i", "2,1,2"},
                           {"tc.S0.j", "2,2,1"},
                           {"pip.S0", "j"}};
  Result r = emit_and_run("recov", kMatvec4, cfg, pins);
  CHECK(r.run == 0);
  REQUIRE(r.design.index_recovery.count("S0"));
  bool found = false;
  for (const auto& e : r.design.index_recovery.at("S0"))
    if (e == "i = i0 * 2 + i2;") found = true;
  CHECK(found);
}
