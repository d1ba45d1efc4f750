#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tileforge/parser.hpp"

using namespace tileforge;

namespace {

const char* kGemm = R"(
void gemm(float C[200][220], float A[200][240], float B[240][220],
          float alpha, float beta) {
  int i, j, k;
  for (i = 0; i < 200; i++) { // L0
    for (j = 0; j < 220; j++) // L1
      C[i][j] *= beta; // S0
    for (k = 0; k < 240; k++) // L2
      for (j = 0; j < 220; j++) // L3
        C[i][j] += alpha * A[i][k] * B[k][j]; // S1
  }
}
)";

}  // namespace

TEST_CASE("gemm parses to the expected structure") {
  KernelIR ir = parse_kernel(kGemm);
  CHECK(ir.name == "gemm");
  REQUIRE(ir.statements.size() == 2);
  REQUIRE(ir.loops.size() == 4);
  CHECK(ir.loops[0].trip_count == 200);
  CHECK(ir.loops[1].trip_count == 220);
  CHECK(ir.loops[2].trip_count == 240);
  CHECK(ir.loops[3].trip_count == 220);
  CHECK(ir.loops[1].parent == std::optional<std::string>("L0"));
  CHECK(ir.loops[3].parent == std::optional<std::string>("L2"));
  CHECK(ir.statements[0].enclosing_loops ==
        std::vector<std::string>{"L0", "L1"});
  CHECK(ir.statements[1].enclosing_loops ==
        std::vector<std::string>{"L0", "L2", "L3"});
  CHECK(ir.scalars == std::vector<std::string>{"alpha", "beta"});
  CHECK(ir.validate().empty());
}

TEST_CASE("op census counts arithmetic per dynamic instance") {
  KernelIR ir = parse_kernel(kGemm);
  auto s1 = op_census(ir.statements[1]);
  CHECK(s1[OpKind::Mul] == 2);
  CHECK(s1[OpKind::Add] == 1);
  auto s0 = op_census(ir.statements[0]);
  CHECK(s0[OpKind::Mul] == 1);
  CHECK(s0.count(OpKind::Add) == 0);

  KernelIR copy = parse_kernel(
      "void f(float A[4][4], float B[4][4]) { int i, j;\n"
      "for (i = 0; i < 4; i++) for (j = 0; j < 4; j++) A[i][j] = B[i][j]; }");
  CHECK(op_census(copy.statements[0]).empty());
}

TEST_CASE("accumulation detection") {
  KernelIR ir = parse_kernel(kGemm);
  auto a1 = detect_accumulation(ir.statements[1]);
  CHECK(a1.is_accumulation);
  CHECK(a1.op == OpKind::Add);
  CHECK(a1.array == "C");
  auto a0 = detect_accumulation(ir.statements[0]);
  CHECK(a0.is_accumulation);
  CHECK(a0.op == OpKind::Mul);

  KernelIR plain = parse_kernel(
      "void f(float C[4][4], float A[4][4], float B[4][4]) { int i, j, k;\n"
      "for (i = 0; i < 4; i++) for (j = 0; j < 4; j++) for (k = 0; k < 4; k++)"
      " C[i][j] = A[i][k] + B[k][j]; }");
  CHECK_FALSE(detect_accumulation(plain.statements[0]).is_accumulation);

  // spelled-out accumulation on plain `=`
  KernelIR spelled = parse_kernel(
      "void f(float C[4], float A[4]) { int i;\n"
      "for (i = 0; i < 4; i++) C[i] = C[i] + A[i]; }");
  CHECK(detect_accumulation(spelled.statements[0]).is_accumulation);
}

TEST_CASE("empty loop body yields a loop and no statements") {
  KernelIR ir = parse_kernel("void f() { int i; for (i = 0; i < 4; i++) {} }");
  CHECK(ir.loops.size() == 1);
  CHECK(ir.statements.empty());
}

TEST_CASE("rejections name the offending construct") {
  CHECK_THROWS_AS(
      parse_kernel("void f(float A[4], int n) { int i;\n"
                   "for (i = 0; i < n; i++) A[i] = 1; }"),
      UnsupportedConstruct);
  CHECK_THROWS_AS(
      parse_kernel("void f(float A[4]) { int i;\n"
                   "for (i = 1; i < 4; i++) A[i] = 1; }"),
      UnsupportedConstruct);
  CHECK_THROWS_AS(
      parse_kernel("void f(float A[4]) { int i;\n"
                   "for (i = 0; i < 4; i += 2) A[i] = 1; }"),
      UnsupportedConstruct);
  CHECK_THROWS_AS(
      parse_kernel("void f(float A[4]) { int i;\n"
                   "for (i = 0; i < 4; i++) if (i) A[i] = 1; }"),
      UnsupportedConstruct);
  CHECK_THROWS_AS(
      parse_kernel("void f(float A[4]) { int i;\n"
                   "for (i = 0; i < 4; i++) A[i] = g(i); }"),
      UnsupportedConstruct);
  CHECK_THROWS_AS(parse_kernel("void f(float A[4]) { int i; for (i = 0; }"),
                  SyntaxError);
}

TEST_CASE("syntax errors carry position") {
  try {
    parse_kernel("void f(float A[4]) {\n  A[0] ! 1;\n}");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("non-simple subscripts are parsed and flagged") {
  KernelIR ir = parse_kernel(
      "void f(float A[16], float B[16]) { int i;\n"
      "for (i = 0; i < 8; i++) A[2*i] = B[i]; }");
  CHECK(ir.statements[0].accesses[0].non_simple);
  CHECK_FALSE(ir.statements[0].accesses[1].non_simple);

  KernelIR shifted = parse_kernel(
      "void f(float A[16]) { int i;\n"
      "for (i = 0; i < 8; i++) A[i + 1] = A[i]; }");
  const auto& w = shifted.statements[0].accesses[0];
  CHECK_FALSE(w.non_simple);
  CHECK(w.subscripts[0].constant == 1);
}

TEST_CASE("round trip: unparse then re-parse is structurally identical") {
  KernelIR a = parse_kernel(kGemm);
  KernelIR b = parse_kernel(unparse(a));
  REQUIRE(a.loops.size() == b.loops.size());
  REQUIRE(a.statements.size() == b.statements.size());
  for (size_t i = 0; i < a.loops.size(); ++i) {
    CHECK(a.loops[i].id == b.loops[i].id);
    CHECK(a.loops[i].trip_count == b.loops[i].trip_count);
    CHECK(a.loops[i].parent == b.loops[i].parent);
  }
  for (size_t i = 0; i < a.statements.size(); ++i) {
    CHECK(a.statements[i].enclosing_loops == b.statements[i].enclosing_loops);
    CHECK(a.statements[i].ops == b.statements[i].ops);
    CHECK(a.statements[i].accesses.size() == b.statements[i].accesses.size());
  }
  // determinism: same text, same ids
  KernelIR c = parse_kernel(kGemm);
  CHECK(unparse(a) == unparse(c));
}
