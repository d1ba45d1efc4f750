#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "kernel_interp.hpp"
#include "tileforge/dependence.hpp"
#include "tileforge/parser.hpp"

using namespace tileforge;
namespace tt = tileforge::testing;

namespace {

KernelIR gemm(int n = 0) {
  std::string ni = n ? std::to_string(n) : "200";
  std::string nj = n ? std::to_string(n) : "220";
  std::string nk = n ? std::to_string(n) : "240";
  return parse_kernel(
      "void gemm(float C[" + ni + "][" + nj + "], float A[" + ni + "][" + nk +
      "], float B[" + nk + "][" + nj + "], float alpha, float beta) {\n"
      "int i, j, k;\n"
      "for (i = 0; i < " + ni + "; i++) {\n"
      "  for (j = 0; j < " + nj + "; j++)\n"
      "    C[i][j] *= beta;\n"
      "  for (k = 0; k < " + nk + "; k++)\n"
      "    for (j = 0; j < " + nj + "; j++)\n"
      "      C[i][j] += alpha * A[i][k] * B[k][j];\n"
      "} }");
}

const Dependence* find_dep(const std::vector<Dependence>& deps,
                           const std::string& src, const std::string& dst,
                           DepKind kind) {
  for (const auto& d : deps)
    if (d.src_stmt == src && d.dst_stmt == dst && d.kind == kind) return &d;
  return nullptr;
}

std::vector<std::vector<std::string>> all_perms(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  std::vector<std::vector<std::string>> out;
  do {
    out.push_back(v);
  } while (std::next_permutation(v.begin(), v.end()));
  return out;
}

}  // namespace

TEST_CASE("gemm S1 carries a flow self-dependence of distance (0,1,0)") {
  KernelIR ir = gemm();
  auto deps = compute_dependences(ir);
  const Dependence* d = find_dep(deps, "S1", "S1", DepKind::Flow);
  REQUIRE(d != nullptr);
  CHECK(d->array == "C");
  REQUIRE(d->distance.size() == 3);  // over (i, k, j)
  CHECK(d->distance[0] == Distance::known(0));
  CHECK(d->distance[1] == Distance::known(1));
  CHECK(d->distance[2] == Distance::known(0));
  CHECK(d->carried_level == 1);
}

TEST_CASE("kernels without shared arrays have no dependences") {
  KernelIR ir = parse_kernel(
      "void f(float A[8], float B[8]) { int i;\n"
      "for (i = 0; i < 8; i++) A[i] = 1;\n"
      "for (i = 0; i < 8; i++) B[i] = 2; }");
  // re-parse gives two i loops; deps between A-only and B-only statements
  CHECK(compute_dependences(ir).empty());
}

TEST_CASE("unit shift yields flow distance 1") {
  KernelIR ir = parse_kernel(
      "void f(float B[16]) { int i;\n"
      "for (i = 0; i < 8; i++) B[i + 1] = B[i] + 1; }");
  auto deps = compute_dependences(ir);
  const Dependence* d = find_dep(deps, "S0", "S0", DepKind::Flow);
  REQUIRE(d != nullptr);
  REQUIRE(d->distance.size() == 1);
  CHECK(d->distance[0] == Distance::known(1));
}

TEST_CASE("reduction loop sets") {
  KernelIR ir = gemm();
  auto red = reduction_loops(ir, compute_dependences(ir));
  CHECK(red.loops["S1"] == std::vector<std::string>{"L2"});  // k
  CHECK(red.loops["S0"].empty());

  KernelIR dot = parse_kernel(
      "void dot(float s[1], float x[8], float y[8]) { int i;\n"
      "for (i = 0; i < 8; i++) s[0] += x[i] * y[i]; }");
  auto red2 = reduction_loops(dot, compute_dependences(dot));
  CHECK(red2.loops["S0"] == std::vector<std::string>{"L0"});

  // reduction loops are always a subset of the enclosing loops
  for (const auto& s : ir.statements)
    for (const auto& l : red.loops[s.id])
      CHECK(std::count(s.enclosing_loops.begin(), s.enclosing_loops.end(), l));
}

TEST_CASE("distribution legality") {
  KernelIR ir = gemm();
  auto deps = compute_dependences(ir);
  CHECK(distribution_legal(ir, deps, "S0", "S1"));

  KernelIR bad = parse_kernel(
      "void f(float A[8], float B[9]) { int i;\n"
      "for (i = 0; i < 8; i++) { A[i] = B[i]; B[i + 1] = A[i]; } }");
  auto bdeps = compute_dependences(bad);
  CHECK_FALSE(distribution_legal(bad, bdeps, "S0", "S1"));

  // brute-force confirmation: distributed execution differs from original
  auto orig = tt::run_original(bad, 7);
  auto dist = tt::run_distributed(bad, 7);
  CHECK_FALSE(orig == dist);

  KernelIR disjoint = parse_kernel(
      "void f(float A[8], float B[8], float X[8]) { int i;\n"
      "for (i = 0; i < 8; i++) { A[i] = X[i]; B[i] = X[i]; } }");
  auto ddeps = compute_dependences(disjoint);
  CHECK(distribution_legal(disjoint, ddeps, "S0", "S1"));
  CHECK(tt::run_original(disjoint, 3) == tt::run_distributed(disjoint, 3));
}

TEST_CASE("gemm band is fully permutable and all 3! orders run identically") {
  KernelIR ir = gemm(4);
  auto deps = compute_dependences(ir);
  CHECK(band_fully_permutable(ir, deps, "S1"));
  auto base = tt::run_distributed(ir, 11);
  for (const auto& perm : all_perms(ir.statements[1].enclosing_loops)) {
    CHECK(permutation_legal(ir, deps, "S1", perm));
    auto permuted = tt::run_distributed(ir, 11, {{"S1", perm}});
    CHECK(base == permuted);
  }
}

TEST_CASE("(1,-1) distance rejects the interchange") {
  KernelIR ir = parse_kernel(
      "void f(float B[10][10]) { int i, j;\n"
      "for (i = 0; i < 8; i++) for (j = 0; j < 8; j++)"
      " B[i + 1][j] = B[i][j + 1]; }");
  auto deps = compute_dependences(ir);
  const Dependence* d = find_dep(deps, "S0", "S0", DepKind::Flow);
  REQUIRE(d != nullptr);
  CHECK(d->distance[0] == Distance::known(1));
  CHECK(d->distance[1] == Distance::known(-1));
  CHECK(permutation_legal(ir, deps, "S0", {"L0", "L1"}));  // identity
  CHECK_FALSE(permutation_legal(ir, deps, "S0", {"L1", "L0"}));
  CHECK_FALSE(band_fully_permutable(ir, deps, "S0"));
  // oracle agrees: interchange changes the result
  CHECK_FALSE(tt::run_distributed(ir, 5) ==
              tt::run_distributed(ir, 5, {{"S0", {"L1", "L0"}}}));
}

TEST_CASE("singleton band accepts its identity permutation") {
  KernelIR ir = parse_kernel(
      "void f(float A[8]) { int i; for (i = 0; i < 8; i++) A[i] += 1; }");
  auto deps = compute_dependences(ir);
  CHECK(permutation_legal(ir, deps, "S0", {"L0"}));
}

TEST_CASE("legal-verdict soundness against the execution oracle") {
  // every permutation the analysis declares legal must execute identically
  std::vector<KernelIR> corpus;
  corpus.push_back(gemm(4));
  corpus.push_back(parse_kernel(
      "void f(float A[6][6], float B[6][6]) { int i, j;\n"
      "for (i = 0; i < 6; i++) for (j = 0; j < 6; j++)"
      " A[i][j] = B[j][i] + 1; }"));
  corpus.push_back(parse_kernel(
      "void f(float B[12][12]) { int i, j;\n"
      "for (i = 0; i < 8; i++) for (j = 0; j < 8; j++)"
      " B[i + 1][j] = B[i][j + 1]; }"));
  for (const auto& ir : corpus) {
    auto deps = compute_dependences(ir);
    for (const auto& s : ir.statements) {
      auto base = tt::run_distributed(ir, 23);
      for (const auto& perm : all_perms(s.enclosing_loops)) {
        if (!permutation_legal(ir, deps, s.id, perm)) continue;
        CHECK(base == tt::run_distributed(ir, 23, {{s.id, perm}}));
      }
    }
  }
}
