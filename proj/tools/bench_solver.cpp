// Benchmark: the OpenMP-parallel branch-and-bound against its serial run.
// The parallel search must return the identical outcome; this target measures
// the speedup and asserts the equivalence on a small kernel corpus.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef TILEFORGE_HAVE_OPENMP
#include <omp.h>
#endif

#include "tileforge/parser.hpp"
#include "tileforge/solver.hpp"

using namespace tileforge;

namespace {

struct Bench {
  std::string name;
  const char* source;
};

const std::vector<Bench> kCorpus = {
    {"gemm",
     "void gemm(float C[64][64], float A[64][64], float B[64][64]) {\n"
     "int i, j, k;\n"
     "for (i = 0; i < 64; i++)\n"
     "  for (j = 0; j < 64; j++) {\n"
     "    C[i][j] = 0;\n"
     "    for (k = 0; k < 64; k++)\n"
     "      C[i][j] += A[i][k] * B[k][j];\n"
     "  } }"},
    {"bicg",
     "void bicg(float A[96][96], float s[96], float q[96], float p[96],"
     " float r[96]) {\n"
     "int i, j;\n"
     "for (i = 0; i < 96; i++) {\n"
     "  q[i] = 0;\n"
     "  for (j = 0; j < 96; j++) {\n"
     "    s[j] += r[i] * A[i][j];\n"
     "    q[i] += A[i][j] * p[j];\n"
     "  } } }"},
    {"doitgen",
     "void doitgen(float A[16][16][24], float C4[24][24],"
     " float sum[16][16][24]) {\n"
     "int r, q, p, s;\n"
     "for (r = 0; r < 16; r++)\n"
     "  for (q = 0; q < 16; q++) {\n"
     "    for (p = 0; p < 24; p++) {\n"
     "      sum[r][q][p] = 0;\n"
     "      for (s = 0; s < 24; s++)\n"
     "        sum[r][q][p] += A[r][q][s] * C4[s][p];\n"
     "    }\n"
     "    for (p = 0; p < 24; p++)\n"
     "      A[r][q][p] = sum[r][q][p];\n"
     "  } }"},
};

double now_seconds() {
  using clk = std::chrono::steady_clock;
  return std::chrono::duration<double>(clk::now().time_since_epoch()).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tileforge solver benchmark: serial vs OpenMP-parallel"};
  double budget = 60.0;
  int threads = 0;
  app.add_option("--budget", budget, "per-solve budget in seconds");
  app.add_option("--threads", threads, "parallel thread count (0 = all)");
  CLI11_PARSE(app, argc, argv);

#ifdef TILEFORGE_HAVE_OPENMP
  if (threads < 1) threads = omp_get_max_threads();
#else
  if (threads < 1) threads = 1;
  std::printf("(built without OpenMP: the 'parallel' column runs serially)\n");
#endif

  PlatformConfig cfg;
  std::printf("%-10s %12s %12s %9s %10s  %s\n", "kernel", "serial[s]",
              "parallel[s]", "speedup", "nodes", "objective");
  bool all_equal = true;
  for (const auto& b : kCorpus) {
    DesignSpace space = build_design_space(parse_kernel(b.source));

    double t0 = now_seconds();
    SolveOutcome serial = solve(space, cfg, {}, budget, 1);
    double ts = now_seconds() - t0;

    t0 = now_seconds();
    SolveOutcome par = solve(space, cfg, {}, budget, threads);
    double tp = now_seconds() - t0;

    bool equal = serial.status == par.status &&
                 serial.breakdown.objective == par.breakdown.objective;
    all_equal = all_equal && equal;
    std::printf("%-10s %12.3f %12.3f %8.2fx %10lld  %lld%s\n", b.name.c_str(),
                ts, tp, tp > 0 ? ts / tp : 0.0,
                static_cast<long long>(par.nodes_explored),
                static_cast<long long>(par.breakdown.objective),
                equal ? "" : "  MISMATCH");
  }
  if (!all_equal) {
    std::printf("FAIL: parallel solve diverged from the serial reference\n");
    return 1;
  }
  std::printf("parallel results identical to the serial reference\n");
  return 0;
}
