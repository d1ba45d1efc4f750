#pragma once

#include <stdexcept>
#include <string>

#include "tileforge/ir.hpp"

namespace tileforge {

struct SyntaxError : std::runtime_error {
  int line, column;
  SyntaxError(int line, int column, const std::string& what)
      : std::runtime_error("syntax error at " + std::to_string(line) + ":" +
                           std::to_string(column) + ": " + what),
        line(line),
        column(column) {}
};

struct UnsupportedConstruct : std::runtime_error {
  int line, column;
  UnsupportedConstruct(int line, int column, const std::string& what)
      : std::runtime_error("unsupported construct at " + std::to_string(line) +
                           ":" + std::to_string(column) + ": " + what),
        line(line),
        column(column) {}
};

// Parses one kernel function in the restricted affine C subset:
//   - `for (it = 0; it < N; it++)` with integer literal N, unit stride
//   - bodies of `=  +=  -=  *=` assignments over array refs, scalar
//     parameters and numeric literals combined with + - * /
//   - no conditionals, calls, pointer arithmetic or non-constant bounds
// When `tolerate_pragmas` is set, `#pragma ...` lines are skipped (used to
// re-parse emitted designs for structural audits).
KernelIR parse_kernel(const std::string& source_text,
                      bool tolerate_pragmas = false);

// Per-statement arithmetic op census (copies count as zero ops).
std::map<OpKind, std::int64_t> op_census(const Statement& stmt);

struct AccumulationInfo {
  bool is_accumulation = false;
  OpKind op = OpKind::Add;
  std::string array;  // accumulated target
};

AccumulationInfo detect_accumulation(const Statement& stmt);

}  // namespace tileforge
