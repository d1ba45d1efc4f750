#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tileforge {

enum class OpKind { Add, Sub, Mul, Div };

const char* op_kind_name(OpKind k);
std::optional<OpKind> op_kind_from_name(const std::string& s);

struct Array {
  std::string name;
  std::vector<std::int64_t> dims;  // element counts per dimension
  int element_bits = 32;           // 8, 16, 32 or 64
};

struct Loop {
  std::string id;        // "L0", "L1", ...
  std::string iterator;  // source-level iterator name
  std::int64_t trip_count = 0;
  std::optional<std::string> parent;
  int depth = 0;
};

// One subscript dimension of an affine access: sum of coeff*iterator plus a
// constant. Simple subscripts (one iterator, coefficient 1) are the class the
// analyses reason about exactly; anything else is kept but flagged.
struct Subscript {
  std::map<std::string, std::int64_t> coeffs;  // iterator name -> coefficient
  std::int64_t constant = 0;

  bool is_simple() const {
    if (coeffs.empty()) return true;
    return coeffs.size() == 1 && coeffs.begin()->second == 1;
  }
  // Iterator of a simple single-iterator subscript, empty for pure constants.
  std::string simple_iterator() const {
    return coeffs.empty() ? std::string() : coeffs.begin()->first;
  }
};

enum class AccessMode { Read, Write };

struct AffineAccess {
  std::string array;
  std::vector<Subscript> subscripts;
  AccessMode mode = AccessMode::Read;
  bool non_simple = false;  // any subscript outside the simple class
};

// Expression tree of a statement's right-hand side.
struct ExprNode {
  enum Kind { Num, Scalar, ArrayRef, Binary, Neg } kind = Num;
  std::string text;                   // literal text / scalar name
  std::string array;                  // ArrayRef
  std::vector<Subscript> subscripts;  // ArrayRef
  char op = 0;                        // Binary: + - * /
  std::shared_ptr<ExprNode> lhs, rhs;
};

// Renders an expression; `ref` renders array references (identity by default,
// codegen substitutes on-chip buffer accesses).
std::string render_expr(
    const ExprNode& e,
    const std::function<std::string(const ExprNode&)>& ref = nullptr);

std::string render_subscript(const Subscript& sub);

struct Statement {
  std::string id;  // "S0", "S1", ...
  std::vector<std::string> enclosing_loops;  // outermost first
  std::map<OpKind, std::int64_t> ops;        // per dynamic instance
  std::vector<AffineAccess> accesses;        // write access first
  bool is_accumulation = false;
  OpKind accumulation_op = OpKind::Add;      // valid when is_accumulation
  std::string assign_op = "=";               // = += -= *=
  std::shared_ptr<ExprNode> rhs;
  std::string source_text;  // normalized statement text

  const AffineAccess& write() const { return accesses.front(); }
};

struct KernelIR {
  std::string name;
  std::vector<Array> arrays;
  std::vector<std::string> scalars;  // read-only scalar parameters
  std::vector<Loop> loops;
  std::vector<Statement> statements;  // textual order

  const Loop& loop(const std::string& id) const;
  const Array* find_array(const std::string& name) const;
  const Statement& statement(const std::string& id) const;

  // Total dynamic instances of a statement.
  std::int64_t trip_product(const Statement& s) const;

  // Checks the structural invariants; returns a diagnostic or empty.
  std::string validate() const;
};

// Regenerates compilable C for the kernel (used for round-tripping and as the
// reference body in emitted harnesses).
std::string unparse(const KernelIR& ir);

}  // namespace tileforge
