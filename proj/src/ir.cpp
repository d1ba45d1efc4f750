#include "tileforge/ir.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tileforge {

const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Div: return "div";
  }
  return "?";
}

std::optional<OpKind> op_kind_from_name(const std::string& s) {
  if (s == "add") return OpKind::Add;
  if (s == "sub") return OpKind::Sub;
  if (s == "mul") return OpKind::Mul;
  if (s == "div") return OpKind::Div;
  return std::nullopt;
}

const Loop& KernelIR::loop(const std::string& id) const {
  for (const auto& l : loops)
    if (l.id == id) return l;
  throw std::out_of_range("no loop " + id);
}

const Array* KernelIR::find_array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

const Statement& KernelIR::statement(const std::string& id) const {
  for (const auto& s : statements)
    if (s.id == id) return s;
  throw std::out_of_range("no statement " + id);
}

std::int64_t KernelIR::trip_product(const Statement& s) const {
  std::int64_t p = 1;
  for (const auto& lid : s.enclosing_loops) p *= loop(lid).trip_count;
  return p;
}

std::string KernelIR::validate() const {
  for (const auto& a : arrays) {
    if (a.dims.empty()) return "array " + a.name + " has no dimensions";
    for (auto d : a.dims)
      if (d < 1) return "array " + a.name + " has non-positive dimension";
    if (a.element_bits != 8 && a.element_bits != 16 && a.element_bits != 32 &&
        a.element_bits != 64)
      return "array " + a.name + " has unsupported element width";
  }
  std::set<std::string> loop_ids;
  for (const auto& l : loops) {
    if (!loop_ids.insert(l.id).second) return "duplicate loop id " + l.id;
    if (l.trip_count < 1) return "loop " + l.id + " has non-positive trip count";
  }
  for (const auto& l : loops) {
    // parent chain must terminate
    std::set<std::string> seen;
    const Loop* cur = &l;
    while (cur->parent) {
      if (!seen.insert(cur->id).second) return "loop parent cycle at " + l.id;
      if (!loop_ids.count(*cur->parent)) return "unknown parent of " + cur->id;
      cur = &loop(*cur->parent);
    }
  }
  for (const auto& s : statements) {
    // enclosing_loops must be a root-to-leaf parent chain
    for (size_t i = 0; i < s.enclosing_loops.size(); ++i) {
      const Loop& l = loop(s.enclosing_loops[i]);
      if (i == 0) {
        if (l.parent) return s.id + ": first enclosing loop is not a root";
      } else if (!l.parent || *l.parent != s.enclosing_loops[i - 1]) {
        return s.id + ": enclosing loops are not a nesting chain";
      }
    }
    int writes = 0;
    for (const auto& acc : s.accesses) {
      if (acc.mode == AccessMode::Write) writes++;
      const Array* arr = find_array(acc.array);
      if (!arr) return s.id + ": access to undeclared array " + acc.array;
      if (acc.subscripts.size() != arr->dims.size())
        return s.id + ": rank mismatch on " + acc.array;
      for (const auto& sub : acc.subscripts)
        for (const auto& [it, c] : sub.coeffs) {
          bool enclosed = false;
          for (const auto& lid : s.enclosing_loops)
            if (loop(lid).iterator == it) enclosed = true;
          if (!enclosed)
            return s.id + ": subscript uses non-enclosing iterator " + it;
        }
    }
    if (writes != 1) return s.id + ": must have exactly one write access";
  }
  return {};
}

std::string render_subscript(const Subscript& sub) {
  std::string out;
  bool first = true;
  for (const auto& [it, c] : sub.coeffs) {
    if (!first) out += " + ";
    first = false;
    if (c == 1)
      out += it;
    else
      out += std::to_string(c) + "*" + it;
  }
  if (sub.constant != 0 || first) {
    if (!first) out += sub.constant >= 0 ? " + " : " - ";
    out += std::to_string(first ? sub.constant : std::llabs(sub.constant));
  }
  return out;
}

std::string render_expr(
    const ExprNode& e,
    const std::function<std::string(const ExprNode&)>& ref) {
  switch (e.kind) {
    case ExprNode::Num:
    case ExprNode::Scalar:
      return e.text;
    case ExprNode::ArrayRef: {
      if (ref) return ref(e);
      std::string out = e.array;
      for (const auto& sub : e.subscripts) out += "[" + render_subscript(sub) + "]";
      return out;
    }
    case ExprNode::Neg:
      return "-" + render_expr(*e.lhs, ref);
    case ExprNode::Binary: {
      auto wrap = [&](const ExprNode& child) {
        std::string r = render_expr(child, ref);
        bool child_addsub = child.kind == ExprNode::Binary &&
                            (child.op == '+' || child.op == '-');
        if ((e.op == '*' || e.op == '/') && child_addsub) return "(" + r + ")";
        return r;
      };
      return wrap(*e.lhs) + " " + std::string(1, e.op) + " " + wrap(*e.rhs);
    }
  }
  return {};
}

namespace {

void unparse_loop_body(const KernelIR& ir, const std::string& loop_id,
                       int indent, std::ostringstream& out);

void emit_children(const KernelIR& ir, const std::optional<std::string>& parent,
                   int indent, std::ostringstream& out) {
  // Children (loops and statements) are interleaved in textual order; loops
  // and statements both carry textual order via their position in the vectors.
  // A statement belongs directly under loop P iff its innermost loop is P.
  struct Item {
    bool is_stmt;
    size_t index;
  };
  std::vector<Item> items;
  // Statements directly under `parent`.
  for (size_t i = 0; i < ir.statements.size(); ++i) {
    const auto& s = ir.statements[i];
    bool direct = s.enclosing_loops.empty()
                      ? !parent
                      : (parent && s.enclosing_loops.back() == *parent);
    if (direct) items.push_back({true, i});
  }
  for (size_t i = 0; i < ir.loops.size(); ++i) {
    if (ir.loops[i].parent == parent) items.push_back({false, i});
  }
  // Restore textual order: order items by the first statement they contain.
  auto first_stmt_pos = [&](const Item& it) -> size_t {
    if (it.is_stmt) return it.index;
    // first statement textually under this loop (transitively)
    for (size_t i = 0; i < ir.statements.size(); ++i)
      for (const auto& lid : ir.statements[i].enclosing_loops)
        if (lid == ir.loops[it.index].id) return i;
    return ir.statements.size() + it.index;  // empty loop: keep after
  };
  std::stable_sort(items.begin(), items.end(),
                   [&](const Item& a, const Item& b) {
                     return first_stmt_pos(a) < first_stmt_pos(b);
                   });
  std::string pad(2 * indent, ' ');
  for (const auto& it : items) {
    if (it.is_stmt) {
      out << pad << ir.statements[it.index].source_text << "\n";
    } else {
      unparse_loop_body(ir, ir.loops[it.index].id, indent, out);
    }
  }
}

void unparse_loop_body(const KernelIR& ir, const std::string& loop_id,
                       int indent, std::ostringstream& out) {
  const Loop& l = ir.loop(loop_id);
  std::string pad(2 * indent, ' ');
  out << pad << "for (" << l.iterator << " = 0; " << l.iterator << " < "
      << l.trip_count << "; " << l.iterator << "++) {\n";
  emit_children(ir, loop_id, indent + 1, out);
  out << pad << "}\n";
}

const char* type_for_bits(int bits) {
  switch (bits) {
    case 8: return "char";
    case 16: return "short";
    case 64: return "double";
    default: return "float";
  }
}

}  // namespace

std::string unparse(const KernelIR& ir) {
  std::ostringstream out;
  out << "void " << ir.name << "(";
  bool first = true;
  for (const auto& a : ir.arrays) {
    if (!first) out << ", ";
    first = false;
    out << type_for_bits(a.element_bits) << " " << a.name;
    for (auto d : a.dims) out << "[" << d << "]";
  }
  for (const auto& s : ir.scalars) {
    if (!first) out << ", ";
    first = false;
    out << "float " << s;
  }
  out << ") {\n";
  std::set<std::string> iters;
  for (const auto& l : ir.loops) iters.insert(l.iterator);
  if (!iters.empty()) {
    out << "  int";
    bool f2 = true;
    for (const auto& it : iters) {
      out << (f2 ? " " : ", ") << it;
      f2 = false;
    }
    out << ";\n";
  }
  emit_children(ir, std::nullopt, 1, out);
  out << "}\n";
  return out.str();
}

}  // namespace tileforge
