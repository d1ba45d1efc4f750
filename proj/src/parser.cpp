#include "tileforge/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <memory>
#include <set>
#include <sstream>

namespace tileforge {

namespace {

struct Token {
  enum Kind { Ident, Number, Punct, End } kind = End;
  std::string text;
  std::int64_t value = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  Lexer(const std::string& src, bool tolerate_pragmas)
      : src_(src), tolerate_pragmas_(tolerate_pragmas) {
    next();
  }

  const Token& peek() const { return tok_; }

  Token next() {
    Token prev = tok_;
    skip_ws();
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::End;
      return prev;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        advance();
      tok_.kind = Token::Ident;
      tok_.text = src_.substr(start, pos_ - start);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '.'))
        advance();
      tok_.kind = Token::Number;
      tok_.text = src_.substr(start, pos_ - start);
      tok_.value = std::strtoll(tok_.text.c_str(), nullptr, 10);
    } else {
      tok_.kind = Token::Punct;
      // two-char operators first
      static const char* two[] = {"+=", "-=", "*=", "/=", "++", "--",
                                  "==", "<=", ">=", "!="};
      for (const char* t : two) {
        if (src_.compare(pos_, 2, t) == 0) {
          tok_.text = t;
          advance();
          advance();
          return prev;
        }
      }
      tok_.text = std::string(1, c);
      advance();
    }
    return prev;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      line_++;
      col_ = 1;
    } else {
      col_++;
    }
    pos_++;
  }

  void skip_ws() {
    for (;;) {
      while (pos_ < src_.size() &&
             std::isspace(static_cast<unsigned char>(src_[pos_])))
        advance();
      if (src_.compare(pos_, 2, "//") == 0) {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      if (src_.compare(pos_, 2, "/*") == 0) {
        while (pos_ < src_.size() && src_.compare(pos_, 2, "*/") != 0)
          advance();
        if (pos_ < src_.size()) {
          advance();
          advance();
        }
        continue;
      }
      if (pos_ < src_.size() && src_[pos_] == '#') {
        if (!tolerate_pragmas_)
          throw UnsupportedConstruct(line_, col_,
                                     "preprocessor directive (grammar has no "
                                     "preprocessor)");
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      break;
    }
  }

  const std::string& src_;
  bool tolerate_pragmas_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};


bool same_subscripts(const std::vector<Subscript>& a,
                     const std::vector<Subscript>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].coeffs != b[i].coeffs || a[i].constant != b[i].constant)
      return false;
  return true;
}

class Parser {
 public:
  Parser(const std::string& src, bool tolerate_pragmas)
      : lex_(src, tolerate_pragmas) {}

  KernelIR parse() {
    parse_signature();
    expect_punct("{");
    parse_decls();
    while (!at_punct("}")) parse_item(std::nullopt);
    expect_punct("}");
    if (lex_.peek().kind != Token::End)
      throw SyntaxError(lex_.peek().line, lex_.peek().col,
                        "trailing tokens after kernel body");
    std::string diag = ir_.validate();
    if (!diag.empty())
      throw SyntaxError(1, 1, "invalid kernel structure: " + diag);
    return std::move(ir_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw SyntaxError(lex_.peek().line, lex_.peek().col, msg);
  }
  [[noreturn]] void unsupported(const std::string& msg) {
    throw UnsupportedConstruct(lex_.peek().line, lex_.peek().col, msg);
  }

  bool at_punct(const char* p) {
    return lex_.peek().kind == Token::Punct && lex_.peek().text == p;
  }
  bool at_ident(const char* s) {
    return lex_.peek().kind == Token::Ident && lex_.peek().text == s;
  }
  void expect_punct(const char* p) {
    if (!at_punct(p)) fail(std::string("expected '") + p + "'");
    lex_.next();
  }
  std::string expect_ident() {
    if (lex_.peek().kind != Token::Ident) fail("expected identifier");
    return lex_.next().text;
  }

  int element_bits_for_type(const std::string& t) {
    if (t == "char") return 8;
    if (t == "short") return 16;
    if (t == "float" || t == "int") return 32;
    if (t == "double" || t == "long") return 64;
    return 0;
  }

  void parse_signature() {
    std::string ret = expect_ident();  // return type, must be void
    if (ret != "void") {
      if (element_bits_for_type(ret) == 0)
        fail("expected 'void' return type");
      unsupported("non-void kernel return type");
    }
    ir_.name = expect_ident();
    expect_punct("(");
    if (!at_punct(")")) {
      for (;;) {
        while (at_ident("const")) lex_.next();
        std::string type = expect_ident();
        int bits = element_bits_for_type(type);
        if (bits == 0) fail("unknown parameter type '" + type + "'");
        if (at_punct("*")) unsupported("pointer parameter");
        std::string name = expect_ident();
        if (at_punct("[")) {
          Array a;
          a.name = name;
          a.element_bits = bits;
          while (at_punct("[")) {
            lex_.next();
            if (lex_.peek().kind != Token::Number)
              unsupported("non-constant array dimension");
            a.dims.push_back(lex_.next().value);
            expect_punct("]");
          }
          ir_.arrays.push_back(std::move(a));
        } else {
          ir_.scalars.push_back(name);
        }
        if (at_punct(",")) {
          lex_.next();
          continue;
        }
        break;
      }
    }
    expect_punct(")");
  }

  void parse_decls() {
    while (at_ident("int")) {
      lex_.next();
      for (;;) {
        declared_iters_.insert(expect_ident());
        if (at_punct(",")) {
          lex_.next();
          continue;
        }
        break;
      }
      expect_punct(";");
    }
  }

  void parse_item(const std::optional<std::string>& parent) {
    if (at_ident("for")) {
      parse_for(parent);
    } else if (at_ident("if") || at_ident("while") || at_ident("do")) {
      unsupported("'" + lex_.peek().text + "' (only counted for-loops and "
                  "assignments are in the grammar)");
    } else if (lex_.peek().kind == Token::Ident) {
      parse_assignment(parent);
    } else {
      fail("expected a for-loop or an assignment");
    }
  }

  void parse_for(const std::optional<std::string>& parent) {
    lex_.next();  // for
    expect_punct("(");
    if (at_ident("int")) lex_.next();
    std::string iter = expect_ident();
    expect_punct("=");
    if (lex_.peek().kind != Token::Number || lex_.peek().value != 0)
      unsupported("non-zero loop lower bound");
    lex_.next();
    expect_punct(";");
    std::string iter2 = expect_ident();
    if (iter2 != iter) fail("loop condition must test iterator '" + iter + "'");
    if (!at_punct("<")) unsupported("loop condition other than '<'");
    lex_.next();
    if (lex_.peek().kind != Token::Number) {
      if (lex_.peek().kind == Token::Ident)
        unsupported("non-constant bound '" + lex_.peek().text + "'");
      fail("expected loop bound");
    }
    std::int64_t tc = lex_.next().value;
    if (tc < 1) fail("loop trip count must be positive");
    expect_punct(";");
    std::string iter3 = expect_ident();
    if (iter3 != iter) fail("loop increment must update '" + iter + "'");
    if (at_punct("++")) {
      lex_.next();
    } else if (at_punct("+=")) {
      lex_.next();
      if (lex_.peek().kind != Token::Number || lex_.peek().value != 1)
        unsupported("non-unit loop stride");
      lex_.next();
    } else {
      unsupported("non-unit loop stride");
    }
    expect_punct(")");

    for (const auto& [it, lid] : active_iters_)
      if (it == iter) fail("iterator '" + iter + "' shadows an enclosing loop");

    Loop l;
    l.id = "L" + std::to_string(ir_.loops.size());
    l.iterator = iter;
    l.trip_count = tc;
    l.parent = parent;
    l.depth = static_cast<int>(active_iters_.size());
    ir_.loops.push_back(l);
    active_iters_.emplace_back(iter, l.id);

    if (at_punct("{")) {
      lex_.next();
      while (!at_punct("}")) parse_item(l.id);
      expect_punct("}");
    } else {
      parse_item(l.id);
    }
    active_iters_.pop_back();
  }

  Subscript parse_affine() {
    Subscript sub;
    int sign = 1;
    for (;;) {
      if (at_punct("-")) {
        sign = -sign;
        lex_.next();
        continue;
      }
      std::int64_t coeff = 1;
      std::string iter;
      if (lex_.peek().kind == Token::Number) {
        coeff = lex_.next().value;
        if (at_punct("*")) {
          lex_.next();
          iter = expect_ident();
        }
      } else if (lex_.peek().kind == Token::Ident) {
        iter = expect_ident();
        if (at_punct("*")) {
          lex_.next();
          if (lex_.peek().kind != Token::Number)
            unsupported("non-affine subscript");
          coeff = lex_.next().value;
        }
      } else {
        fail("expected affine subscript term");
      }
      if (iter.empty()) {
        sub.constant += sign * coeff;
      } else {
        if (!is_active_iter(iter))
          fail("subscript uses unknown iterator '" + iter + "'");
        sub.coeffs[iter] += sign * coeff;
        if (sub.coeffs[iter] == 0) sub.coeffs.erase(iter);
      }
      if (at_punct("+")) {
        sign = 1;
        lex_.next();
      } else if (at_punct("-")) {
        sign = -1;
        lex_.next();
      } else {
        break;
      }
    }
    return sub;
  }

  bool is_active_iter(const std::string& name) const {
    for (const auto& [it, lid] : active_iters_)
      if (it == name) return true;
    return false;
  }

  std::shared_ptr<ExprNode> parse_factor() {
    if (at_punct("(")) {
      lex_.next();
      auto e = parse_expr();
      expect_punct(")");
      return e;
    }
    if (at_punct("-")) {
      lex_.next();
      auto e = std::make_shared<ExprNode>();
      e->kind = ExprNode::Neg;
      e->lhs = parse_factor();
      return e;
    }
    if (lex_.peek().kind == Token::Number) {
      auto e = std::make_shared<ExprNode>();
      e->kind = ExprNode::Num;
      e->text = lex_.next().text;
      return e;
    }
    std::string name = expect_ident();
    if (at_punct("(")) unsupported("function call '" + name + "'");
    if (at_punct("[")) {
      auto e = std::make_shared<ExprNode>();
      e->kind = ExprNode::ArrayRef;
      e->array = name;
      while (at_punct("[")) {
        lex_.next();
        e->subscripts.push_back(parse_affine());
        expect_punct("]");
      }
      return e;
    }
    if (is_active_iter(name))
      unsupported("bare iterator '" + name + "' in arithmetic expression");
    bool known = false;
    for (const auto& s : ir_.scalars) known |= (s == name);
    if (!known) fail("unknown identifier '" + name + "'");
    auto e = std::make_shared<ExprNode>();
    e->kind = ExprNode::Scalar;
    e->text = name;
    return e;
  }

  std::shared_ptr<ExprNode> parse_term() {
    auto lhs = parse_factor();
    while (at_punct("*") || at_punct("/")) {
      char op = lex_.next().text[0];
      auto e = std::make_shared<ExprNode>();
      e->kind = ExprNode::Binary;
      e->op = op;
      e->lhs = std::move(lhs);
      e->rhs = parse_factor();
      lhs = std::move(e);
    }
    return lhs;
  }

  std::shared_ptr<ExprNode> parse_expr() {
    auto lhs = parse_term();
    while (at_punct("+") || at_punct("-")) {
      char op = lex_.next().text[0];
      auto e = std::make_shared<ExprNode>();
      e->kind = ExprNode::Binary;
      e->op = op;
      e->lhs = std::move(lhs);
      e->rhs = parse_term();
      lhs = std::move(e);
    }
    return lhs;
  }

  void count_ops(const ExprNode& e, std::map<OpKind, std::int64_t>& ops) {
    switch (e.kind) {
      case ExprNode::Binary:
        switch (e.op) {
          case '+': ops[OpKind::Add]++; break;
          case '-': ops[OpKind::Sub]++; break;
          case '*': ops[OpKind::Mul]++; break;
          case '/': ops[OpKind::Div]++; break;
        }
        count_ops(*e.lhs, ops);
        count_ops(*e.rhs, ops);
        break;
      case ExprNode::Neg:
        ops[OpKind::Sub]++;
        count_ops(*e.lhs, ops);
        break;
      default:
        break;
    }
  }

  void collect_reads(const ExprNode& e, Statement& s) {
    switch (e.kind) {
      case ExprNode::ArrayRef: {
        AffineAccess acc;
        acc.array = e.array;
        acc.subscripts = e.subscripts;
        acc.mode = AccessMode::Read;
        for (const auto& sub : acc.subscripts)
          if (!sub.is_simple()) acc.non_simple = true;
        s.accesses.push_back(std::move(acc));
        break;
      }
      case ExprNode::Binary:
        collect_reads(*e.lhs, s);
        collect_reads(*e.rhs, s);
        break;
      case ExprNode::Neg:
        collect_reads(*e.lhs, s);
        break;
      default:
        break;
    }
  }

  // Top-level operands of a chain of `op`-nodes (for accumulation detection
  // on plain `=` assignments).
  void chain_operands(const ExprNode& e, char op, std::vector<const ExprNode*>& out) {
    if (e.kind == ExprNode::Binary && e.op == op) {
      chain_operands(*e.lhs, op, out);
      chain_operands(*e.rhs, op, out);
    } else {
      out.push_back(&e);
    }
  }

  void parse_assignment(const std::optional<std::string>& parent) {
    std::string name = expect_ident();
    if (at_punct("(")) unsupported("function call '" + name + "'");
    if (!at_punct("[")) unsupported("assignment to scalar '" + name + "'");
    ExprNode lhs;
    lhs.kind = ExprNode::ArrayRef;
    lhs.array = name;
    while (at_punct("[")) {
      lex_.next();
      lhs.subscripts.push_back(parse_affine());
      expect_punct("]");
    }
    if (lex_.peek().kind != Token::Punct) fail("expected assignment operator");
    std::string assign_op = lex_.peek().text;
    if (assign_op != "=" && assign_op != "+=" && assign_op != "-=" &&
        assign_op != "*=") {
      if (assign_op == "/=")
        unsupported("'/=' compound assignment");
      fail("expected assignment operator");
    }
    lex_.next();
    auto rhs = parse_expr();
    expect_punct(";");

    Statement s;
    s.id = "S" + std::to_string(ir_.statements.size());
    for (const auto& [it, lid] : active_iters_) s.enclosing_loops.push_back(lid);

    AffineAccess w;
    w.array = lhs.array;
    w.subscripts = lhs.subscripts;
    w.mode = AccessMode::Write;
    for (const auto& sub : w.subscripts)
      if (!sub.is_simple()) w.non_simple = true;
    s.accesses.push_back(w);

    count_ops(*rhs, s.ops);
    collect_reads(*rhs, s);
    if (assign_op == "+=") {
      s.ops[OpKind::Add]++;
    } else if (assign_op == "-=") {
      s.ops[OpKind::Sub]++;
    } else if (assign_op == "*=") {
      s.ops[OpKind::Mul]++;
    }

    // Accumulation: written element combined into itself via add or mul.
    if (assign_op == "+=" || assign_op == "*=") {
      s.is_accumulation = true;
      s.accumulation_op = assign_op == "+=" ? OpKind::Add : OpKind::Mul;
      AffineAccess r = w;
      r.mode = AccessMode::Read;
      s.accesses.push_back(r);
    } else if (assign_op == "=") {
      for (char op : {'+', '*'}) {
        std::vector<const ExprNode*> operands;
        chain_operands(*rhs, op, operands);
        if (operands.size() < 2) continue;
        for (const ExprNode* o : operands) {
          if (o->kind == ExprNode::ArrayRef && o->array == lhs.array &&
              same_subscripts(o->subscripts, lhs.subscripts)) {
            s.is_accumulation = true;
            s.accumulation_op = op == '+' ? OpKind::Add : OpKind::Mul;
          }
        }
        if (s.is_accumulation) break;
      }
    }

    s.assign_op = assign_op;
    s.rhs = rhs;
    s.source_text =
        render_expr(lhs) + " " + assign_op + " " + render_expr(*rhs) + ";";
    ir_.statements.push_back(std::move(s));
  }

  Lexer lex_;
  KernelIR ir_;
  std::set<std::string> declared_iters_;
  std::vector<std::pair<std::string, std::string>> active_iters_;  // (iter, loop id)
};

}  // namespace

KernelIR parse_kernel(const std::string& source_text, bool tolerate_pragmas) {
  return Parser(source_text, tolerate_pragmas).parse();
}

std::map<OpKind, std::int64_t> op_census(const Statement& stmt) {
  return stmt.ops;
}

AccumulationInfo detect_accumulation(const Statement& stmt) {
  AccumulationInfo info;
  info.is_accumulation = stmt.is_accumulation;
  if (stmt.is_accumulation) {
    info.op = stmt.accumulation_op;
    info.array = stmt.accesses.front().array;  // write access
  }
  return info;
}

}  // namespace tileforge
