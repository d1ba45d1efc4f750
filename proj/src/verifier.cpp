#include "tileforge/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <sstream>

// Everything here intentionally re-derives constraint arithmetic from first
// principles: no call into the cost model, separate footprint and latency
// formulas. Agreement between the two implementations is what the test suite
// asserts; sharing code would make that assertion vacuous.

namespace tileforge {

namespace {

std::int64_t up_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return q * b == a ? q : q + 1;
}

std::int64_t log2_up(std::int64_t n) {
  std::int64_t d = 0;
  while ((std::int64_t(1) << d) < n) ++d;
  return d;
}

struct Checker {
  const DesignSpace& sp;
  const PlatformConfig& cfg;
  const Assignment& a;
  std::vector<Violation> v;
  std::map<std::string, std::vector<std::int64_t>> ap;

  Checker(const DesignSpace& s, const PlatformConfig& c, const Assignment& x)
      : sp(s), cfg(c), a(x) {}

  void flag(const std::string& tag, const std::string& msg, std::int64_t obs,
            std::int64_t bound, const std::string& stmt = "",
            const std::string& loop = "", const std::string& array = "") {
    v.push_back({tag, stmt, loop, array, msg, obs, bound});
  }

  const LoopAssign* get(const std::string& lid) {
    auto it = a.loops.find(lid);
    return it == a.loops.end() ? nullptr : &it->second;
  }

  // Reduction loops, derived directly from the definition: the statement
  // accumulates and the loop's iterator never indexes the written element.
  std::vector<std::string> red_of(const Statement& s) const {
    std::vector<std::string> out;
    if (!s.is_accumulation) return out;
    for (const auto& lid : s.enclosing_loops) {
      const std::string& it = sp.ir.loop(lid).iterator;
      bool used = false;
      for (const auto& sub : s.write().subscripts)
        if (sub.coeffs.count(it)) used = true;
      if (!used) out.push_back(lid);
    }
    return out;
  }

  std::string pip_of(const Statement& s) {
    for (const auto& lid : s.enclosing_loops) {
      const LoopAssign* x = get(lid);
      if (x && x->pip) return lid;
    }
    return {};
  }

  std::int64_t u_red_of(const Statement& s) {
    std::int64_t u = 1;
    for (const auto& lid : red_of(s))
      if (const LoopAssign* x = get(lid)) u *= x->tc.t2;
    return u;
  }

  // longest single-op latency among the non-combining ops of the statement
  std::int64_t il_par_of(const Statement& s) const {
    std::map<OpKind, std::int64_t> ops = s.ops;
    if (!red_of(s).empty()) {
      auto it = ops.find(s.accumulation_op);
      if (it != ops.end() && it->second > 0) it->second -= 1;
    }
    std::int64_t best = 0;
    for (const auto& [op, n] : ops)
      if (n > 0) best = std::max(best, cfg.il_par.at(op));
    return best;
  }

  std::int64_t ii_of(const Statement& s) {
    std::string pip = pip_of(s);
    if (pip.empty()) return 0;
    auto red = red_of(s);
    if (std::count(red.begin(), red.end(), pip)) {
      std::int64_t il = cfg.il_red.at(s.accumulation_op);
      std::int64_t u = u_red_of(s);
      return cfg.tree_reduction ? il * log2_up(std::max<std::int64_t>(2, u))
                                : il * u;
    }
    std::int64_t chain = std::max<std::int64_t>(1, il_par_of(s));
    std::int64_t ii = 1;
    for (const auto& d : sp.deps) {
      if (d.kind != DepKind::Flow || d.src_stmt != s.id || d.dst_stmt != s.id)
        continue;
      for (size_t k = 0; k < d.common_loops.size(); ++k) {
        if (d.common_loops[k] != pip) continue;
        if (d.distance[k].star)
          ii = std::max(ii, chain);
        else if (d.distance[k].value > 0)
          ii = std::max(ii, up_div(chain, d.distance[k].value));
      }
    }
    return ii;
  }

  // loops (kernel-wide) whose iterator appears in subscripts of dim d
  std::vector<std::string> dim_loops(const std::string& array, size_t d) const {
    std::set<std::string> out;
    for (const auto& s : sp.ir.statements)
      for (const auto& acc : s.accesses) {
        if (acc.array != array || d >= acc.subscripts.size()) continue;
        for (const auto& [it, c] : acc.subscripts[d].coeffs)
          for (const auto& lid : s.enclosing_loops)
            if (sp.ir.loop(lid).iterator == it) out.insert(lid);
      }
    return {out.begin(), out.end()};
  }

  // ---- transfer table (shared by memory + latency) -------------------------

  struct Xfer {
    int nest;
    std::string array, owner;
    int pos;
    bool written = false, elided = false;
    std::int64_t foot = 1, trip = 1;
  };

  std::vector<Xfer> xfers() {
    std::vector<Xfer> out;
    for (size_t ni = 0; ni < sp.nests.size(); ++ni) {
      const NestSpace& nest = sp.nests[ni];
      if (ni >= a.perm.size()) continue;
      const auto& perm = a.perm[ni];
      std::set<std::pair<std::string, int>> seen;
      for (const auto& sid : nest.stmts) {
        const Statement& st = sp.ir.statement(sid);
        std::set<std::string> arrays;
        for (const auto& acc : st.accesses) arrays.insert(acc.array);
        for (const auto& arr : arrays) {
          auto sel = a.cache.find({sid, arr});
          if (sel == a.cache.end()) continue;
          int pos = sel->second;
          if (!seen.insert({arr, pos}).second) {
            for (auto& x : out)
              if (x.nest == static_cast<int>(ni) && x.array == arr &&
                  x.pos == pos)
                x.written |= st.write().array == arr;
            continue;
          }
          Xfer x;
          x.nest = static_cast<int>(ni);
          x.array = arr;
          x.owner = sid;
          x.pos = pos;
          x.written = st.write().array == arr;
          // footprint: the enclosed portion per dimension is t1*t2 of the
          // unique indexing loop once its level-0 loop is outside the point
          const Array* av = sp.ir.find_array(arr);
          for (size_t d = 0; d < av->dims.size(); ++d) {
            std::set<std::string> iters;
            for (const auto& sid2 : nest.stmts)
              for (const auto& acc : sp.ir.statement(sid2).accesses)
                if (acc.array == arr && d < acc.subscripts.size())
                  for (const auto& [it2, c] : acc.subscripts[d].coeffs)
                    iters.insert(it2);
            std::int64_t extent = av->dims[d];
            if (iters.size() == 1) {
              for (size_t b = 0; b < nest.band.size(); ++b) {
                if (sp.ir.loop(nest.band[b]).iterator != *iters.begin())
                  continue;
                int slot = -1;
                for (size_t k = 0; k < perm.size(); ++k)
                  if (perm[k] == static_cast<int>(b)) slot = static_cast<int>(k);
                const LoopAssign* la = get(nest.band[b]);
                if (la && pos >= 0 && slot >= 0 && slot <= pos)
                  extent = la->tc.t1 * la->tc.t2;
              }
            }
            x.foot *= extent;
          }
          for (int k = 0; k <= pos && k < static_cast<int>(perm.size()); ++k) {
            const LoopAssign* la =
                get(nest.band[static_cast<size_t>(perm[static_cast<size_t>(k)])]);
            if (la) x.trip *= la->tc.t0;
          }
          out.push_back(x);
        }
      }
    }
    for (const auto& r : sp.residents) {
      auto p = a.cache.find({r.producer_stmt, r.array});
      auto c = a.cache.find({r.consumer_stmt, r.array});
      if (p == a.cache.end() || c == a.cache.end()) continue;
      if (p->second != kBeforeNest || c->second != kBeforeNest) continue;
      for (auto& x : out)
        if (x.array == r.array && x.pos == kBeforeNest &&
            x.owner == r.consumer_stmt)
          x.elided = true;
    }
    return out;
  }

  std::int64_t own_burst(const Array& arr) const {
    std::int64_t row = arr.dims.back() * arr.element_bits;
    std::int64_t b = 1;
    while (b * 2 <= cfg.burst_cap_bits) b *= 2;
    while (b > 1 && row % b != 0) b /= 2;
    return b;
  }

  // ---- the checks ----------------------------------------------------------

  void structure() {
    for (const auto& l : sp.ir.loops)
      if (!get(l.id))
        flag("structural", "loop has no assignment", 0, 1, "", l.id);
    if (a.perm.size() != sp.nests.size())
      flag("structural", "permutation list does not match the nests",
           static_cast<std::int64_t>(a.perm.size()),
           static_cast<std::int64_t>(sp.nests.size()));
  }

  void trip_counts() {
    for (const auto& l : sp.ir.loops) {
      const LoopAssign* x = get(l.id);
      if (!x) continue;
      std::int64_t p = x->tc.t0 * x->tc.t1 * x->tc.t2;
      if (x->tc.t0 < 1 || x->tc.t1 < 1 || x->tc.t2 < 1 || p != l.trip_count)
        flag("E1", "factor triple does not multiply to the trip count", p,
             l.trip_count, "", l.id);
    }
  }

  void pipeline() {
    for (const auto& s : sp.ir.statements) {
      int flags = 0;
      for (const auto& lid : s.enclosing_loops) {
        const LoopAssign* x = get(lid);
        if (!x) continue;
        if (x->pip) flags++;
        if (!x->pip && x->tc.t1 != 1)
          flag("E3", "non-pipelined loop with level-1 trip count > 1",
               x->tc.t1, 1, s.id, lid);
      }
      if (flags > 1)
        flag("E4", "more than one pipelined loop in the body", flags, 1, s.id);
    }
  }

  void coarse_unroll() {
    for (const auto& s : sp.ir.statements) {
      bool singleton = sp.nest_of(s.id).stmts.size() == 1;
      auto red = red_of(s);
      for (const auto& lid : s.enclosing_loops) {
        const LoopAssign* x = get(lid);
        if (!x) continue;
        bool is_red = std::count(red.begin(), red.end(), lid) > 0;
        if (is_red && x->uf != 1)
          flag("E6", "coarse unroll on a reduction loop", x->uf, 1, s.id, lid);
        if (x->uf < 1 || x->tc.t0 % x->uf != 0)
          flag("E7", "unroll factor does not divide the level-0 trip count",
               x->uf, x->tc.t0, s.id, lid);
        if (x->uf > x->tc.t0)
          flag("E8", "unroll factor exceeds the level-0 trip count", x->uf,
               x->tc.t0, s.id, lid);
        if (singleton && x->uf != 1)
          flag("E9", "coarse unroll on a single-statement body", x->uf, 1,
               s.id, lid);
      }
    }
  }

  void caching(const std::vector<Xfer>& xs) {
    for (const auto& nest : sp.nests) {
      for (const auto& sid : nest.stmts) {
        const Statement& st = sp.ir.statement(sid);
        std::set<std::string> arrays;
        for (const auto& acc : st.accesses) arrays.insert(acc.array);
        for (const auto& arr : arrays) {
          auto sel = a.cache.find({sid, arr});
          if (sel == a.cache.end()) {
            flag("E11", "no cache point selected", 0, 1, sid, "", arr);
            continue;
          }
          // own domain derivation: a dimension driven by a single iterator
          // with a stride or shift pins the transfer before the nest
          bool before_only = false;
          for (const auto& acc : st.accesses) {
            if (acc.array != arr) continue;
            for (const auto& sub : acc.subscripts)
              if (sub.coeffs.size() == 1 &&
                  (sub.coeffs.begin()->second != 1 || sub.constant != 0))
                before_only = true;
          }
          int pos = sel->second;
          bool ok = pos == kBeforeNest ||
                    (!before_only && pos >= 0 &&
                     pos < static_cast<int>(nest.band.size()));
          if (!ok)
            flag("E10", "cache point outside the domain", pos,
                 static_cast<std::int64_t>(nest.band.size()), sid, "", arr);
        }
      }
    }
    std::int64_t bytes = 0;
    for (const auto& x : xs)
      bytes += x.foot * sp.ir.find_array(x.array)->element_bits / 8;
    for (const auto& r : sp.residents) {
      auto p = a.cache.find({r.producer_stmt, r.array});
      auto c = a.cache.find({r.consumer_stmt, r.array});
      if (p == a.cache.end() || c == a.cache.end()) continue;
      if (p->second != kBeforeNest || c->second != kBeforeNest) continue;
      const Array* av = sp.ir.find_array(r.array);
      std::int64_t full = av->element_bits / 8;
      for (auto d : av->dims) full *= d;
      bytes -= full;
    }
    if (bytes > cfg.mem_bytes)
      flag("E12", "on-chip footprint exceeds capacity", bytes, cfg.mem_bytes);
  }

  void partitioning() {
    ap = a.ap;
    if (ap.empty()) {
      for (const auto& arr : sp.ir.arrays) {
        std::vector<std::int64_t> dims;
        for (size_t d = 0; d < arr.dims.size(); ++d) {
          std::int64_t f = 1;
          for (const auto& lid : dim_loops(arr.name, d))
            if (const LoopAssign* x = get(lid)) f = std::lcm(f, x->tc.t2);
          dims.push_back(f);
        }
        ap[arr.name] = dims;
      }
    }
    for (const auto& arr : sp.ir.arrays) {
      auto it = ap.find(arr.name);
      if (it == ap.end() || it->second.size() != arr.dims.size()) {
        flag("structural", "partition factors missing", 0, 1, "", "",
             arr.name);
        continue;
      }
      std::int64_t product = 1;
      for (size_t d = 0; d < arr.dims.size(); ++d) {
        product *= it->second[d];
        for (const auto& lid : dim_loops(arr.name, d)) {
          const LoopAssign* x = get(lid);
          if (!x) continue;
          if (it->second[d] < x->tc.t2)
            flag("E13", "partition factor below the level-2 trip count",
                 it->second[d], x->tc.t2, "", lid, arr.name);
          else if (it->second[d] % x->tc.t2 != 0)
            flag("E14", "partition factor not a multiple of the level-2 trip",
                 it->second[d], x->tc.t2, "", lid, arr.name);
        }
      }
      if (product > cfg.max_part)
        flag("E15", "total partition factor exceeds max_part", product,
             cfg.max_part, "", "", arr.name);
    }
  }

  void dsp() {
    std::map<OpKind, std::int64_t> mx, sm;
    for (const auto& s : sp.ir.statements) {
      std::int64_t par = 1;
      for (const auto& lid : s.enclosing_loops)
        if (const LoopAssign* x = get(lid)) par *= x->tc.t2 * x->uf;
      std::int64_t ii = std::max<std::int64_t>(1, ii_of(s));
      for (const auto& [op, n] : s.ops) {
        std::int64_t d = up_div(cfg.dsp_cost.at(op) * n * par, ii);
        mx[op] = std::max(mx[op], d);
        sm[op] += d;
      }
    }
    std::int64_t opt = 0, pes = 0;
    for (const auto& [op, m] : mx) opt += m;
    for (const auto& [op, m] : sm) pes += m;
    std::int64_t active = cfg.reuse_opt ? opt : pes;
    if (active > cfg.dsp_available)
      flag(cfg.reuse_opt ? "E18" : "E19", "DSP demand exceeds the device",
           active, cfg.dsp_available);
  }

  std::int64_t objective(const std::vector<Xfer>& xs) {
    std::int64_t total = 0;
    for (const auto& s : sp.ir.statements) {
      std::int64_t u = u_red_of(s);
      std::int64_t il = cfg.il_red.at(s.accumulation_op);
      std::int64_t dred =
          u <= 1 ? 0
                 : (cfg.tree_reduction ? il * log2_up(u) : il * (u - 1));
      std::int64_t lat2 = std::max<std::int64_t>(1, il_par_of(s) + dred);
      std::string pip = pip_of(s);
      std::int64_t lat1 = lat2;
      if (!pip.empty()) {
        lat1 += ii_of(s) * (get(pip)->tc.t1 - 1);
      } else {
        for (const auto& lid : s.enclosing_loops)
          if (const LoopAssign* x = get(lid)) lat1 *= x->tc.t1;
      }
      std::int64_t lat0 = lat1;
      for (const auto& lid : s.enclosing_loops)
        if (const LoopAssign* x = get(lid)) lat0 *= x->tc.t0 / x->uf;
      std::int64_t lmem = 0;
      for (const auto& x : xs) {
        if (x.owner != s.id) continue;
        const Array* av = sp.ir.find_array(x.array);
        std::int64_t passes = (x.elided ? 0 : 1) + (x.written ? 1 : 0);
        lmem += up_div(x.foot * av->element_bits, own_burst(*av)) * x.trip *
                passes;
      }
      total += lat0 + lmem;
    }
    return total;
  }
};

}  // namespace

VerifyReport verify_assignment(const DesignSpace& space,
                               const PlatformConfig& cfg, const Assignment& a,
                               std::int64_t claimed) {
  VerifyReport r;
  r.claimed_objective = claimed;
  Checker ck(space, cfg, a);
  ck.structure();
  ck.trip_counts();
  ck.pipeline();
  ck.coarse_unroll();
  bool usable = ck.v.empty();  // transfers need well-formed structure
  auto xs = usable ? ck.xfers() : std::vector<Checker::Xfer>{};
  ck.caching(xs);
  ck.partitioning();
  ck.dsp();
  if (ck.v.empty()) r.recomputed_objective = ck.objective(xs);
  if (claimed >= 0 && ck.v.empty() && r.recomputed_objective != claimed)
    ck.flag("objective", "claimed objective does not match recomputation",
            claimed, r.recomputed_objective);
  r.violations = std::move(ck.v);
  r.pass = r.violations.empty();
  return r;
}

VerifyReport verify_solution(const KernelIR& ir, const PlatformConfig& cfg,
                             const std::string& solution_json) {
  SolutionFile f = solution_from_json(solution_json);
  DesignSpace space = build_design_space(ir);
  if (f.kernel != space.ir.name) {
    VerifyReport r;
    r.violations.push_back({"structural", "", "", "",
                            "solution names kernel '" + f.kernel +
                                "', expected '" + space.ir.name + "'",
                            0, 0});
    return r;
  }
  resolve_perm(space, f);
  return verify_assignment(space, cfg, f.assignment, f.objective);
}

// ---------------------------------------------------------------------------
// structural audit
// ---------------------------------------------------------------------------

namespace {

struct Affine {
  std::map<std::string, std::int64_t> coef;
  std::int64_t c = 0;
};

struct AffineParser {
  const std::string& s;
  size_t p = 0;
  bool ok = true;
  explicit AffineParser(const std::string& t) : s(t) {}

  void ws() {
    while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) p++;
  }
  Affine expr() {
    Affine a = term();
    ws();
    while (ok && p < s.size() && (s[p] == '+' || s[p] == '-')) {
      char op = s[p++];
      Affine b = term();
      for (const auto& [k, v] : b.coef) a.coef[k] += op == '+' ? v : -v;
      a.c += op == '+' ? b.c : -b.c;
      ws();
    }
    return a;
  }
  Affine term() {
    Affine a = factor();
    ws();
    while (ok && p < s.size() && s[p] == '*') {
      p++;
      Affine b = factor();
      if (a.coef.empty()) {
        for (auto& [k, v] : b.coef) v *= a.c;
        b.c *= a.c;
        a = b;
      } else if (b.coef.empty()) {
        for (auto& [k, v] : a.coef) v *= b.c;
        a.c *= b.c;
      } else {
        ok = false;  // non-affine product
      }
      ws();
    }
    return a;
  }
  Affine factor() {
    ws();
    Affine a;
    if (p >= s.size()) {
      ok = false;
      return a;
    }
    if (s[p] == '(') {
      p++;
      a = expr();
      ws();
      if (p < s.size() && s[p] == ')')
        p++;
      else
        ok = false;
      return a;
    }
    if (std::isdigit(static_cast<unsigned char>(s[p]))) {
      std::int64_t v = 0;
      while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p])))
        v = v * 10 + (s[p++] - '0');
      a.c = v;
      return a;
    }
    if (std::isalpha(static_cast<unsigned char>(s[p])) || s[p] == '_') {
      std::string id;
      while (p < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[p])) || s[p] == '_'))
        id += s[p++];
      a.coef[id] = 1;
      return a;
    }
    ok = false;
    return a;
  }
};

bool parse_affine(const std::string& text, Affine& out) {
  AffineParser ap(text);
  out = ap.expr();
  ap.ws();
  return ap.ok && ap.p == text.size();
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comments(const std::string& text) {
  std::string out;
  size_t i = 0;
  while (i < text.size()) {
    if (i + 1 < text.size() && text[i] == '/' && text[i + 1] == '*') {
      size_t e = text.find("*/", i + 2);
      i = e == std::string::npos ? text.size() : e + 2;
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::vector<std::string> identifiers(const std::string& s,
                                     bool arrays_only = false) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    if (std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '_') {
      size_t b = i;
      while (i < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_'))
        i++;
      size_t j = i;
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j])))
        j++;
      if (!arrays_only || (j < s.size() && s[j] == '['))
        out.push_back(s.substr(b, i - b));
    } else {
      i++;
    }
  }
  return out;
}

}  // namespace

std::vector<AuditFinding> audit_structure(const KernelIR& ir,
                                          const std::string& design_text) {
  std::vector<AuditFinding> findings;
  std::string clean = strip_comments(design_text);
  std::vector<std::string> lines;
  {
    std::istringstream in(clean);
    std::string l;
    while (std::getline(in, l)) lines.push_back(trim(l));
  }

  // pragma placement: pipeline/unroll/loop_flatten must sit directly inside a
  // loop header anywhere in the file
  std::string prev;
  for (const auto& l : lines) {
    if (l.rfind("#pragma HLS", 0) == 0) {
      bool needs_loop = l.find("pipeline") != std::string::npos ||
                        l.find("unroll") != std::string::npos ||
                        l.find("loop_flatten") != std::string::npos;
      if (needs_loop && prev.rfind("for", 0) != 0)
        findings.push_back(
            {"pragma-placement", "'" + l + "' does not follow a loop header"});
      continue;  // pragmas are otherwise transparent
    }
    if (!l.empty()) prev = l;
  }

  // locate the kernel function
  size_t start = lines.size();
  for (size_t i = 0; i < lines.size(); ++i)
    if (lines[i].rfind("void " + ir.name + "(", 0) == 0) start = i;
  if (start == lines.size()) {
    findings.push_back({"structure", "kernel function not found"});
    return findings;
  }

  struct LoopCtx {
    std::string var;
    std::int64_t bound;
  };
  struct Instance {
    std::string stmt;
    std::vector<LoopCtx> loops;
    std::map<std::string, Affine> env;
  };
  std::vector<LoopCtx> stack;
  std::map<std::string, Affine> env;
  std::vector<Instance> instances;
  int depth = 0;
  bool in_fn = false;

  auto match_stmt = [&](const std::string& lhs_base, const std::string& op,
                        const std::string& rhs) -> std::string {
    // written-array base: longest declared array that prefixes the buffer name
    auto base_of = [&](const std::string& n) -> std::string {
      std::string best;
      for (const auto& arr : ir.arrays)
        if ((n == arr.name || n.rfind(arr.name + "_", 0) == 0) &&
            arr.name.size() > best.size())
          best = arr.name;
      return best;
    };
    std::string warr = base_of(lhs_base);
    std::multiset<std::string> refs;
    for (const auto& id : identifiers(rhs, true)) {
      std::string b = base_of(id);
      if (!b.empty()) refs.insert(b);
    }
    for (const auto& s : ir.statements) {
      if (s.write().array != warr || s.assign_op != op) continue;
      std::multiset<std::string> want;
      std::function<void(const ExprNode&)> scan = [&](const ExprNode& e) {
        if (e.kind == ExprNode::ArrayRef) want.insert(e.array);
        if (e.lhs) scan(*e.lhs);
        if (e.rhs) scan(*e.rhs);
      };
      scan(*s.rhs);
      if (want == refs) return s.id;
    }
    return {};
  };

  for (size_t i = start; i < lines.size(); ++i) {
    const std::string& l = lines[i];
    if (l.empty() || l.rfind("#pragma", 0) == 0) continue;
    if (!in_fn) {
      if (l.find('{') != std::string::npos) {
        in_fn = true;
        depth = 1;
      }
      continue;
    }
    if (l == "}") {
      if (!stack.empty()) stack.pop_back();
      if (--depth == 0) break;
      continue;
    }
    if (l.rfind("for (", 0) == 0) {
      // for (v = 0; v < N; v++) {
      std::istringstream in(l.substr(5));
      std::string var, eq, zero, v2, lt;
      std::int64_t bound = -1;
      in >> var >> eq >> zero >> v2 >> lt >> bound;
      if (bound < 0) {
        findings.push_back({"structure", "unparsable loop header: " + l});
        return findings;
      }
      stack.push_back({var, bound});
      depth++;
      continue;
    }
    if (l.rfind("static ", 0) == 0 || l.rfind("int ", 0) == 0 ||
        l.rfind("float ", 0) == 0 || l.rfind("double ", 0) == 0 ||
        l.rfind("char ", 0) == 0 || l.rfind("short ", 0) == 0)
      continue;  // declarations (incl. tree-reduction temporaries)
    // assignment or call
    size_t eq = std::string::npos;
    std::string op;
    int br = 0;
    for (size_t k = 0; k < l.size(); ++k) {
      if (l[k] == '[') br++;
      if (l[k] == ']') br--;
      if (br == 0 && l[k] == '=' && (k == 0 || l[k - 1] != '=') &&
          (k + 1 >= l.size() || l[k + 1] != '=')) {
        if (k > 0 && (l[k - 1] == '+' || l[k - 1] == '-' || l[k - 1] == '*')) {
          eq = k - 1;
          op = l.substr(k - 1, 2);
        } else {
          eq = k;
          op = "=";
        }
        break;
      }
    }
    if (eq == std::string::npos) continue;  // transfer call
    std::string lhs = trim(l.substr(0, eq));
    std::string rhs = trim(l.substr(eq + op.size()));
    if (!rhs.empty() && rhs.back() == ';') rhs.pop_back();
    if (lhs.find('[') == std::string::npos) {
      Affine a;
      if (parse_affine(rhs, a)) env[lhs] = a;
      continue;
    }
    if (rhs.find("acc_") != std::string::npos)
      continue;  // write-back of a tree-reduction accumulator; coverage is
                 // counted at the temp-fill statement
    std::string base = trim(lhs.substr(0, lhs.find('[')));
    std::string sid;
    if (base.rfind("red_", 0) == 0)
      sid = base.substr(4);
    else
      sid = match_stmt(base, op, rhs);
    if (sid.empty()) {
      findings.push_back({"structure", "unmatched statement: " + l});
      continue;
    }
    instances.push_back({sid, stack, env});
  }

  // iteration-space coverage per original statement
  std::map<std::string, std::vector<std::uint8_t>> counts;
  std::map<std::string, std::int64_t> totals;
  for (const auto& s : ir.statements) {
    std::int64_t total = 1;
    for (const auto& lid : s.enclosing_loops) total *= ir.loop(lid).trip_count;
    totals[s.id] = total;
    if (total <= (std::int64_t(1) << 26))
      counts[s.id] = std::vector<std::uint8_t>(static_cast<size_t>(total), 0);
  }

  for (const auto& inst : instances) {
    const Statement* s = nullptr;
    for (const auto& st : ir.statements)
      if (st.id == inst.stmt) s = &st;
    if (!s) {
      findings.push_back({"structure", "unknown statement id " + inst.stmt});
      continue;
    }
    auto cit = counts.find(s->id);
    if (cit == counts.end()) continue;  // too large: coverage skipped
    std::vector<std::uint8_t>& bm = cit->second;
    // iterator expressions in terms of the loop variables
    std::vector<Affine> exprs;
    std::vector<std::int64_t> trips;
    for (const auto& lid : s->enclosing_loops) {
      const Loop& lp = ir.loop(lid);
      auto it = inst.env.find(lp.iterator);
      Affine a;
      if (it != inst.env.end()) {
        a = it->second;
      } else {
        a.coef[lp.iterator] = 1;  // iterator used directly as a loop var
      }
      exprs.push_back(a);
      trips.push_back(lp.trip_count);
    }
    std::vector<std::int64_t> val(inst.loops.size(), 0);
    std::function<void(size_t)> walk = [&](size_t d) {
      if (d == inst.loops.size()) {
        std::int64_t lin = 0;
        for (size_t k = 0; k < exprs.size(); ++k) {
          std::int64_t x = exprs[k].c;
          for (const auto& [vn, cf] : exprs[k].coef) {
            std::int64_t vv = 0;
            bool found = false;
            for (size_t q = 0; q < inst.loops.size(); ++q)
              if (inst.loops[q].var == vn) {
                vv = val[q];
                found = true;
              }
            if (!found) {
              findings.push_back(
                  {"coverage", "recovery uses unbound variable " + vn});
              return;
            }
            x += cf * vv;
          }
          if (x < 0 || x >= trips[k]) {
            findings.push_back({"coverage", "iterator out of range in " +
                                                inst.stmt});
            return;
          }
          lin = lin * trips[k] + x;
        }
        if (bm[static_cast<size_t>(lin)] < 255) bm[static_cast<size_t>(lin)]++;
        return;
      }
      for (std::int64_t x = 0; x < inst.loops[d].bound; ++x) {
        val[d] = x;
        walk(d + 1);
      }
    };
    walk(0);
    if (findings.size() > 20) break;  // enough evidence
  }

  for (const auto& [sid, bm] : counts) {
    std::int64_t missing = 0, dup = 0;
    for (auto c : bm) {
      if (c == 0) missing++;
      if (c > 1) dup++;
    }
    if (missing || dup)
      findings.push_back(
          {"coverage", sid + ": " + std::to_string(missing) + " missing, " +
                           std::to_string(dup) + " duplicated iterations of " +
                           std::to_string(totals[sid])});
  }
  return findings;
}

}  // namespace tileforge
