#include "tileforge/dependence.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace tileforge {

namespace {

std::vector<std::string> common_prefix(const std::vector<std::string>& a,
                                       const std::vector<std::string>& b) {
  std::vector<std::string> out;
  for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i] != b[i]) break;
    out.push_back(a[i]);
  }
  return out;
}

// Written subscripts reference the loop iterator?
bool written_subscripts_use(const Statement& s, const std::string& iter) {
  for (const auto& sub : s.write().subscripts)
    if (sub.coeffs.count(iter)) return true;
  return false;
}

struct PairResult {
  bool exists = false;
  std::vector<Distance> distance;
};

// Distance of the dependence from an instance of `a` (in stmt s) to a later
// instance of `b` (in stmt t) touching the same element. Components follow
// the order of `common` (outermost first). Contradictory subscript
// constraints mean no dependence; coupled or non-simple subscripts go to
// `star`.
PairResult pair_distance(const KernelIR& ir, const Statement& s,
                         const Statement& t, const AffineAccess& a,
                         const AffineAccess& b,
                         const std::vector<std::string>& common) {
  PairResult res;
  res.distance.assign(common.size(), Distance::unknown());
  res.exists = true;
  if (a.non_simple || b.non_simple) return res;  // all star

  std::map<std::string, std::int64_t> delta;  // iterator -> fixed distance
  std::set<std::string> starred;
  for (size_t d = 0; d < a.subscripts.size(); ++d) {
    const Subscript& sa = a.subscripts[d];
    const Subscript& sb = b.subscripts[d];
    std::string ia = sa.simple_iterator();
    std::string ib = sb.simple_iterator();
    if (ia.empty() && ib.empty()) {
      if (sa.constant != sb.constant) {
        res.exists = false;  // distinct constant elements
        return res;
      }
      continue;
    }
    if (ia != ib) {
      // coupled dimensions, e.g. A[i] vs A[j]
      if (!ia.empty()) starred.insert(ia);
      if (!ib.empty()) starred.insert(ib);
      continue;
    }
    std::int64_t d_val = sa.constant - sb.constant;
    auto it = delta.find(ia);
    if (it != delta.end() && it->second != d_val) {
      res.exists = false;  // contradictory constraints, no common element
      return res;
    }
    delta[ia] = d_val;
  }

  bool self_accum = (&s == &t) && s.is_accumulation;
  for (size_t i = 0; i < common.size(); ++i) {
    const std::string& iter = ir.loop(common[i]).iterator;
    if (starred.count(iter)) continue;  // stays star
    auto it = delta.find(iter);
    if (it != delta.end()) {
      res.distance[i] = Distance::known(it->second);
    } else if (self_accum && !written_subscripts_use(s, iter)) {
      // generating dependence of the accumulation
      res.distance[i] = Distance::known(1);
    }
    // otherwise an unconstrained loop: stays star
  }
  return res;
}

bool lex_negative(const std::vector<Distance>& v) {
  for (const auto& c : v) {
    if (c.star) return false;  // unknown, not known-negative
    if (c.value > 0) return false;
    if (c.value < 0) return true;
  }
  return false;
}

bool all_zero(const std::vector<Distance>& v) {
  for (const auto& c : v)
    if (c.star || c.value != 0) return false;
  return true;
}

int carried_level_of(const std::vector<Distance>& v) {
  for (size_t i = 0; i < v.size(); ++i)
    if (v[i].star || v[i].value != 0) return static_cast<int>(i);
  return -1;
}

DepKind kind_of(AccessMode src, AccessMode dst) {
  if (src == AccessMode::Write)
    return dst == AccessMode::Read ? DepKind::Flow : DepKind::Output;
  return dst == AccessMode::Write ? DepKind::Anti : DepKind::Input;
}

}  // namespace

std::vector<Dependence> compute_dependences(const KernelIR& ir) {
  std::vector<Dependence> out;
  for (size_t is = 0; is < ir.statements.size(); ++is) {
    for (size_t it = is; it < ir.statements.size(); ++it) {
      const Statement& s = ir.statements[is];
      const Statement& t = ir.statements[it];
      auto common = common_prefix(s.enclosing_loops, t.enclosing_loops);
      for (size_t ia = 0; ia < s.accesses.size(); ++ia) {
        size_t ib_start = (is == it) ? ia + 1 : 0;
        for (size_t ib = ib_start; ib < t.accesses.size(); ++ib) {
          const AffineAccess& a = s.accesses[ia];
          const AffineAccess& b = t.accesses[ib];
          if (a.array != b.array) continue;
          bool any_write =
              a.mode == AccessMode::Write || b.mode == AccessMode::Write;
          if (is == it && !any_write) continue;  // self input deps are noise
          PairResult pr = pair_distance(ir, s, t, a, b, common);
          if (!pr.exists) continue;
          if (is == it && all_zero(pr.distance)) continue;  // same instance

          Dependence dep;
          dep.array = a.array;
          dep.common_loops = common;
          if (lex_negative(pr.distance)) {
            // real direction is t -> s
            dep.src_stmt = t.id;
            dep.dst_stmt = s.id;
            dep.distance = pr.distance;
            for (auto& c : dep.distance)
              if (!c.star) c.value = -c.value;
            dep.kind = kind_of(b.mode, a.mode);
          } else {
            dep.src_stmt = s.id;
            dep.dst_stmt = t.id;
            dep.distance = pr.distance;
            dep.kind = kind_of(a.mode, b.mode);
          }
          dep.carried_level = carried_level_of(dep.distance);
          out.push_back(std::move(dep));
        }
      }
    }
  }
  // deterministic order and dedupe
  auto key = [](const Dependence& d) {
    std::string dist;
    for (const auto& c : d.distance)
      dist += c.star ? "*" : std::to_string(c.value), dist += ",";
    return std::tuple(d.src_stmt, d.dst_stmt, d.array, static_cast<int>(d.kind),
                      dist);
  };
  std::stable_sort(out.begin(), out.end(),
                   [&](const Dependence& x, const Dependence& y) {
                     return key(x) < key(y);
                   });
  out.erase(std::unique(out.begin(), out.end(),
                        [&](const Dependence& x, const Dependence& y) {
                          return key(x) == key(y);
                        }),
            out.end());
  return out;
}

ReductionInfo reduction_loops(const KernelIR& ir,
                              const std::vector<Dependence>& deps) {
  (void)deps;  // the accumulation flag already encodes the carried self-dep
  ReductionInfo info;
  for (const auto& s : ir.statements) {
    std::vector<std::string> red;
    if (s.is_accumulation) {
      for (const auto& lid : s.enclosing_loops)
        if (!written_subscripts_use(s, ir.loop(lid).iterator))
          red.push_back(lid);
    }
    info.loops[s.id] = std::move(red);
  }
  return info;
}

bool distribution_legal(const KernelIR& ir, const std::vector<Dependence>& deps,
                        const std::string& stmt_a, const std::string& stmt_b) {
  (void)ir;
  for (const auto& d : deps) {
    if (d.kind == DepKind::Input) continue;
    bool between = (d.src_stmt == stmt_a && d.dst_stmt == stmt_b) ||
                   (d.src_stmt == stmt_b && d.dst_stmt == stmt_a);
    if (!between) continue;
    if (d.src_stmt == stmt_b && d.dst_stmt == stmt_a) return false;
    // star on a shared loop leaves the direction unknown
    for (const auto& c : d.distance)
      if (c.star) return false;
  }
  return true;
}

bool permutation_legal(const KernelIR& ir, const std::vector<Dependence>& deps,
                       const std::string& stmt,
                       const std::vector<std::string>& perm) {
  const Statement& s = ir.statement(stmt);
  if (perm == s.enclosing_loops) return true;  // original order
  for (const auto& d : deps) {
    if (d.kind == DepKind::Input) continue;
    if (d.src_stmt != stmt && d.dst_stmt != stmt) continue;
    // component per loop id
    std::map<std::string, Distance> comp;
    for (size_t i = 0; i < d.common_loops.size(); ++i) {
      if (d.distance[i].star) return false;  // conservative fallback
      comp[d.common_loops[i]] = d.distance[i];
    }
    for (const auto& lid : perm) {
      auto it = comp.find(lid);
      std::int64_t v = it == comp.end() ? 0 : it->second.value;
      if (v > 0) break;
      if (v < 0) return false;
    }
  }
  return true;
}

bool band_fully_permutable(const KernelIR& ir,
                           const std::vector<Dependence>& deps,
                           const std::string& stmt) {
  (void)ir;
  for (const auto& d : deps) {
    if (d.kind == DepKind::Input) continue;
    if (d.src_stmt != stmt && d.dst_stmt != stmt) continue;
    for (const auto& c : d.distance)
      if (c.star || c.value < 0) return false;
  }
  return true;
}

}  // namespace tileforge
