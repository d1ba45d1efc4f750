#include "tileforge/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace tileforge {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return (a + b - 1) / b;
}

std::int64_t ceil_log2(std::int64_t n) {
  std::int64_t d = 0, v = 1;
  while (v < n) v *= 2, d++;
  return d;
}

const LoopAssign& la(const Assignment& a, const std::string& loop) {
  return a.loops.at(loop);
}

// Op census with one instance of the reduction operator removed; the combine
// op is priced by IL_red, everything else by IL_par.
std::map<OpKind, std::int64_t> non_reduction_ops(const DesignSpace& space,
                                                 const Statement& s) {
  std::map<OpKind, std::int64_t> ops = s.ops;
  auto it = space.reductions.loops.find(s.id);
  bool reduces = s.is_accumulation && it != space.reductions.loops.end() &&
                 !it->second.empty();
  if (reduces) {
    auto o = ops.find(s.accumulation_op);
    if (o != ops.end() && --o->second == 0) ops.erase(o);
  }
  return ops;
}

std::int64_t il_par_of(const DesignSpace& space, const PlatformConfig& cfg,
                       const Statement& s) {
  std::int64_t best = 0;
  for (const auto& [op, n] : non_reduction_ops(space, s))
    if (n > 0) best = std::max(best, cfg.il_par.at(op));
  return best;
}

std::int64_t u_red(const DesignSpace& space, const Assignment& a,
                   const std::string& stmt) {
  std::int64_t u = 1;
  auto it = space.reductions.loops.find(stmt);
  if (it != space.reductions.loops.end())
    for (const auto& l : it->second) u *= la(a, l).tc.t2;
  return u;
}

std::int64_t d_red(const DesignSpace& space, const PlatformConfig& cfg,
                   const Assignment& a, const Statement& s) {
  std::int64_t u = u_red(space, a, s.id);
  if (u <= 1) return 0;
  std::int64_t il = cfg.il_red.at(s.accumulation_op);
  return cfg.tree_reduction ? il * ceil_log2(u) : il * (u - 1);
}

// Loops indexing dimension d of the array, across the whole kernel.
std::vector<std::string> indexing_loops(const DesignSpace& space,
                                        const std::string& array, size_t d) {
  std::set<std::string> out;
  for (const auto& s : space.ir.statements)
    for (const auto& acc : s.accesses) {
      if (acc.array != array || d >= acc.subscripts.size()) continue;
      for (const auto& [it, c] : acc.subscripts[d].coeffs)
        for (const auto& lid : s.enclosing_loops)
          if (space.ir.loop(lid).iterator == it) out.insert(lid);
    }
  return {out.begin(), out.end()};
}

struct Transfer {
  std::string owner_stmt;  // first statement of the dedupe group
  int nest = 0;
  std::string array;
  int position = kBeforeNest;
  std::int64_t footprint = 0;   // elements
  std::int64_t trip = 1;        // level-0 iterations enclosing the point
  bool written = false;
  bool load_elided = false;
};

std::vector<std::int64_t> t0_of(const Assignment& a, const NestSpace& nest) {
  std::vector<std::int64_t> t0;
  for (const auto& l : nest.band) t0.push_back(la(a, l).tc.t0);
  return t0;
}

// Deduped transfer list: statements of one nest caching the same array at the
// same position share a buffer and a transfer.
std::vector<Transfer> transfers(const DesignSpace& space, const Assignment& a) {
  std::vector<Transfer> out;
  for (size_t ni = 0; ni < space.nests.size(); ++ni) {
    const NestSpace& nest = space.nests[ni];
    const auto& perm = a.perm[ni];
    auto t0 = t0_of(a, nest);
    std::set<std::pair<std::string, int>> seen;  // (array, position)
    for (const auto& sid : nest.stmts) {
      const Statement& s = space.ir.statement(sid);
      for (const auto& [key, dom] : nest.cache) {
        if (key.first != sid) continue;
        auto sel = a.cache.find(key);
        if (sel == a.cache.end()) continue;
        int pos = sel->second;
        if (!seen.insert({key.second, pos}).second) {
          // shared buffer; mark written if this statement writes it too
          for (auto& t : out)
            if (t.nest == static_cast<int>(ni) && t.array == key.second &&
                t.position == pos)
              t.written |= s.write().array == key.second;
          continue;
        }
        Transfer t;
        t.owner_stmt = sid;
        t.nest = static_cast<int>(ni);
        t.array = key.second;
        t.position = pos;
        t.footprint = footprint_elements(space, nest, key.second, pos, perm, t0);
        for (int k = 0; k <= pos && k < static_cast<int>(perm.size()); ++k)
          t.trip *= t0[static_cast<size_t>(perm[static_cast<size_t>(k)])];
        t.written = s.write().array == key.second;
        out.push_back(t);
      }
    }
  }
  // a consumer whose producer left the array on chip skips its load
  for (const auto& r : space.residents) {
    auto prod = a.cache.find({r.producer_stmt, r.array});
    auto cons = a.cache.find({r.consumer_stmt, r.array});
    if (prod == a.cache.end() || cons == a.cache.end()) continue;
    if (prod->second != kBeforeNest || cons->second != kBeforeNest) continue;
    for (auto& t : out)
      if (t.array == r.array && t.position == kBeforeNest &&
          t.owner_stmt == r.consumer_stmt)
        t.load_elided = true;
  }
  return out;
}

void push(std::vector<Violation>& v, std::string tag, std::string msg,
          std::int64_t observed, std::int64_t bound, std::string stmt = "",
          std::string loop = "", std::string array = "") {
  v.push_back({std::move(tag), std::move(stmt), std::move(loop),
               std::move(array), std::move(msg), observed, bound});
}

}  // namespace

std::map<std::string, std::vector<std::int64_t>> derive_partitioning(
    const DesignSpace& space, const Assignment& a) {
  std::map<std::string, std::vector<std::int64_t>> ap;
  for (const auto& arr : space.ir.arrays) {
    std::vector<std::int64_t> dims;
    for (size_t d = 0; d < arr.dims.size(); ++d) {
      std::int64_t f = 1;
      for (const auto& l : indexing_loops(space, arr.name, d))
        f = std::lcm(f, la(a, l).tc.t2);
      dims.push_back(f);
    }
    ap[arr.name] = dims;
  }
  return ap;
}

std::vector<Violation> check_trip_counts(const DesignSpace& space,
                                         const Assignment& a) {
  std::vector<Violation> v;
  for (const auto& l : space.ir.loops) {
    const auto& t = la(a, l.id).tc;
    if (t.t0 < 1 || t.t1 < 1 || t.t2 < 1 || t.t0 * t.t1 * t.t2 != l.trip_count)
      push(v, "E1", "factor triple does not multiply to the trip count",
           t.t0 * t.t1 * t.t2, l.trip_count, "", l.id);
  }
  return v;
}

std::vector<Violation> check_pipeline(const DesignSpace& space,
                                      const Assignment& a) {
  std::vector<Violation> v;
  for (const auto& s : space.ir.statements) {
    std::int64_t flags = 0;
    for (const auto& l : s.enclosing_loops) {
      const LoopAssign& x = la(a, l);
      flags += x.pip ? 1 : 0;
      if (!x.pip && x.tc.t1 != 1)
        push(v, "E3", "non-pipelined loop with level-1 trip count > 1",
             x.tc.t1, 1, s.id, l);
    }
    if (flags > 1)
      push(v, "E4", "more than one pipelined loop in the body", flags, 1, s.id);
  }
  return v;
}

std::vector<Violation> check_coarse_unroll(const DesignSpace& space,
                                           const Assignment& a) {
  std::vector<Violation> v;
  for (const auto& s : space.ir.statements) {
    const NestSpace& nest = space.nest_of(s.id);
    auto red = space.reductions.loops.find(s.id);
    for (const auto& l : s.enclosing_loops) {
      const LoopAssign& x = la(a, l);
      bool is_red = red != space.reductions.loops.end() &&
                    std::count(red->second.begin(), red->second.end(), l);
      if (is_red && x.uf != 1)
        push(v, "E6", "coarse unroll on a reduction loop", x.uf, 1, s.id, l);
      if (x.uf < 1 || x.tc.t0 % x.uf != 0)
        push(v, "E7", "unroll factor does not divide the level-0 trip count",
             x.uf, x.tc.t0, s.id, l);
      if (x.uf > x.tc.t0)
        push(v, "E8", "unroll factor exceeds the level-0 trip count", x.uf,
             x.tc.t0, s.id, l);
      if (nest.singleton && x.uf != 1)
        push(v, "E9", "coarse unroll on a single-statement body", x.uf, 1,
             s.id, l);
    }
  }
  return v;
}

std::int64_t memory_bytes_used(const DesignSpace& space, const Assignment& a) {
  std::int64_t bytes = 0;
  for (const auto& t : transfers(space, a)) {
    const Array* arr = space.ir.find_array(t.array);
    bytes += t.footprint * arr->element_bits / 8;
  }
  // resident arrays share one buffer across producer and consumer nests
  for (const auto& r : space.residents) {
    auto prod = a.cache.find({r.producer_stmt, r.array});
    auto cons = a.cache.find({r.consumer_stmt, r.array});
    if (prod == a.cache.end() || cons == a.cache.end()) continue;
    if (prod->second != kBeforeNest || cons->second != kBeforeNest) continue;
    const Array* arr = space.ir.find_array(r.array);
    std::int64_t full = arr->element_bits / 8;
    for (auto d : arr->dims) full *= d;
    bytes -= full;
  }
  return bytes;
}

std::vector<Violation> check_caching(const DesignSpace& space,
                                     const PlatformConfig& cfg,
                                     const Assignment& a) {
  std::vector<Violation> v;
  for (const auto& nest : space.nests)
    for (const auto& [key, dom] : nest.cache) {
      auto sel = a.cache.find(key);
      if (sel == a.cache.end()) {
        push(v, "E11", "no cache point selected", 0, 1, key.first, "",
             key.second);
        continue;
      }
      int pos = sel->second;
      bool in_domain = pos == kBeforeNest ||
                       (!dom.before_nest_only && pos >= 0 &&
                        pos < dom.num_slots);
      if (!in_domain)
        push(v, "E10", "cache point outside the domain", pos, dom.num_slots,
             key.first, "", key.second);
    }
  std::int64_t used = memory_bytes_used(space, a);
  if (used > cfg.mem_bytes)
    push(v, "E12", "on-chip footprint exceeds capacity", used, cfg.mem_bytes);
  return v;
}

std::vector<Violation> check_partitioning(const DesignSpace& space,
                                          const PlatformConfig& cfg,
                                          const Assignment& a) {
  std::vector<Violation> v;
  const auto ap = a.ap.empty() ? derive_partitioning(space, a) : a.ap;
  for (const auto& arr : space.ir.arrays) {
    const auto& dims = ap.at(arr.name);
    std::int64_t product = 1;
    for (size_t d = 0; d < dims.size(); ++d) {
      product *= dims[d];
      for (const auto& l : indexing_loops(space, arr.name, d)) {
        std::int64_t t2 = la(a, l).tc.t2;
        if (dims[d] < t2)
          push(v, "E13", "partition factor below the level-2 trip count",
               dims[d], t2, "", l, arr.name);
        else if (dims[d] % t2 != 0)
          push(v, "E14", "partition factor not a multiple of the level-2 trip",
               dims[d], t2, "", l, arr.name);
      }
    }
    if (product > cfg.max_part)
      push(v, "E15", "total partition factor exceeds max_part", product,
           cfg.max_part, "", "", arr.name);
  }
  return v;
}

std::int64_t initiation_interval(const DesignSpace& space,
                                 const PlatformConfig& cfg, const Assignment& a,
                                 const std::string& stmt) {
  const Statement& s = space.ir.statement(stmt);
  std::string pip;
  for (const auto& l : s.enclosing_loops)
    if (la(a, l).pip) pip = l;
  if (pip.empty()) return 0;

  auto red = space.reductions.loops.find(stmt);
  bool is_red = red != space.reductions.loops.end() &&
                std::count(red->second.begin(), red->second.end(), pip);
  if (is_red) {
    std::int64_t il = cfg.il_red.at(s.accumulation_op);
    std::int64_t u = u_red(space, a, stmt);
    return cfg.tree_reduction ? il * ceil_log2(std::max<std::int64_t>(2, u))
                              : il * u;
  }

  // non-reduction: a flow recurrence carried by the pipelined loop forces
  // II >= ceil(chain latency / distance)
  std::int64_t chain = std::max<std::int64_t>(1, il_par_of(space, cfg, s));
  std::int64_t ii = 1;
  for (const auto& d : space.deps) {
    if (d.src_stmt != stmt || d.dst_stmt != stmt || d.kind != DepKind::Flow)
      continue;
    for (size_t k = 0; k < d.common_loops.size(); ++k) {
      if (d.common_loops[k] != pip) continue;
      if (d.distance[k].star)
        ii = std::max(ii, chain);
      else if (d.distance[k].value > 0)
        ii = std::max(ii, ceil_div(chain, d.distance[k].value));
    }
  }
  return ii;
}

DspUsage dsp_usage(const DesignSpace& space, const PlatformConfig& cfg,
                   const Assignment& a) {
  DspUsage u;
  std::map<OpKind, std::int64_t> op_max, op_sum;
  for (const auto& s : space.ir.statements) {
    std::int64_t par = 1;
    for (const auto& l : s.enclosing_loops) {
      par *= la(a, l).tc.t2;
      par *= la(a, l).uf;
    }
    std::int64_t ii = std::max<std::int64_t>(
        1, initiation_interval(space, cfg, a, s.id));
    for (const auto& [op, n] : s.ops) {
      std::int64_t cost = cfg.dsp_cost.at(op);
      std::int64_t d = ceil_div(cost * n * par, ii);
      u.per_stmt_op[{s.id, op}] = d;
      op_max[op] = std::max(op_max[op], d);
      op_sum[op] += d;
    }
  }
  for (const auto& [op, m] : op_max) u.optimistic += m;
  for (const auto& [op, m] : op_sum) u.pessimistic += m;
  return u;
}

std::vector<Violation> check_dsp(const DesignSpace& space,
                                 const PlatformConfig& cfg,
                                 const Assignment& a) {
  std::vector<Violation> v;
  DspUsage u = dsp_usage(space, cfg, a);
  std::int64_t active = cfg.reuse_opt ? u.optimistic : u.pessimistic;
  if (active > cfg.dsp_available)
    push(v, cfg.reuse_opt ? "E18" : "E19", "DSP demand exceeds the device",
         active, cfg.dsp_available);
  return v;
}

std::vector<Violation> check_all(const DesignSpace& space,
                                 const PlatformConfig& cfg,
                                 const Assignment& a) {
  std::vector<Violation> v = check_trip_counts(space, a);
  auto append = [&v](std::vector<Violation> w) {
    v.insert(v.end(), w.begin(), w.end());
  };
  append(check_pipeline(space, a));
  append(check_coarse_unroll(space, a));
  append(check_caching(space, cfg, a));
  append(check_partitioning(space, cfg, a));
  append(check_dsp(space, cfg, a));
  return v;
}

namespace {

LatencyBreakdown::PerStmt stmt_latency(const DesignSpace& space,
                                       const PlatformConfig& cfg,
                                       const Assignment& a, const Statement& s,
                                       const std::vector<Transfer>& ts) {
  LatencyBreakdown::PerStmt p;
  p.ii = initiation_interval(space, cfg, a, s.id);

  std::int64_t lat2 = il_par_of(space, cfg, s) + d_red(space, cfg, a, s);
  p.lat2 = std::max<std::int64_t>(1, lat2);

  std::string pip;
  for (const auto& l : s.enclosing_loops)
    if (la(a, l).pip) pip = l;
  if (!pip.empty()) {
    p.lat1 = p.lat2 + p.ii * (la(a, pip).tc.t1 - 1);
  } else {
    p.lat1 = p.lat2;
    for (const auto& l : s.enclosing_loops) p.lat1 *= la(a, l).tc.t1;
  }

  p.lat0 = p.lat1;
  for (const auto& l : s.enclosing_loops)
    p.lat0 *= la(a, l).tc.t0 / la(a, l).uf;

  for (const auto& t : ts) {
    if (t.owner_stmt != s.id) continue;
    const Array* arr = space.ir.find_array(t.array);
    std::int64_t burst = space.burst_bits.at(t.array);
    std::int64_t per_pass = ceil_div(t.footprint * arr->element_bits, burst);
    std::int64_t passes = (t.load_elided ? 0 : 1) + (t.written ? 1 : 0);
    p.lat_mem += per_pass * t.trip * passes;
  }

  p.lat_total = p.lat0 + p.lat_mem;
  return p;
}

}  // namespace

LatencyBreakdown latency(const DesignSpace& space, const PlatformConfig& cfg,
                         const Assignment& a) {
  LatencyBreakdown out;
  auto ts = transfers(space, a);
  for (const auto& s : space.ir.statements) {
    out.stmts[s.id] = stmt_latency(space, cfg, a, s, ts);
    out.objective += out.stmts[s.id].lat_total;
  }
  return out;
}

std::int64_t stmt_compute_latency(const DesignSpace& space,
                                  const PlatformConfig& cfg,
                                  const Assignment& a,
                                  const std::string& stmt) {
  static const std::vector<Transfer> none;
  return stmt_latency(space, cfg, a, space.ir.statement(stmt), none).lat0;
}

std::int64_t nest_objective(const DesignSpace& space, const PlatformConfig& cfg,
                            const Assignment& a, int nest_index) {
  auto ts = transfers(space, a);
  std::int64_t total = 0;
  for (const auto& sid : space.nests[static_cast<size_t>(nest_index)].stmts)
    total += stmt_latency(space, cfg, a, space.ir.statement(sid), ts).lat_total;
  return total;
}

}  // namespace tileforge
