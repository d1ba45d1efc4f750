#include "tileforge/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#ifdef TILEFORGE_HAVE_OPENMP
#include <omp.h>
#endif

namespace tileforge {

namespace {

using Clock = std::chrono::steady_clock;
using Key = std::vector<std::int64_t>;

constexpr int kNumOps = 4;  // OpKind cardinality

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) out.push_back(part);
  return out;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return (a + b - 1) / b;
}

struct CacheVar {
  std::pair<std::string, std::string> key;  // (stmt, array)
  std::vector<int> domain;                  // kBeforeNest and/or slot indices
};

// Per-nest variable domains after pin application, in branching order.
struct NestPlan {
  std::vector<int> perm_domain;  // indices into nest.perms
  std::vector<int> pip_domain;   // 0 = none, k = band[k-1] pipelined
  std::vector<std::vector<int>> triple_domain;        // per loop
  std::vector<std::optional<std::int64_t>> uf_pin;    // per loop
  std::vector<bool> uf_free;  // divisors of t0 allowed (else fixed to 1)
  std::vector<CacheVar> caches;
};

// Precomputed geometry for fast transfer costing during the search. Mirrors
// footprint_elements/memory_bytes_used semantics exactly; the leaf re-checks
// with the cost model proper.
struct ArrInfo {
  std::string name;
  std::int64_t elem_bits = 0, burst = 0;
  std::vector<std::int64_t> extent;  // per dim
  std::vector<int> band;             // per dim: unique indexing loop slot, -1
};

struct NestEval {
  std::vector<ArrInfo> arrays;
  struct CV {
    int arr = 0;
    bool written = false;
    std::string producer;  // earlier statement that can leave it resident
  };
  std::vector<CV> cvs;  // aligned with NestPlan::caches
  struct Pair {  // resident pair whose consumer sits in this nest
    std::pair<std::string, std::string> prod, cons;  // cache keys
    std::int64_t full_bytes = 0;
  };
  std::vector<Pair> pairs;
  std::vector<std::int64_t> band_trip;  // trip count per band loop
  // partitioned array dimensions this nest indexes: (global dim id, band
  // loops of this nest indexing it), sorted by global id
  std::vector<std::pair<int, std::vector<int>>> dims;
  std::int64_t mem_floor = 0;
  std::int64_t compute_floor = 0;
  std::int64_t min_bytes = 0;
};

// Everything about one (pipeline, factor-triple) choice of a nest that is
// independent of unroll factors and of the other nests; computed once from
// the cost model and cached, since the same nest configurations recur under
// every completion of the preceding nests.
struct MemoEntry {
  std::int64_t lat1_sum = 0;    // sum over statements of lat1
  std::int64_t t0prod = 1;      // product of t0 over the band
  std::int64_t max_ufprod = 1;  // product of t0 over uf-free loops
  struct DspTerm {
    int op;
    std::int64_t base;  // dsp_cost * op count * product of t2
    std::int64_t ii;    // max(II, 1); DSPs = ceil(base * ufprod / ii)
  };
  std::vector<DspTerm> dsp;
  std::vector<std::int64_t> part;  // lcm of t2 per NestEval::dims entry
};

struct Ctx {
  const DesignSpace& space;
  const PlatformConfig& cfg;
  Ctx(const DesignSpace& s, const PlatformConfig& c) : space(s), cfg(c) {}

  std::vector<NestPlan> plans;
  std::vector<NestEval> evals;
  std::vector<std::int64_t> floor_suffix;    // admissible bound for nests i..
  std::vector<std::int64_t> min_mem_suffix;  // bytes nests i.. must keep
  std::map<std::string, int> stmt_nest;
  size_t num_dims = 0;          // partitioned (array, dimension) slots
  std::vector<int> dim_array;   // owning array id per slot, grouped
  std::vector<std::unordered_map<std::uint64_t, MemoEntry>> memo;
  std::mutex memo_m;
  Clock::time_point deadline;
  bool ignore_deadline = false;
  // presolve mode: optimize nests lo..hi-1 in isolation, recording the best
  // objective without the global leaf re-check
  size_t lo = 0, hi = 0;
  bool presolve = false;
  std::int64_t mem_limit = 0;

  std::atomic<std::int64_t> best_obj{kInfeasibleBound};
  std::atomic<bool> has_best{false};
  std::atomic<bool> timed_out{false};
  std::atomic<std::int64_t> nodes{0};
  std::mutex m;
  Assignment best;
  LatencyBreakdown best_lb;
  Key best_key;
};

int band_pos_of_iter(const DesignSpace& space, const NestSpace& nest,
                     const std::string& iter) {
  for (size_t i = 0; i < nest.band.size(); ++i)
    if (space.ir.loop(nest.band[i]).iterator == iter)
      return static_cast<int>(i);
  return -1;
}

// ---- pins ------------------------------------------------------------------

struct ParsedPins {
  std::map<int, std::vector<std::string>> perm;  // iterator order
  std::map<int, int> pip;                        // 0 = none, k = band[k-1]
  std::map<std::string, FactorTriple> tc;        // loop id ->
  std::map<std::string, std::int64_t> uf;        // loop id ->
  std::map<std::pair<std::string, std::string>, int> cache;
};

ParsedPins parse_pins(const DesignSpace& space, const std::vector<Pin>& pins) {
  ParsedPins out;
  for (const auto& p : pins) {
    auto parts = split(p.path, '.');
    auto bad = [&](const std::string& why) {
      return std::invalid_argument("pin '" + p.path + "': " + why);
    };
    if (parts.size() < 2) throw bad("expected <kind>.<stmt>[...]");
    const std::string& kind = parts[0];
    const std::string& stmt = parts[1];
    int ni = -1;
    try {
      ni = space.nest_index_of(stmt);
    } catch (const std::out_of_range&) {
      throw bad("unknown statement " + stmt);
    }
    const NestSpace& nest = space.nests[static_cast<size_t>(ni)];

    auto loop_of = [&](const std::string& iter) {
      int pos = band_pos_of_iter(space, nest, iter);
      if (pos < 0) throw bad("iterator " + iter + " not in the band");
      return nest.band[static_cast<size_t>(pos)];
    };

    if (kind == "perm" && parts.size() == 2) {
      out.perm[ni] = split(p.value, ',');
    } else if (kind == "pip" && parts.size() == 2) {
      if (p.value == "none")
        out.pip[ni] = 0;
      else {
        int pos = band_pos_of_iter(space, nest, p.value);
        if (pos < 0) throw bad("unknown iterator " + p.value);
        out.pip[ni] = pos + 1;
      }
    } else if (kind == "tc" && parts.size() == 3) {
      auto v = split(p.value, ',');
      if (v.size() != 3) throw bad("expected t0,t1,t2");
      out.tc[loop_of(parts[2])] = {std::stoll(v[0]), std::stoll(v[1]),
                                   std::stoll(v[2])};
    } else if (kind == "uf" && parts.size() == 3) {
      out.uf[loop_of(parts[2])] = std::stoll(p.value);
    } else if (kind == "cache" && parts.size() == 3) {
      out.cache[{stmt, parts[2]}] =
          p.value == "before" ? kBeforeNest : std::stoi(p.value);
    } else {
      throw bad("unknown pin kind");
    }
  }
  return out;
}

// ---- plan construction -----------------------------------------------------

std::vector<NestPlan> build_plans(const DesignSpace& space,
                                  const ParsedPins& pins) {
  std::vector<NestPlan> plans;
  for (size_t ni = 0; ni < space.nests.size(); ++ni) {
    const NestSpace& nest = space.nests[ni];
    NestPlan plan;

    auto pp = pins.perm.find(static_cast<int>(ni));
    for (size_t pi = 0; pi < nest.perms.size(); ++pi) {
      if (pp != pins.perm.end()) {
        std::vector<std::string> iters;
        for (int b : nest.perms[pi])
          iters.push_back(
              space.ir.loop(nest.band[static_cast<size_t>(b)]).iterator);
        if (iters != pp->second) continue;
      }
      plan.perm_domain.push_back(static_cast<int>(pi));
    }
    if (plan.perm_domain.empty())
      throw InfeasibleError("pinned permutation outside the legal domain");

    auto pc = pins.pip.find(static_cast<int>(ni));
    for (int c = 0; c <= static_cast<int>(nest.band.size()); ++c) {
      if (pc != pins.pip.end() && pc->second != c) continue;
      plan.pip_domain.push_back(c);
    }

    for (const auto& lid : nest.band) {
      const auto& dom = space.triples.at(lid);
      std::vector<int> idx;
      auto pt = pins.tc.find(lid);
      for (size_t t = 0; t < dom.size(); ++t) {
        if (pt != pins.tc.end() && !(dom[t] == pt->second)) continue;
        idx.push_back(static_cast<int>(t));
      }
      if (idx.empty())
        throw InfeasibleError("pinned factor triple for " + lid +
                              " outside the domain");
      plan.triple_domain.push_back(idx);

      auto pu = pins.uf.find(lid);
      plan.uf_pin.push_back(pu == pins.uf.end()
                                ? std::nullopt
                                : std::optional<std::int64_t>(pu->second));
      bool red = std::count(nest.reduction_loops.begin(),
                            nest.reduction_loops.end(), lid) > 0;
      plan.uf_free.push_back(!red && !nest.singleton);
    }

    // statement order first so buffer-sharing ownership matches the cost
    // model's transfer dedupe
    for (const auto& sid : nest.stmts)
    for (const auto& [key, dom] : nest.cache) {
      if (key.first != sid) continue;
      CacheVar cv;
      cv.key = key;
      auto pk = pins.cache.find(key);
      auto admit = [&](int pos) {
        if (pk != pins.cache.end() && pk->second != pos) return;
        cv.domain.push_back(pos);
      };
      admit(kBeforeNest);
      if (!dom.before_nest_only)
        for (int s = 0; s < dom.num_slots; ++s) admit(s);
      if (cv.domain.empty())
        throw InfeasibleError("pinned cache point for " + key.first + "/" +
                              key.second + " outside the domain");
      plan.caches.push_back(std::move(cv));
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

// ---- precomputed evaluation tables -----------------------------------------

std::int64_t array_bits(const Array& a) {
  std::int64_t bits = a.element_bits;
  for (auto d : a.dims) bits *= d;
  return bits;
}

std::int64_t compute_floor(const DesignSpace& space, const PlatformConfig& cfg,
                           const Statement& s) {
  std::int64_t d = 0;
  for (const auto& [op, n] : s.ops) d += cfg.dsp_cost.at(op) * n;
  if (d == 0) return 1;
  if (cfg.dsp_available == 0) return kInfeasibleBound;
  std::int64_t tc = 1;
  for (const auto& l : s.enclosing_loops) tc *= space.ir.loop(l).trip_count;
  // parallelism is DSP-bounded; the /4 absorbs pipeline fill slop
  return std::max<std::int64_t>(1, tc * d / (4 * cfg.dsp_available));
}

NestEval build_eval(const DesignSpace& space, const PlatformConfig& cfg,
                    size_t ni, const NestPlan& plan) {
  const NestSpace& nest = space.nests[ni];
  NestEval ev;
  for (const auto& lid : nest.band)
    ev.band_trip.push_back(space.ir.loop(lid).trip_count);
  std::map<std::string, int> arr_index;
  for (const auto& cv : plan.caches) {
    const std::string& name = cv.key.second;
    if (!arr_index.count(name)) {
      const Array* arr = space.ir.find_array(name);
      ArrInfo info;
      info.name = name;
      info.elem_bits = arr->element_bits;
      info.burst = space.burst_bits.at(name);
      for (size_t d = 0; d < arr->dims.size(); ++d) {
        info.extent.push_back(arr->dims[d]);
        // the dimension tiles along a band loop only when exactly one
        // iterator indexes it (mirrors footprint_elements)
        std::set<std::string> iters;
        for (const auto& sid : nest.stmts)
          for (const auto& acc : space.ir.statement(sid).accesses)
            if (acc.array == name && d < acc.subscripts.size())
              for (const auto& [it, c] : acc.subscripts[d].coeffs)
                iters.insert(it);
        int slot = -1;
        if (iters.size() == 1)
          slot = band_pos_of_iter(space, nest, *iters.begin());
        info.band.push_back(slot);
      }
      arr_index[name] = static_cast<int>(ev.arrays.size());
      ev.arrays.push_back(std::move(info));
    }
    NestEval::CV c;
    c.arr = arr_index[name];
    c.written = space.ir.statement(cv.key.first).write().array == name;
    for (const auto& r : space.residents)
      if (r.array == name && r.consumer_stmt == cv.key.first)
        c.producer = r.producer_stmt;
    ev.cvs.push_back(std::move(c));
  }

  // one full transfer per array is unavoidable (unless resident), plus the
  // write-back pass for written arrays
  for (size_t ai = 0; ai < ev.arrays.size(); ++ai) {
    const ArrInfo& info = ev.arrays[ai];
    bool written = false, elidable = false;
    for (size_t ci = 0; ci < ev.cvs.size(); ++ci) {
      if (ev.cvs[ci].arr != static_cast<int>(ai)) continue;
      written |= ev.cvs[ci].written;
      elidable |= !ev.cvs[ci].producer.empty();
    }
    std::int64_t full_bits = info.elem_bits;
    for (auto e : info.extent) full_bits *= e;
    std::int64_t passes = (elidable ? 0 : 1) + (written ? 1 : 0);
    ev.mem_floor += full_bits / info.burst * passes;
    if (!elidable) {
      bool pinned_full = false;
      for (const auto& [key, dom] : nest.cache)
        if (key.second == info.name && dom.before_nest_only) pinned_full = true;
      ev.min_bytes += pinned_full ? full_bits / 8 : info.elem_bits / 8;
    }
  }
  for (const auto& r : space.residents) {
    if (!std::count(nest.stmts.begin(), nest.stmts.end(), r.consumer_stmt))
      continue;
    const Array* arr = space.ir.find_array(r.array);
    NestEval::Pair p;
    p.prod = {r.producer_stmt, r.array};
    p.cons = {r.consumer_stmt, r.array};
    p.full_bytes = array_bits(*arr) / 8;
    ev.pairs.push_back(std::move(p));
  }
  for (const auto& sid : nest.stmts) {
    std::int64_t f = compute_floor(space, cfg, space.ir.statement(sid));
    if (f == kInfeasibleBound) {
      ev.compute_floor = kInfeasibleBound;
      break;
    }
    ev.compute_floor += f;
  }
  return ev;
}

Assignment blank_assignment(const DesignSpace& space) {
  Assignment a;
  for (const auto& l : space.ir.loops)
    a.loops[l.id] = {{l.trip_count, 1, 1}, false, 1};
  for (const auto& n : space.nests) {
    std::vector<int> id(n.band.size());
    std::iota(id.begin(), id.end(), 0);
    a.perm.push_back(id);
  }
  return a;
}

// ---- depth-first search ----------------------------------------------------

struct Worker {
  Ctx& ctx;
  Assignment a;
  Key key;
  // running feasibility state over decided nests
  std::vector<std::int64_t> part_prefix;  // cyclic factor per global dim
  std::int64_t dsp_max_prefix[kNumOps] = {0, 0, 0, 0};
  std::int64_t dsp_sum_prefix[kNumOps] = {0, 0, 0, 0};
  // top-level task restriction on the first nest
  int task_perm = -1, task_pip = -1, task_t0 = -1;
  bool stop = false;

  explicit Worker(Ctx& c)
      : ctx(c), a(blank_assignment(c.space)), part_prefix(c.num_dims, 1) {}

  std::int64_t best() const {
    return ctx.best_obj.load(std::memory_order_relaxed);
  }

  bool deadline_hit() {
    if (ctx.ignore_deadline) return false;
    if (Clock::now() <= ctx.deadline) return false;
    // anytime contract: keep going until something feasible exists
    if (!ctx.presolve && !ctx.has_best.load()) return false;
    ctx.timed_out.store(true);
    return true;
  }

  // within-nest enumeration can dwarf the nest count, so the deadline is
  // also polled (cheaply, every so many steps) inside those loops
  int dl_tick = 0;
  bool tick() {
    if (++dl_tick < 1024) return false;
    dl_tick = 0;
    return deadline_hit();
  }

  void run(size_t ni, std::int64_t obj, std::int64_t bytes) {
    if (stop || ctx.timed_out.load()) {
      stop = true;
      return;
    }
    if (ni == ctx.hi) {
      leaf(obj);
      return;
    }
    if (deadline_hit()) {
      stop = true;
      return;
    }
    if (ctx.has_best.load() && obj + ctx.floor_suffix[ni] > best()) return;
    const NestSpace& nest = ctx.space.nests[ni];
    const NestPlan& plan = ctx.plans[ni];
    for (int pi : plan.perm_domain) {
      if (ni == 0 && task_perm >= 0 && pi != task_perm) continue;
      a.perm[ni] = nest.perms[static_cast<size_t>(pi)];
      key.push_back(pi);
      for (int pc : plan.pip_domain) {
        if (ni == 0 && task_pip >= 0 && pc != task_pip) continue;
        for (size_t b = 0; b < nest.band.size(); ++b)
          a.loops[nest.band[b]].pip = static_cast<int>(b) == pc - 1;
        key.push_back(pc);
        triples(ni, obj, bytes, 0, pc);
        key.pop_back();
        if (stop) {
          key.pop_back();
          return;
        }
      }
      key.pop_back();
    }
  }

  void triples(size_t ni, std::int64_t obj, std::int64_t bytes, size_t li,
               int pc) {
    if (stop || tick()) {
      stop = true;
      return;
    }
    const NestSpace& nest = ctx.space.nests[ni];
    if (li == nest.band.size()) {
      triples_complete(ni, obj, bytes, pc);
      return;
    }
    const std::string& lid = nest.band[li];
    const auto& dom = ctx.space.triples.at(lid);
    bool pipelined = static_cast<int>(li) == pc - 1;
    for (int ti : ctx.plans[ni].triple_domain[li]) {
      if (ni == 0 && li == 0 && task_t0 >= 0 && ti != task_t0) continue;
      const FactorTriple& t = dom[static_cast<size_t>(ti)];
      if (!pipelined && t.t1 != 1) continue;  // E3
      a.loops[lid].tc = t;
      key.push_back(ti);
      triples(ni, obj, bytes, li + 1, pc);
      key.pop_back();
      if (stop) return;
    }
    a.loops[lid].tc = {ctx.space.ir.loop(lid).trip_count, 1, 1};
  }

  // the key vector currently ends with the nest's triple indices
  std::uint64_t memo_key(size_t ni, int pc) const {
    const NestPlan& plan = ctx.plans[ni];
    std::uint64_t k = static_cast<std::uint64_t>(pc);
    size_t nb = plan.triple_domain.size();
    for (size_t li = 0; li < nb; ++li) {
      std::uint64_t radix = ctx.space.triples
                                .at(ctx.space.nests[ni].band[li])
                                .size() +
                            1;
      k = k * radix +
          static_cast<std::uint64_t>(key[key.size() - nb + li]) + 1;
    }
    return k;
  }

  MemoEntry compute_memo(size_t ni) const {
    const NestSpace& nest = ctx.space.nests[ni];
    const NestEval& ev = ctx.evals[ni];
    const NestPlan& plan = ctx.plans[ni];
    MemoEntry e;
    for (size_t li = 0; li < nest.band.size(); ++li) {
      std::int64_t t0 = a.loops.at(nest.band[li]).tc.t0;
      e.t0prod *= t0;
      if (plan.uf_free[li]) e.max_ufprod *= t0;
    }
    for (const auto& sid : nest.stmts) {
      const Statement& s = ctx.space.ir.statement(sid);
      // all unroll factors are 1 here, so lat0 = t0prod * lat1 exactly
      e.lat1_sum +=
          stmt_compute_latency(ctx.space, ctx.cfg, a, sid) / e.t0prod;
      std::int64_t ii = std::max<std::int64_t>(
          1, initiation_interval(ctx.space, ctx.cfg, a, sid));
      std::int64_t par2 = 1;
      for (const auto& l : s.enclosing_loops) par2 *= a.loops.at(l).tc.t2;
      for (const auto& [op, n] : s.ops)
        e.dsp.push_back({static_cast<int>(op),
                         ctx.cfg.dsp_cost.at(op) * n * par2, ii});
    }
    for (const auto& [g, band_loops] : ev.dims) {
      std::int64_t f = 1;
      for (int b : band_loops)
        f = std::lcm(f, a.loops.at(nest.band[static_cast<size_t>(b)]).tc.t2);
      e.part.push_back(f);
    }
    return e;
  }

  bool dsp_ok(const MemoEntry& e, std::int64_t ufprod) const {
    std::int64_t mx[kNumOps], sm[kNumOps];
    for (int o = 0; o < kNumOps; ++o) {
      mx[o] = dsp_max_prefix[o];
      sm[o] = dsp_sum_prefix[o];
    }
    for (const auto& t : e.dsp) {
      std::int64_t d = ceil_div(t.base * ufprod, t.ii);
      mx[t.op] = std::max(mx[t.op], d);
      sm[t.op] += d;
    }
    std::int64_t total = 0;
    for (int o = 0; o < kNumOps; ++o)
      total += ctx.cfg.reuse_opt ? mx[o] : sm[o];
    return total <= ctx.cfg.dsp_available;
  }

  void triples_complete(size_t ni, std::int64_t obj, std::int64_t bytes,
                        int pc) {
    const NestEval& ev = ctx.evals[ni];
    const MemoEntry* e;
    {
      std::uint64_t mk = memo_key(ni, pc);
      std::lock_guard<std::mutex> g(ctx.memo_m);
      auto it = ctx.memo[ni].find(mk);
      if (it == ctx.memo[ni].end())
        it = ctx.memo[ni].emplace(mk, compute_memo(ni)).first;
      e = &it->second;  // element addresses survive rehashing
    }

    // derived-partitioning budget per array over every decided nest
    std::int64_t prod = 1;
    size_t di = 0;
    int cur_arr = -1;
    for (size_t g = 0; g < ctx.num_dims; ++g) {
      if (ctx.dim_array[g] != cur_arr) {
        if (prod > ctx.cfg.max_part) return;
        prod = 1;
        cur_arr = ctx.dim_array[g];
      }
      std::int64_t f = part_prefix[g];
      if (di < ev.dims.size() &&
          ev.dims[di].first == static_cast<int>(g)) {
        f = std::lcm(f, e->part[di]);
        ++di;
      }
      prod *= f;
    }
    if (prod > ctx.cfg.max_part) return;

    // no unroll choice can beat lat1_sum * t0prod / max_ufprod
    std::int64_t min_lat0 = e->lat1_sum * (e->t0prod / e->max_ufprod);
    if (obj + min_lat0 + ev.mem_floor + ctx.floor_suffix[ni + 1] > best())
      return;
    if (!dsp_ok(*e, 1)) return;  // DSP demand grows with unrolling
    ufs(ni, obj, bytes, 0, e, 1);
  }

  void ufs(size_t ni, std::int64_t obj, std::int64_t bytes, size_t li,
           const MemoEntry* e, std::int64_t ufprod) {
    if (stop || tick()) {
      stop = true;
      return;
    }
    const NestSpace& nest = ctx.space.nests[ni];
    const NestPlan& plan = ctx.plans[ni];
    if (li == nest.band.size()) {
      std::int64_t lat0_sum = e->lat1_sum * (e->t0prod / ufprod);
      if (obj + lat0_sum + ctx.evals[ni].mem_floor +
              ctx.floor_suffix[ni + 1] >
          best())
        return;
      if (!dsp_ok(*e, ufprod)) return;
      caches(ni, obj, bytes, lat0_sum, e, ufprod, 0);
      return;
    }
    const std::string& lid = nest.band[li];
    std::int64_t t0 = a.loops[lid].tc.t0;
    std::vector<std::int64_t> dom =
        plan.uf_free[li] ? divisors(t0) : std::vector<std::int64_t>{1};
    for (std::int64_t u : dom) {
      if (plan.uf_pin[li] && *plan.uf_pin[li] != u) continue;
      a.loops[lid].uf = u;
      key.push_back(u);
      ufs(ni, obj, bytes, li + 1, e, ufprod * u);
      key.pop_back();
      if (stop) return;
    }
    a.loops[lid].uf = 1;
  }

  void caches(size_t ni, std::int64_t obj, std::int64_t bytes,
              std::int64_t lat0, const MemoEntry* e, std::int64_t ufprod,
              size_t ci) {
    if (stop || tick()) {
      stop = true;
      return;
    }
    const NestPlan& plan = ctx.plans[ni];
    if (ci == plan.caches.size()) {
      nest_done(ni, obj, bytes, lat0, e, ufprod);
      return;
    }
    const CacheVar& cv = plan.caches[ci];
    for (int pos : cv.domain) {
      a.cache[cv.key] = pos;
      key.push_back(pos);
      caches(ni, obj, bytes, lat0, e, ufprod, ci + 1);
      key.pop_back();
      a.cache.erase(cv.key);
      if (stop) return;
    }
  }

  void nest_done(size_t ni, std::int64_t obj, std::int64_t bytes,
                 std::int64_t lat0, const MemoEntry* e, std::int64_t ufprod) {
    ctx.nodes.fetch_add(1, std::memory_order_relaxed);
    const NestSpace& nest = ctx.space.nests[ni];
    const NestPlan& plan = ctx.plans[ni];
    const NestEval& ev = ctx.evals[ni];
    const auto& perm = a.perm[ni];

    int slot_of[16];
    std::int64_t t0p[16], t0b[16];  // t0 in permuted / band order
    for (size_t b = 0; b < nest.band.size(); ++b)
      t0b[b] = a.loops[nest.band[b]].tc.t0;
    for (size_t k = 0; k < perm.size(); ++k) {
      slot_of[perm[k]] = static_cast<int>(k);
      t0p[k] = t0b[perm[k]];
    }

    // dedupe (array, position) pairs: shared buffers transfer once
    struct Tr {
      int arr;
      int pos;
      bool written;
      bool elided;
    };
    Tr trs[32];
    size_t ntr = 0;
    for (size_t ci = 0; ci < plan.caches.size(); ++ci) {
      int pos = a.cache.at(plan.caches[ci].key);
      const NestEval::CV& cv = ev.cvs[ci];
      bool dup = false;
      for (size_t k = 0; k < ntr; ++k)
        if (trs[k].arr == cv.arr && trs[k].pos == pos) {
          trs[k].written |= cv.written;
          dup = true;
          break;
        }
      if (dup) continue;
      // in presolve the producer nest is undecided; assume it cooperates
      bool elided = pos == kBeforeNest && !cv.producer.empty() &&
                    (ctx.presolve || [&] {
                      auto it = a.cache.find(
                          {cv.producer, ev.arrays[cv.arr].name});
                      return it != a.cache.end() && it->second == kBeforeNest;
                    }());
      trs[ntr++] = {cv.arr, pos, cv.written, elided};
    }

    std::int64_t cycles = 0, nbytes = 0;
    for (size_t k = 0; k < ntr; ++k) {
      const ArrInfo& info = ev.arrays[static_cast<size_t>(trs[k].arr)];
      std::int64_t foot = 1;
      for (size_t d = 0; d < info.extent.size(); ++d) {
        int b = info.band[d];
        if (b >= 0 && slot_of[b] <= trs[k].pos)
          foot *= ev.band_trip[static_cast<size_t>(b)] /
                  t0b[static_cast<size_t>(b)];
        else
          foot *= info.extent[d];
      }
      std::int64_t trip = 1;
      for (int s = 0; s <= trs[k].pos && s < static_cast<int>(perm.size()); ++s)
        trip *= t0p[s];
      std::int64_t passes =
          (trs[k].elided ? 0 : 1) + (trs[k].written ? 1 : 0);
      cycles += ceil_div(foot * info.elem_bits, info.burst) * trip * passes;
      nbytes += foot * info.elem_bits / 8;
    }
    // resident arrays share one buffer across producer and consumer nests
    for (const auto& p : ev.pairs) {
      auto cons = a.cache.find(p.cons);
      if (cons == a.cache.end() || cons->second != kBeforeNest) continue;
      if (!ctx.presolve) {
        auto prod = a.cache.find(p.prod);
        if (prod == a.cache.end() || prod->second != kBeforeNest) continue;
      }
      nbytes -= p.full_bytes;
    }

    std::int64_t total_bytes = bytes + nbytes;
    if (total_bytes + ctx.min_mem_suffix[ni + 1] > ctx.mem_limit) return;
    std::int64_t here = lat0 + cycles;
    if (obj + here + ctx.floor_suffix[ni + 1] > best()) return;

    // commit this nest's partition and DSP demand, recurse, then roll back
    std::int64_t save_mx[kNumOps], save_sm[kNumOps];
    for (int o = 0; o < kNumOps; ++o) {
      save_mx[o] = dsp_max_prefix[o];
      save_sm[o] = dsp_sum_prefix[o];
    }
    for (const auto& t : e->dsp) {
      std::int64_t d = ceil_div(t.base * ufprod, t.ii);
      dsp_max_prefix[t.op] = std::max(dsp_max_prefix[t.op], d);
      dsp_sum_prefix[t.op] += d;
    }
    std::int64_t save_part[32];
    for (size_t di = 0; di < ev.dims.size(); ++di) {
      size_t g = static_cast<size_t>(ev.dims[di].first);
      save_part[di] = part_prefix[g];
      part_prefix[g] = std::lcm(part_prefix[g], e->part[di]);
    }

    run(ni + 1, obj + here, total_bytes);

    for (size_t di = 0; di < ev.dims.size(); ++di)
      part_prefix[static_cast<size_t>(ev.dims[di].first)] = save_part[di];
    for (int o = 0; o < kNumOps; ++o) {
      dsp_max_prefix[o] = save_mx[o];
      dsp_sum_prefix[o] = save_sm[o];
    }
  }

  void leaf(std::int64_t obj) {
    if (ctx.presolve) {
      // isolated-nest optimum: the accumulated objective is already exact
      std::lock_guard<std::mutex> g(ctx.m);
      if (!ctx.has_best.load() || obj < ctx.best_obj.load()) {
        ctx.best_obj.store(obj);
        ctx.has_best.store(true);
      }
      return;
    }
    if (!check_all(ctx.space, ctx.cfg, a).empty()) return;
    LatencyBreakdown lb = latency(ctx.space, ctx.cfg, a);
    std::lock_guard<std::mutex> g(ctx.m);
    bool better = !ctx.has_best.load() || lb.objective < ctx.best_obj ||
                  (lb.objective == ctx.best_obj && key < ctx.best_key);
    if (!better) return;
    ctx.best = a;
    ctx.best.ap = derive_partitioning(ctx.space, ctx.best);
    ctx.best_lb = lb;
    ctx.best_key = key;
    ctx.best_obj.store(lb.objective);
    ctx.has_best.store(true);
  }
};

// Greedy warm start: a fully sequential assignment (largest t0, no unroll)
// with every transfer at its deepest admissible point has a near-minimal
// footprint, so it is feasible whenever the relaxation is. Installing it as
// the incumbent lets the anytime deadline bind from the first node; its
// sentinel key loses every objective tie against a real search leaf, so the
// reported optimum is unchanged when the search completes.
void warm_start(Ctx& ctx) {
  const DesignSpace& space = ctx.space;
  Assignment a = blank_assignment(space);
  for (size_t ni = 0; ni < space.nests.size(); ++ni) {
    const NestSpace& nest = space.nests[ni];
    const NestPlan& plan = ctx.plans[ni];
    a.perm[ni] = nest.perms[static_cast<size_t>(plan.perm_domain.front())];
    int pc = plan.pip_domain.front();
    for (size_t li = 0; li < nest.band.size(); ++li) {
      const std::string& lid = nest.band[li];
      bool pipelined = static_cast<int>(li) == pc - 1;
      a.loops[lid].pip = pipelined;
      const auto& dom = space.triples.at(lid);
      const FactorTriple* pick = nullptr;
      for (int ti : plan.triple_domain[li]) {
        const FactorTriple& t = dom[static_cast<size_t>(ti)];
        if (!pipelined && t.t1 != 1) continue;
        if (!pick || t.t0 > pick->t0 ||
            (t.t0 == pick->t0 && t.t2 < pick->t2))
          pick = &t;
      }
      if (!pick) return;  // pins rule out a sequential triple; search decides
      a.loops[lid].tc = *pick;
      std::int64_t u = plan.uf_pin[li] ? *plan.uf_pin[li] : 1;
      if (u < 1 || pick->t0 % u != 0) return;
      a.loops[lid].uf = u;
    }
    for (const auto& cv : plan.caches) a.cache[cv.key] = cv.domain.back();
  }
  if (!check_all(space, ctx.cfg, a).empty()) return;
  LatencyBreakdown lb = latency(space, ctx.cfg, a);
  ctx.best = a;
  ctx.best.ap = derive_partitioning(space, ctx.best);
  ctx.best_lb = lb;
  ctx.best_key = {std::numeric_limits<std::int64_t>::max()};
  ctx.best_obj.store(lb.objective);
  ctx.has_best.store(true);
}

// Optimum of one nest in isolation with every cross-nest constraint relaxed:
// an admissible floor on that nest's contribution to any global solution.
// Returns (value, exact); on timeout the partial incumbent is only an upper
// bound of the relaxed optimum, so the caller must fall back to a raw floor.
std::pair<std::int64_t, bool> presolve_nest(const Ctx& base, size_t ni,
                                            double budget_seconds) {
  Ctx t(base.space, base.cfg);
  t.plans = base.plans;
  t.evals = base.evals;
  t.stmt_nest = base.stmt_nest;
  t.num_dims = base.num_dims;
  t.dim_array = base.dim_array;
  t.memo.resize(t.plans.size());
  t.floor_suffix.assign(t.plans.size() + 1, 0);
  t.min_mem_suffix.assign(t.plans.size() + 1, 0);
  t.lo = ni;
  t.hi = ni + 1;
  t.presolve = true;
  // every other nest at its minimum footprint
  t.mem_limit = base.cfg.mem_bytes -
                (base.min_mem_suffix[0] - base.evals[ni].min_bytes);
  t.deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                  std::chrono::duration<double>(
                                      budget_seconds));
  Worker w(t);
  w.run(ni, 0, 0);
  if (t.timed_out.load()) return {0, false};
  if (!t.has_best.load())
    throw InfeasibleError("a loop nest has no feasible configuration");
  return {t.best_obj.load(), true};
}

void prepare(Ctx& ctx, const std::vector<Pin>& pins, double budget_seconds,
             bool tighten = false) {
  const DesignSpace& space = ctx.space;
  const PlatformConfig& cfg = ctx.cfg;
  ctx.plans = build_plans(space, parse_pins(space, pins));
  size_t n = space.nests.size();
  for (size_t ni = 0; ni < n; ++ni)
    for (const auto& sid : space.nests[ni].stmts)
      ctx.stmt_nest[sid] = static_cast<int>(ni);

  // global (array, dimension) slots touched by level-2 unrolling, and the
  // band loops of each nest indexing them; the map keeps one array's
  // dimensions contiguous, which the per-array budget check relies on
  std::map<std::pair<std::string, size_t>, std::vector<std::vector<int>>>
      dim_map;  // (array, dim) -> per-nest band loops
  for (const auto& s : space.ir.statements)
    for (const auto& acc : s.accesses) {
      const Array* arr = space.ir.find_array(acc.array);
      if (!arr) continue;
      for (size_t d = 0; d < acc.subscripts.size() && d < arr->dims.size();
           ++d)
        for (const auto& [it, c] : acc.subscripts[d].coeffs) {
          int ni = ctx.stmt_nest.at(s.id);
          const NestSpace& nest = space.nests[static_cast<size_t>(ni)];
          int b = band_pos_of_iter(space, nest, it);
          if (b < 0) continue;
          auto& v = dim_map[{acc.array, d}];
          v.resize(n);
          auto& loops = v[static_cast<size_t>(ni)];
          if (!std::count(loops.begin(), loops.end(), b)) loops.push_back(b);
        }
    }
  ctx.num_dims = dim_map.size();
  std::vector<NestEval> evals;
  for (size_t ni = 0; ni < n; ++ni)
    evals.push_back(build_eval(space, cfg, ni, ctx.plans[ni]));
  {
    int g = 0, arr_id = -1;
    std::string cur_arr;
    for (const auto& [key, v] : dim_map) {
      if (key.first != cur_arr) {
        cur_arr = key.first;
        ++arr_id;
      }
      ctx.dim_array.push_back(arr_id);
      for (size_t ni = 0; ni < n; ++ni)
        if (!v[ni].empty()) evals[ni].dims.push_back({g, v[ni]});
      ++g;
    }
  }
  ctx.evals = std::move(evals);

  ctx.memo.resize(n);
  ctx.hi = n;
  ctx.mem_limit = cfg.mem_bytes;
  std::vector<std::int64_t> nest_floor(n);
  ctx.floor_suffix.assign(n + 1, 0);
  ctx.min_mem_suffix.assign(n + 1, 0);
  for (size_t i = n; i-- > 0;) {
    const NestEval& ev = ctx.evals[i];
    nest_floor[i] = ev.compute_floor == kInfeasibleBound
                        ? kInfeasibleBound
                        : ev.mem_floor + ev.compute_floor;
    ctx.floor_suffix[i] = nest_floor[i] == kInfeasibleBound ||
                                  ctx.floor_suffix[i + 1] == kInfeasibleBound
                              ? kInfeasibleBound
                              : ctx.floor_suffix[i + 1] + nest_floor[i];
    ctx.min_mem_suffix[i] = ctx.min_mem_suffix[i + 1] + ev.min_bytes;
  }

  // with several nests the raw floors are far below each nest's true
  // minimum; replace them with isolated-nest optima where affordable
  if (tighten && n > 1 && ctx.min_mem_suffix[0] <= cfg.mem_bytes &&
      ctx.floor_suffix[0] < kInfeasibleBound) {
    double per_nest = std::min(30.0, budget_seconds / (4.0 * n));
    for (size_t i = 0; i < n; ++i) {
      auto [v, exact] = presolve_nest(ctx, i, per_nest);
      if (exact) nest_floor[i] = std::max(nest_floor[i], v);
    }
    for (size_t i = n; i-- > 0;)
      ctx.floor_suffix[i] = ctx.floor_suffix[i + 1] + nest_floor[i];
  }
  budget_seconds = std::min(budget_seconds, 1e8);  // keep the cast finite
  ctx.deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(
                                        budget_seconds));
}

void relaxation_check(const Ctx& ctx) {
  std::int64_t min_bytes = ctx.min_mem_suffix.empty()
                               ? 0
                               : ctx.min_mem_suffix[0];
  if (min_bytes > ctx.cfg.mem_bytes)
    throw InfeasibleError(
        "minimum on-chip footprint " + std::to_string(min_bytes) +
        " bytes exceeds capacity " + std::to_string(ctx.cfg.mem_bytes));
  for (const auto& ev : ctx.evals)
    if (ev.compute_floor == kInfeasibleBound)
      throw InfeasibleError("kernel needs DSPs but none are available");
}

SolveOutcome finish(Ctx& ctx, Clock::time_point start) {
  SolveOutcome out;
  out.nodes_explored = ctx.nodes.load();
  out.wall_time =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (!ctx.has_best.load()) {
    out.status = SolveStatus::Infeasible;
    return out;
  }
  out.best = ctx.best;
  out.breakdown = ctx.best_lb;
  out.status = ctx.timed_out.load() ? SolveStatus::FeasibleTimeout
                                    : SolveStatus::Optimal;
  return out;
}

}  // namespace

const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::FeasibleTimeout: return "feasible-timeout";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "?";
}

std::int64_t lower_bound(const DesignSpace& space, const PlatformConfig& cfg) {
  Ctx ctx(space, cfg);
  prepare(ctx, {}, 1.0);  // raw floors only
  std::int64_t total = 0;
  for (const auto& ev : ctx.evals) {
    if (ev.compute_floor == kInfeasibleBound) return kInfeasibleBound;
    total += ev.compute_floor + ev.mem_floor;
  }
  return total;
}

std::int64_t lower_bound(const DesignSpace& space, const PlatformConfig& cfg,
                         const Assignment& complete) {
  if (!check_all(space, cfg, complete).empty()) return kInfeasibleBound;
  return latency(space, cfg, complete).objective;
}

SolveOutcome solve(const DesignSpace& space, const PlatformConfig& cfg,
                   const std::vector<Pin>& pins, double budget_seconds,
                   int threads) {
  auto start = Clock::now();
  Ctx ctx(space, cfg);
  prepare(ctx, pins, budget_seconds, true);
  relaxation_check(ctx);
  warm_start(ctx);
  if (threads < 1) threads = cfg.threads;
  if (threads < 1) threads = 1;

  // top-level subtrees: the first nest's (perm, pipeline, first-loop triple)
  std::vector<std::array<int, 3>> tasks;
  if (ctx.plans.empty()) {
    tasks = {{-1, -1, -1}};
  } else {
    const NestPlan& p0 = ctx.plans[0];
    for (int pi : p0.perm_domain)
      for (int pc : p0.pip_domain) {
        if (p0.triple_domain.empty())
          tasks.push_back({pi, pc, -1});
        else
          for (int ti : p0.triple_domain[0]) tasks.push_back({pi, pc, ti});
      }
  }

#ifdef TILEFORGE_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) \
    if (threads > 1)
#endif
  for (size_t t = 0; t < tasks.size(); ++t) {
    Worker w(ctx);
    w.task_perm = tasks[t][0];
    w.task_pip = tasks[t][1];
    w.task_t0 = tasks[t][2];
    w.run(0, 0, 0);
  }

  return finish(ctx, start);
}

SolveOutcome brute_force_solve(const DesignSpace& space,
                               const PlatformConfig& cfg,
                               const std::vector<Pin>& pins) {
  auto start = Clock::now();
  Ctx ctx(space, cfg);
  prepare(ctx, pins, 1.0);
  relaxation_check(ctx);
  ctx.ignore_deadline = true;

  double points = 1;
  for (size_t ni = 0; ni < ctx.plans.size(); ++ni) {
    const NestPlan& p = ctx.plans[ni];
    points *= std::max<size_t>(size_t{1}, p.perm_domain.size());
    points *= std::max<size_t>(size_t{1}, p.pip_domain.size());
    for (const auto& d : p.triple_domain) points *= d.size();
    for (size_t li = 0; li < p.uf_free.size(); ++li)
      if (p.uf_free[li])
        points *= divisors(space.ir.loop(space.nests[ni].band[li]).trip_count)
                      .size();
    for (const auto& c : p.caches) points *= c.domain.size();
    if (points > 1e8)
      throw SpaceTooLarge("domain has more than 1e8 points");
  }

  // exhaustive walk of the same domains with every check deferred to the
  // leaves: no bounding, no incremental pruning
  struct Enum {
    Ctx& ctx;
    Assignment a;
    Key key;
    explicit Enum(Ctx& c) : ctx(c), a(blank_assignment(c.space)) {}

    void nest(size_t ni) {
      if (ni == ctx.plans.size()) {
        ctx.nodes.fetch_add(1, std::memory_order_relaxed);
        if (!check_all(ctx.space, ctx.cfg, a).empty()) return;
        LatencyBreakdown lb = latency(ctx.space, ctx.cfg, a);
        bool better = !ctx.has_best.load() || lb.objective < ctx.best_obj ||
                      (lb.objective == ctx.best_obj && key < ctx.best_key);
        if (!better) return;
        ctx.best = a;
        ctx.best.ap = derive_partitioning(ctx.space, ctx.best);
        ctx.best_lb = lb;
        ctx.best_key = key;
        ctx.best_obj.store(lb.objective);
        ctx.has_best.store(true);
        return;
      }
      const NestSpace& ns = ctx.space.nests[ni];
      const NestPlan& plan = ctx.plans[ni];
      for (int pi : plan.perm_domain) {
        a.perm[ni] = ns.perms[static_cast<size_t>(pi)];
        key.push_back(pi);
        for (int pc : plan.pip_domain) {
          for (size_t b = 0; b < ns.band.size(); ++b)
            a.loops[ns.band[b]].pip = static_cast<int>(b) == pc - 1;
          key.push_back(pc);
          triples(ni, 0);
          key.pop_back();
        }
        key.pop_back();
      }
    }

    void triples(size_t ni, size_t li) {
      const NestSpace& ns = ctx.space.nests[ni];
      if (li == ns.band.size()) {
        ufs(ni, 0);
        return;
      }
      const std::string& lid = ns.band[li];
      const auto& dom = ctx.space.triples.at(lid);
      for (int ti : ctx.plans[ni].triple_domain[li]) {
        a.loops[lid].tc = dom[static_cast<size_t>(ti)];
        key.push_back(ti);
        triples(ni, li + 1);
        key.pop_back();
      }
      a.loops[lid].tc = {ctx.space.ir.loop(lid).trip_count, 1, 1};
    }

    void ufs(size_t ni, size_t li) {
      const NestSpace& ns = ctx.space.nests[ni];
      const NestPlan& plan = ctx.plans[ni];
      if (li == ns.band.size()) {
        caches(ni, 0);
        return;
      }
      const std::string& lid = ns.band[li];
      std::vector<std::int64_t> dom =
          plan.uf_free[li] ? divisors(a.loops[lid].tc.t0)
                           : std::vector<std::int64_t>{1};
      for (std::int64_t u : dom) {
        if (plan.uf_pin[li] && *plan.uf_pin[li] != u) continue;
        a.loops[lid].uf = u;
        key.push_back(u);
        ufs(ni, li + 1);
        key.pop_back();
      }
      a.loops[lid].uf = 1;
    }

    void caches(size_t ni, size_t ci) {
      const NestPlan& plan = ctx.plans[ni];
      if (ci == plan.caches.size()) {
        nest(ni + 1);
        return;
      }
      const CacheVar& cv = plan.caches[ci];
      for (int pos : cv.domain) {
        a.cache[cv.key] = pos;
        key.push_back(pos);
        caches(ni, ci + 1);
        key.pop_back();
        a.cache.erase(cv.key);
      }
    }
  };

  Enum e(ctx);
  e.nest(0);
  SolveOutcome out = finish(ctx, start);
  if (out.status == SolveStatus::FeasibleTimeout)
    out.status = SolveStatus::Optimal;
  return out;
}

}  // namespace tileforge
