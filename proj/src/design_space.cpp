#include "tileforge/design_space.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace tileforge {

namespace {

bool share_a_loop(const Statement& a, const Statement& b) {
  return !a.enclosing_loops.empty() && !b.enclosing_loops.empty() &&
         a.enclosing_loops.front() == b.enclosing_loops.front();
}

// Statements referencing the array, textual order.
std::vector<const Statement*> referencing(const KernelIR& ir,
                                          const std::string& array) {
  std::vector<const Statement*> out;
  for (const auto& s : ir.statements)
    for (const auto& acc : s.accesses)
      if (acc.array == array) {
        out.push_back(&s);
        break;
      }
  return out;
}

}  // namespace

const NestSpace& DesignSpace::nest_of(const std::string& stmt) const {
  return nests[static_cast<size_t>(nest_index_of(stmt))];
}

int DesignSpace::nest_index_of(const std::string& stmt) const {
  for (size_t i = 0; i < nests.size(); ++i)
    for (const auto& id : nests[i].stmts)
      if (id == stmt) return static_cast<int>(i);
  throw std::out_of_range("no nest for statement " + stmt);
}

KernelIR maximal_distribution(const KernelIR& ir,
                              const std::vector<Dependence>& deps) {
  // Group boundaries between consecutive statements: a boundary after
  // position i is legal iff every pair (a <= i, b > i) that shares a loop may
  // be fully ordered a-before-b.
  size_t n = ir.statements.size();
  std::vector<size_t> group(n, 0);
  size_t gid = 0;
  for (size_t i = 1; i < n; ++i) {
    bool can_split = true;
    for (size_t a = 0; a < i && can_split; ++a)
      for (size_t b = i; b < n && can_split; ++b) {
        if (!share_a_loop(ir.statements[a], ir.statements[b])) continue;
        if (!distribution_legal(ir, deps, ir.statements[a].id,
                                ir.statements[b].id))
          can_split = false;
      }
    if (can_split) gid++;
    group[i] = gid;
  }

  KernelIR out;
  out.name = ir.name;
  out.arrays = ir.arrays;
  out.scalars = ir.scalars;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && group[j + 1] == group[i]) j++;
    // one nest for statements [i..j]
    const auto& band0 = ir.statements[i].enclosing_loops;
    for (size_t k = i + 1; k <= j; ++k)
      if (ir.statements[k].enclosing_loops != band0)
        throw std::runtime_error(
            "statements " + ir.statements[i].id + " and " +
            ir.statements[k].id +
            " are inseparable but imperfectly nested; kernel not supported");
    std::map<std::string, std::string> clone;  // old loop id -> new
    std::optional<std::string> parent;
    for (const auto& lid : band0) {
      const Loop& l = ir.loop(lid);
      Loop nl = l;
      nl.id = "L" + std::to_string(out.loops.size());
      nl.parent = parent;
      nl.depth = parent ? out.loop(*parent).depth + 1 : 0;
      parent = nl.id;
      clone[lid] = nl.id;
      out.loops.push_back(nl);
    }
    for (size_t k = i; k <= j; ++k) {
      Statement s = ir.statements[k];
      s.id = "S" + std::to_string(out.statements.size());
      for (auto& lid : s.enclosing_loops) lid = clone[lid];
      out.statements.push_back(std::move(s));
    }
    i = j + 1;
  }
  std::string diag = out.validate();
  if (!diag.empty())
    throw std::runtime_error("distribution produced invalid IR: " + diag);
  return out;
}

std::int64_t burst_width(const Array& a) {
  return burst_width_bits(a.dims.back() * a.element_bits, 512);
}

DesignSpace build_design_space(const KernelIR& input) {
  DesignSpace space;
  auto deps0 = compute_dependences(input);
  space.ir = maximal_distribution(input, deps0);
  space.deps = compute_dependences(space.ir);
  space.reductions = reduction_loops(space.ir, space.deps);

  for (const auto& l : space.ir.loops)
    space.triples[l.id] = enumerate_factor_triples(l.trip_count);
  for (const auto& a : space.ir.arrays) space.burst_bits[a.name] = burst_width(a);

  // nests: consecutive statements with identical bands
  size_t i = 0;
  while (i < space.ir.statements.size()) {
    NestSpace nest;
    nest.band = space.ir.statements[i].enclosing_loops;
    size_t j = i;
    while (j < space.ir.statements.size() &&
           space.ir.statements[j].enclosing_loops == nest.band) {
      nest.stmts.push_back(space.ir.statements[j].id);
      j++;
    }
    nest.singleton = nest.stmts.size() == 1;
    i = j;

    nest.fully_permutable = true;
    for (const auto& sid : nest.stmts)
      nest.fully_permutable &= band_fully_permutable(space.ir, space.deps, sid);

    // level-0 permutation domain
    std::vector<int> idx(nest.band.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (nest.fully_permutable) {
      std::vector<int> p = idx;
      do {
        nest.perms.push_back(p);
      } while (std::next_permutation(p.begin(), p.end()));
    } else {
      nest.perms.push_back(idx);  // original order only
    }

    std::set<std::string> red;
    for (const auto& sid : nest.stmts)
      for (const auto& lid : space.reductions.loops[sid]) red.insert(lid);
    nest.reduction_loops.assign(red.begin(), red.end());

    for (const auto& sid : nest.stmts) {
      const Statement& s = space.ir.statement(sid);
      std::set<std::string> arrays;
      for (const auto& acc : s.accesses) arrays.insert(acc.array);
      for (const auto& arr : arrays) {
        CacheDomain dom;
        dom.array = arr;
        dom.num_slots = static_cast<int>(nest.band.size());
        // a dimension indexed by exactly one iterator with a stride or shift
        // would need halo tiles, so it pins the transfer before the nest;
        // dimensions with several iterators (or none) stay full-extent in
        // every tile and are safe at any position
        for (const auto& acc : s.accesses) {
          if (acc.array != arr) continue;
          for (const auto& sub : acc.subscripts)
            if (sub.coeffs.size() == 1 &&
                (sub.coeffs.begin()->second != 1 || sub.constant != 0))
              dom.before_nest_only = true;
        }
        nest.cache[{sid, arr}] = dom;
      }
    }
    space.nests.push_back(std::move(nest));
  }

  // resident pairs: writer followed by a later statement touching the array,
  // both eligible for a full before-nest transfer
  for (const auto& a : space.ir.arrays) {
    auto refs = referencing(space.ir, a.name);
    for (size_t k = 0; k + 1 < refs.size(); ++k) {
      bool writes = false;
      for (const auto& acc : refs[k]->accesses)
        if (acc.array == a.name && acc.mode == AccessMode::Write) writes = true;
      if (!writes) continue;
      space.residents.push_back({a.name, refs[k]->id, refs[k + 1]->id});
    }
  }
  return space;
}

std::int64_t footprint_elements(const DesignSpace& space, const NestSpace& nest,
                                const std::string& array, int position,
                                const std::vector<int>& perm,
                                const std::vector<std::int64_t>& t0) {
  const Array* arr = space.ir.find_array(array);
  if (!arr) throw std::out_of_range("unknown array " + array);
  // loops enclosing the transfer point: slots 0..position of the permutation
  std::set<std::string> enclosing;
  for (int k = 0; k <= position && k < static_cast<int>(perm.size()); ++k)
    enclosing.insert(nest.band[static_cast<size_t>(perm[static_cast<size_t>(k)])]);

  // iterators indexing each dimension (across all statements of the nest)
  std::int64_t total = 1;
  for (size_t d = 0; d < arr->dims.size(); ++d) {
    std::set<std::string> iters;
    for (const auto& sid : nest.stmts)
      for (const auto& acc : space.ir.statement(sid).accesses)
        if (acc.array == array && d < acc.subscripts.size())
          for (const auto& [it, c] : acc.subscripts[d].coeffs) iters.insert(it);
    std::int64_t dim = arr->dims[d];
    if (iters.size() == 1) {
      // tiled extent when the indexing loop's level-0 loop encloses the point
      for (size_t b = 0; b < nest.band.size(); ++b) {
        const Loop& l = space.ir.loop(nest.band[b]);
        if (l.iterator == *iters.begin() && enclosing.count(l.id))
          dim = l.trip_count / t0[b];
      }
    }
    total *= dim;
  }
  return total;
}

}  // namespace tileforge
