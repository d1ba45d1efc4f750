#pragma once

#include "tileforge/dependence.hpp"
#include "tileforge/factor.hpp"
#include "tileforge/ir.hpp"

namespace tileforge {

// Cache positions are relative to the level-0 loop slots of a nest under the
// chosen permutation: kBeforeNest, or "after the level-0 loop at slot k".
constexpr int kBeforeNest = -1;

struct CacheDomain {
  std::string array;
  bool before_nest_only = false;  // a single-iterator strided/shifted dim
                                  // pins the transfer outside the nest
  int num_slots = 0;              // positions: kBeforeNest .. num_slots-1
};

// One perfectly nested loop body of the distributed kernel. Statements that
// cannot be separated share a nest (and all of its variables).
struct NestSpace {
  std::vector<std::string> stmts;  // statement ids, textual order
  std::vector<std::string> band;   // loop ids, outermost first
  bool singleton = true;           // |stmts| == 1
  bool fully_permutable = true;
  std::vector<std::vector<int>> perms;  // legal level-0 orders, indices
                                        // into band; identity always present
  std::vector<std::string> reduction_loops;  // union over stmts
  // cache-point domains, key (stmt id, array name)
  std::map<std::pair<std::string, std::string>, CacheDomain> cache;
};

// Producer/consumer pair for which a full before-nest transfer makes the
// array resident on-chip across nests.
struct ResidentPair {
  std::string array;
  std::string producer_stmt;  // writes the array
  std::string consumer_stmt;  // later statement referencing it
};

struct DesignSpace {
  KernelIR ir;  // maximally distributed
  std::vector<Dependence> deps;
  ReductionInfo reductions;
  std::vector<NestSpace> nests;
  std::map<std::string, std::vector<FactorTriple>> triples;  // loop id -> dom
  std::map<std::string, std::int64_t> burst_bits;            // array -> burst
  std::vector<ResidentPair> residents;

  const NestSpace& nest_of(const std::string& stmt) const;
  int nest_index_of(const std::string& stmt) const;
};

// Splits statements into separate nests wherever legal, preserving textual
// order; loops are cloned per nest with fresh ids.
KernelIR maximal_distribution(const KernelIR& ir,
                              const std::vector<Dependence>& deps);

// Full template construction: distribution, per-loop factor-triple domains,
// level semantics, permutation domains, cache points and burst widths.
DesignSpace build_design_space(const KernelIR& ir);

// Footprint in elements of `array` when statement `stmt` transfers it at
// `position` (kBeforeNest or slot index under `perm`), given the level-0
// trip counts of the nest's loops (t0 indexed like nest.band).
std::int64_t footprint_elements(const DesignSpace& space, const NestSpace& nest,
                                const std::string& array, int position,
                                const std::vector<int>& perm,
                                const std::vector<std::int64_t>& t0);

// Largest power-of-two bitwidth <= 512 dividing the array's last-dimension
// row size in bits.
std::int64_t burst_width(const Array& a);

}  // namespace tileforge
