#pragma once

#include "tileforge/ir.hpp"

namespace tileforge {

// One component of a dependence distance vector: a known constant or `star`
// (unknown sign, conservative).
struct Distance {
  bool star = false;
  std::int64_t value = 0;

  static Distance known(std::int64_t v) { return {false, v}; }
  static Distance unknown() { return {true, 0}; }
  bool operator==(const Distance&) const = default;
};

enum class DepKind { Flow, Anti, Output, Input };

struct Dependence {
  std::string src_stmt, dst_stmt;  // src executes first
  DepKind kind = DepKind::Flow;
  std::string array;
  std::vector<Distance> distance;  // over loops common to src and dst
  std::vector<std::string> common_loops;
  int carried_level = -1;  // first nonzero/star component, -1 if independent
};

struct ReductionInfo {
  std::map<std::string, std::vector<std::string>> loops;  // stmt id -> loop ids

  bool is_reduction_loop(const std::string& stmt,
                         const std::string& loop) const {
    auto it = loops.find(stmt);
    if (it == loops.end()) return false;
    for (const auto& l : it->second)
      if (l == loop) return true;
    return false;
  }
};

// Pairwise subscript-matching dependence test over the simple-subscript
// class, with a conservative `star` fallback. Read-after-read dependences are
// reported (kind Input) but never constrain legality.
std::vector<Dependence> compute_dependences(const KernelIR& ir);

ReductionInfo reduction_loops(const KernelIR& ir,
                              const std::vector<Dependence>& deps);

// True iff running all of stmt_a's iterations before all of stmt_b's
// preserves every dependence between them. stmt_a must precede stmt_b
// textually.
bool distribution_legal(const KernelIR& ir, const std::vector<Dependence>& deps,
                        const std::string& stmt_a, const std::string& stmt_b);

// True iff reordering the statement's loop band to `perm` (loop ids,
// outermost first) keeps every involved dependence distance vector
// lexicographically non-negative. The identity order is always legal.
bool permutation_legal(const KernelIR& ir, const std::vector<Dependence>& deps,
                       const std::string& stmt,
                       const std::vector<std::string>& perm);

// All distance components over the statement's band are known and
// non-negative; such a band admits every permutation and rectangular tiling.
bool band_fully_permutable(const KernelIR& ir,
                           const std::vector<Dependence>& deps,
                           const std::string& stmt);

}  // namespace tileforge
