#pragma once

#include "tileforge/design_space.hpp"
#include "tileforge/solver.hpp"

namespace tileforge {

// Malformed or incomplete JSON intermediates (see docs/schemas/).
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All serializers produce deterministic output: object keys are emitted in
// sorted order and integers are exact, so identical inputs give byte-identical
// files (the staged CLI contract).

std::string ir_to_json(const KernelIR& ir);
KernelIR ir_from_json(const std::string& text);

std::string deps_to_json(const std::vector<Dependence>& deps,
                         const ReductionInfo& reductions);

// The design-space dump embeds the distributed kernel so later stages need no
// other input.
std::string space_to_json(const DesignSpace& space);
DesignSpace space_from_json(const std::string& text);

std::string solution_to_json(const DesignSpace& space, const SolveOutcome& out);

struct SolutionFile {
  std::string kernel;
  std::string status;
  std::int64_t objective = 0;
  std::int64_t nodes_explored = 0;
  Assignment assignment;  // perm left empty; see resolve_perm
  std::vector<std::vector<std::string>> perm_ids;  // loop ids per nest
};
SolutionFile solution_from_json(const std::string& text);

// Fills assignment.perm by resolving the solution's loop-id orders against
// the nest bands. Throws SchemaError on unknown ids or wrong arity.
void resolve_perm(const DesignSpace& space, SolutionFile& f);

}  // namespace tileforge
