#pragma once

#include "tileforge/cost_model.hpp"

namespace tileforge {

// Raised when a solution handed to the emitter fails re-checking. The solver
// validates its own output, but emission re-verifies as defense in depth.
struct InternalInvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A complete emitted design: one C99 translation unit with the transformed
// kernel (original name), its on-chip buffers, load/store transfer functions
// and inert Vitis-style pragmas.
struct EmittedDesign {
  std::string source_text;                // full translation unit
  std::vector<std::string> buffer_decls;  // on-chip declarations, with pragmas
  std::vector<std::string> transfer_fns;  // generated function names
  // per statement, the emitted index reconstruction assignments
  std::map<std::string, std::vector<std::string>> index_recovery;
  // human-readable notes from the grouped-transfer pass (also for reports)
  std::vector<std::string> grouped_transfers;
};

// Emits the transformed kernel for a feasible assignment: three-level loop
// structure under the chosen permutation, trip-1 loops elided, pipeline /
// unroll / loop_flatten / array_partition pragmas, buffers and transfer calls
// at the selected cache points, and the reduction-accumulator rewrite when
// tree reduction is enabled. Throws InternalInvariantError if the assignment
// fails any cost-model check.
EmittedDesign emit_design(const DesignSpace& space, const PlatformConfig& cfg,
                          const Assignment& a);

// Emits a standalone main() that fills every array from a fixed LCG, runs the
// reference kernel (regenerated from `ir` under the name <name>_ref) and the
// transformed kernel (extern, original name), and compares all arrays over
// ten seeds: bit-exact normally, 1e-4 relative when cfg.tree_reduction
// reassociates floating-point reductions.
std::string emit_reference_harness(const KernelIR& ir,
                                   const PlatformConfig& cfg);

}  // namespace tileforge
