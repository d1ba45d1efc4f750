#pragma once

#include "tileforge/json_io.hpp"

namespace tileforge {

// Independent re-check of a solution: every constraint and the objective are
// recomputed from the kernel, the config and the solution file with
// arithmetic that shares no code with the cost model, so the solver can never
// self-certify.
struct VerifyReport {
  bool pass = false;
  std::vector<Violation> violations;
  std::int64_t recomputed_objective = 0;
  std::int64_t claimed_objective = 0;
};

// Checks an in-memory assignment against a design space. `claimed` < 0 skips
// the objective-match finding (used for feasibility-agreement sampling).
VerifyReport verify_assignment(const DesignSpace& space,
                               const PlatformConfig& cfg, const Assignment& a,
                               std::int64_t claimed = -1);

// Full file-level verification: parses the solution JSON (SchemaError on
// malformed input), rebuilds the design space from the kernel and re-checks.
VerifyReport verify_solution(const KernelIR& ir, const PlatformConfig& cfg,
                             const std::string& solution_json);

struct AuditFinding {
  std::string tag;  // e.g. coverage, pragma-placement, structure
  std::string message;
};

// Structural audit of an emitted design: re-reads the C text (pragmas and
// transfer plumbing tolerated), checks that every original statement's
// iteration space is covered exactly once via the index-recovery algebra, and
// that pipeline/unroll/loop_flatten pragmas sit on loops.
std::vector<AuditFinding> audit_structure(const KernelIR& ir,
                                          const std::string& design_text);

}  // namespace tileforge
