#pragma once

#include "tileforge/cost_model.hpp"

namespace tileforge {

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SpaceTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Variable pin, e.g. {"pip.S1", "j"} or {"tc.S1.k", "48,5,1"}.
// Paths (statement ids refer to the distributed kernel):
//   perm.<stmt>        comma-separated iterator order of the level-0 band
//   tc.<stmt>.<iter>   "t0,t1,t2"
//   pip.<stmt>         iterator name, or "none"
//   uf.<stmt>.<iter>   integer
//   cache.<stmt>.<arr> "before" or a level-0 slot index
struct Pin {
  std::string path;
  std::string value;
};

enum class SolveStatus { Optimal, FeasibleTimeout, Infeasible };

const char* solve_status_name(SolveStatus s);

struct SolveOutcome {
  Assignment best;
  LatencyBreakdown breakdown;
  SolveStatus status = SolveStatus::Infeasible;
  std::int64_t nodes_explored = 0;
  double wall_time = 0.0;
};

constexpr std::int64_t kInfeasibleBound = INT64_MAX;

// Admissible objective bound with nothing decided: per-statement compute
// floors plus one full transfer per array.
std::int64_t lower_bound(const DesignSpace& space, const PlatformConfig& cfg);
// Exact objective of a complete assignment, or kInfeasibleBound if it
// violates any constraint.
std::int64_t lower_bound(const DesignSpace& space, const PlatformConfig& cfg,
                         const Assignment& complete);

// Deterministic branch-and-bound. Uses cfg.reuse_opt for the DSP check and
// cfg.threads (or the threads argument if >= 1) for subtree parallelism; the
// result is identical to the single-threaded run.
SolveOutcome solve(const DesignSpace& space, const PlatformConfig& cfg,
                   const std::vector<Pin>& pins = {},
                   double budget_seconds = 60.0, int threads = 0);

// Exhaustive oracle for small spaces; throws SpaceTooLarge when the raw
// domain product exceeds 1e8 points.
SolveOutcome brute_force_solve(const DesignSpace& space,
                               const PlatformConfig& cfg,
                               const std::vector<Pin>& pins = {});

}  // namespace tileforge
