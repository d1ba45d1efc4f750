#pragma once

#include "tileforge/design_space.hpp"
#include "tileforge/platform.hpp"

namespace tileforge {

// One point of the design space. Loops carry their factor triple, pipeline
// flag (level 1) and coarse unroll factor (level 0); each nest picks a
// level-0 order; each (statement, array) picks a cache point. Array
// partitioning is derived, not chosen.
struct LoopAssign {
  FactorTriple tc;
  bool pip = false;
  std::int64_t uf = 1;
};

struct Assignment {
  std::map<std::string, LoopAssign> loops;            // loop id ->
  std::vector<std::vector<int>> perm;                 // per nest, band order
  std::map<std::pair<std::string, std::string>, int> cache;  // (stmt, array)
  std::map<std::string, std::vector<std::int64_t>> ap;       // derived
};

struct Violation {
  std::string tag;  // E1..E19 or structural
  std::string stmt, loop, array;
  std::string message;
  std::int64_t observed = 0, bound = 0;
};

struct LatencyBreakdown {
  struct PerStmt {
    std::int64_t lat2 = 0, lat1 = 0, lat0 = 0, lat_mem = 0, lat_total = 0;
    std::int64_t ii = 0;
  };
  std::map<std::string, PerStmt> stmts;
  std::int64_t objective = 0;  // sum of lat_total
};

struct DspUsage {
  std::map<std::pair<std::string, OpKind>, std::int64_t> per_stmt_op;
  std::int64_t optimistic = 0;   // identical ops reused across loop bodies
  std::int64_t pessimistic = 0;  // no cross-body reuse
};

// Minimal legal cyclic partition factors: AP_{a,d} is the lcm of the level-2
// trip factors of all loops indexing dimension d of a.
std::map<std::string, std::vector<std::int64_t>> derive_partitioning(
    const DesignSpace& space, const Assignment& a);

std::vector<Violation> check_trip_counts(const DesignSpace& space,
                                         const Assignment& a);
std::vector<Violation> check_pipeline(const DesignSpace& space,
                                      const Assignment& a);
std::vector<Violation> check_coarse_unroll(const DesignSpace& space,
                                           const Assignment& a);
std::vector<Violation> check_caching(const DesignSpace& space,
                                     const PlatformConfig& cfg,
                                     const Assignment& a);
std::vector<Violation> check_partitioning(const DesignSpace& space,
                                          const PlatformConfig& cfg,
                                          const Assignment& a);
std::vector<Violation> check_dsp(const DesignSpace& space,
                                 const PlatformConfig& cfg,
                                 const Assignment& a);
// All checks above in fixed order.
std::vector<Violation> check_all(const DesignSpace& space,
                                 const PlatformConfig& cfg,
                                 const Assignment& a);

// Cycles between successive iterations of the pipelined loop of `stmt`;
// 0 when nothing is pipelined, 1 for a dependence-free non-reduction loop,
// IL_red * U_red (or the log-depth variant) for a reduction loop.
std::int64_t initiation_interval(const DesignSpace& space,
                                 const PlatformConfig& cfg, const Assignment& a,
                                 const std::string& stmt);

DspUsage dsp_usage(const DesignSpace& space, const PlatformConfig& cfg,
                   const Assignment& a);

// Valid only when check_all is empty.
LatencyBreakdown latency(const DesignSpace& space, const PlatformConfig& cfg,
                         const Assignment& a);

// lat0 of one statement (loop structure only, no memory transfers).
std::int64_t stmt_compute_latency(const DesignSpace& space,
                                  const PlatformConfig& cfg,
                                  const Assignment& a, const std::string& stmt);

// lat_total summed over one nest's statements. Cache selections belonging to
// other nests may be absent from the assignment; their transfers are simply
// not counted, which lets the solver cost a prefix of decided nests.
std::int64_t nest_objective(const DesignSpace& space, const PlatformConfig& cfg,
                            const Assignment& a, int nest_index);

// On-chip bytes consumed by the selected cache points (shared buffers and
// resident arrays counted once); the E12 left-hand side.
std::int64_t memory_bytes_used(const DesignSpace& space, const Assignment& a);

}  // namespace tileforge
