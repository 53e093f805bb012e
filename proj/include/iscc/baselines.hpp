#pragma once
// Non-learning allocators that bound and validate the learned policies:
// a uniform-random reference, a cost-per-information greedy heuristic, and an
// exhaustive branch-and-bound oracle for guard-capped instances.

#include <cstdint>
#include <vector>

#include "iscc/market.hpp"

namespace iscc {

struct AllocatorResult {
  InformationOrder order;
  std::vector<EmploymentContract> contracts;
  std::vector<SkippedLine> skipped;
};

// Ladder levels and templates drawn uniformly from the feasible sets.
AllocatorResult random_allocator(std::uint64_t seed, const Scenario& s,
                                 TwinResourcePool& pool, const DemandProfile& demand,
                                 const ProcessParams& params);

// Targets by total demand value descending; per target the feasible template
// with the lowest incremental cost per expected sold information unit,
// preferring passive-sensing reuse; targets whose estimated payment cannot
// cover the incremental cost are skipped.
AllocatorResult greedy_allocator(const Scenario& s, TwinResourcePool& pool,
                                 const DemandProfile& demand, const ProcessParams& params);

struct OracleCaps {
  int max_ncts = 6;
  int max_templates_per_target = 12;
};

// One chosen production: order level plus the template identity (stable under
// re-enumeration, unlike a bare index).
struct OracleChoice {
  int target = -1;
  int ladder_index = 0;
  int employee = -1;
  SensingMode mode = SensingMode::Aws;
  int slots = 1;
  SiteId site;
};

struct OracleResult {
  double best_net = 0.0;
  std::vector<OracleChoice> choice;  // lexicographically first maximizer
  long long nodes_explored = 0;
};

// Depth-first search over per-target template choices (including skip) with
// pool feasibility; with prune=true, branches whose optimistic remaining
// gross cannot beat the incumbent are cut. Returns the exact maximizer of
// net profit; the reported net is re-verified through the real execution
// pipeline. Throws SizeError beyond the guard caps.
OracleResult exhaustive_optimal(const Scenario& s, const TwinResourcePool& pool,
                                const DemandProfile& demand, const ProcessParams& params,
                                OracleCaps caps = {}, bool prune = true);

// Replays an oracle choice vector against a live pool, forming the contracts.
AllocatorResult apply_oracle_choice(const Scenario& s, TwinResourcePool& pool,
                                    const DemandProfile& demand, const ProcessParams& params,
                                    const std::vector<OracleChoice>& choice);

// JSON text of an oracle result (optimum + argmax choice vector).
std::string oracle_to_json(const OracleResult& r);

}  // namespace iscc
