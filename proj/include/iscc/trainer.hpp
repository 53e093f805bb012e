#pragma once
// The two-worker-population training loop: distributor workers (information
// objective) and purchaser workers (resource objective) run market rounds
// against the simulator, push gradients into a shared global store that
// merges them atomically, and pull fresh snapshots. A deterministic replay
// mode serializes the schedule and reproduces a threaded run bit-exactly from
// its merge log.

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iscc/baselines.hpp"
#include "iscc/market.hpp"
#include "iscc/neural.hpp"

namespace iscc {

// Decision-graph feature dims: the shared contract features plus
// (is_candidate) for the distributor and (is_candidate, uses_sharing) for the
// purchaser.
inline constexpr int kDistributorFeatureDim = kContractFeatureDim + 1;
inline constexpr int kPurchaserFeatureDim = kContractFeatureDim + 2;

struct TrainConfig {
  int workers_per_role = 2;
  long long total_episodes = 2000;
  double discount = 1.0;  // single-round episodes
  double learning_rate = 1e-2;
  double entropy_weight = 1e-2;   // beta
  double value_weight = 0.5;      // c
  double lambda_unsold = 0.5;     // distributor penalty per unsold info unit
  double lambda_unfulfilled = 30.0;  // purchaser penalty per unfulfilled line
  int staleness_bound = 4;  // K
  std::uint64_t seed = 0;
  int hidden = 32;
  int layers = 2;
  int window = 50;  // learning-curve bucket, in episodes
  bool normalize_rewards = true;
  double divergence_bound = 1e3;  // halt when mean |param| exceeds this
  bool threaded = false;          // default: deterministic sequential schedule

  void validate() const;
};

struct EpisodeStats {
  double gross = 0.0;
  double cost = 0.0;
  double net = 0.0;
  double hit_rate = 0.0;
  double reuse_rate = 0.0;
  int unfulfilled = 0;
};

EpisodeStats stats_from(const TransactionLedger& ledger);

// Raw per-episode worker reward (no normalization): the distributor earns
// gross minus a penalty on produced-but-unsold information, the purchaser
// pays resource cost plus a penalty per unfulfilled order line.
double worker_reward(Role role, const TransactionLedger& ledger, const EpisodeStats& stats,
                     const TrainConfig& cfg);

// Serialized parameter store. Merges are linearizable; pushes with a base
// version older than current - K are rejected and the worker re-pulls.
class GlobalStore {
 public:
  GlobalStore(PolicyParams distributor, PolicyParams purchaser, double learning_rate,
              int staleness_bound);

  struct Snapshot {
    PolicyParams distributor;
    PolicyParams purchaser;
    long long version = 0;
  };
  Snapshot snapshot() const;

  struct PushResult {
    bool accepted = false;
    long long version = 0;  // current version after the call
  };
  // params_role <- params_role - lr * grads, atomically; version increments.
  PushResult push_merge(const std::vector<double>& grads, Role role, long long base_version);

  long long version() const;
  PolicyParams params(Role role) const;
  double mean_abs_param(Role role) const;

 private:
  mutable std::mutex mu_;
  PolicyParams distributor_;
  PolicyParams purchaser_;
  long long version_ = 0;
  double lr_;
  int staleness_;
};

// One policy decision inside an episode, with everything backward() needs.
struct DecisionStep {
  Role role = Role::Distributor;
  EmploymentGraph graph;
  std::vector<bool> mask;
  int action = -1;
  ForwardResult forward;
};

struct EpisodeResult {
  std::vector<DecisionStep> steps;
  EpisodeStats stats;
  TransactionLedger ledger;
  double reward_distributor = 0.0;  // raw
  double reward_purchaser = 0.0;    // raw
};

// One market round driven by the two policies. Deterministic given
// (scenario, seed, params); greedy_actions switches sampling to argmax.
EpisodeResult run_episode(const Scenario& s, std::uint64_t episode_seed,
                          const PolicyParams& distributor, const PolicyParams& purchaser,
                          const TrainConfig& cfg, bool greedy_actions);

// Decision-graph builders (exposed for tests). The mask marks candidate
// vertices; features are scaled by the scenario's largest info value.
EmploymentGraph build_distributor_decision_graph(const Scenario& s,
                                                 const std::vector<OrderLine>& decided,
                                                 int target,
                                                 std::optional<int> target_employer,
                                                 std::vector<bool>& mask);

struct FormedContext {
  EmploymentContract contract;
  ContractTemplate tmpl;
};

EmploymentGraph build_purchaser_decision_graph(const Scenario& s,
                                               const std::vector<FormedContext>& formed,
                                               const OrderLine& line,
                                               const std::vector<ContractTemplate>& templates,
                                               std::vector<bool>& mask);

struct MergeLogEntry {
  long long seq = 0;
  Role role = Role::Distributor;
  int worker = 0;                 // index within the role
  long long worker_episode = 0;   // per-worker episode counter
  long long base_version = 0;
};

struct WindowRow {
  int window = 0;
  double mean_gross = 0.0;
  double mean_cost = 0.0;
  double mean_net = 0.0;
  double hit_rate = 0.0;
  double reuse_rate = 0.0;
};

struct TrainResult {
  PolicyParams distributor;
  PolicyParams purchaser;
  std::vector<WindowRow> curve;
  std::vector<MergeLogEntry> merge_log;
  std::vector<EpisodeStats> episode_stats;  // merge order
  bool diverged = false;
  std::string diagnostic;
};

// Trains on the scenario set (episode e uses scenario e mod size). Threaded
// mode records the merge order; the default sequential mode is reproducible
// run to run.
TrainResult train(const std::vector<Scenario>& scenarios, const TrainConfig& cfg);

// Re-executes a recorded merge log; bit-exact against the run that wrote it.
TrainResult train_replay(const std::vector<Scenario>& scenarios, const TrainConfig& cfg,
                         const std::vector<MergeLogEntry>& log);

struct EvalResult {
  EpisodeStats mean;
  std::vector<EpisodeStats> episodes;
  std::vector<TransactionLedger> ledgers;
};

// Greedy (argmax) rollouts with fixed seeds; no exploration, no learning.
EvalResult evaluate(const std::vector<Scenario>& scenarios, const PolicyParams& distributor,
                    const PolicyParams& purchaser, const TrainConfig& cfg,
                    int episodes);

// Text artifacts: learning-curve CSV, merge log, round-trip of the log.
std::string curve_csv(const std::vector<WindowRow>& curve);
std::string merge_log_text(const std::vector<MergeLogEntry>& log);
std::vector<MergeLogEntry> parse_merge_log(const std::string& text);

}  // namespace iscc
