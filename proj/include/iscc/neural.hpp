#pragma once
// Self-contained differentiable core: two-layer tanh MLPs for message and
// update functions, mean aggregation over neighbors, per-vertex policy scores
// and a graph-level value head. Double precision throughout; analytic
// reverse-mode gradients are validated against finite differences.

#include <cstdint>
#include <string>
#include <vector>

#include "iscc/graph_model.hpp"

namespace iscc {

struct GnnArch {
  int d_v = kContractFeatureDim;  // vertex feature dim
  int d_e = 1;                    // edge feature dim
  int h = 32;                     // hidden width
  int L = 2;                      // message-passing rounds

  friend bool operator==(const GnnArch&, const GnnArch&) = default;
};

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;  // 1 for biases
  std::size_t offset = 0;
};

struct ParamLayout {
  GnnArch arch;
  std::vector<TensorSpec> tensors;
  std::size_t total = 0;
};

ParamLayout make_layout(const GnnArch& arch);

// All learnable tensors of one policy, flattened in layout order.
struct PolicyParams {
  GnnArch arch;
  std::vector<double> values;

  const ParamLayout& layout() const;
};

// Glorot-style uniform init, deterministic for a given seed.
PolicyParams init_params(const GnnArch& arch, std::uint64_t seed);

struct ForwardCache {
  // states[l][v]: vertex state entering layer l (l = 0..L); states[L] feeds
  // the heads.
  std::vector<std::vector<std::vector<double>>> states;
  struct Layer {
    // Incoming messages per vertex, in sorted-neighbor order.
    std::vector<std::vector<std::vector<double>>> msg_hidden;
    std::vector<std::vector<std::vector<double>>> msg_out;
    std::vector<std::vector<double>> agg;
    std::vector<std::vector<double>> upd_hidden;
  };
  std::vector<Layer> layers;
  std::vector<double> pooled;
  std::uint64_t stamp = 0;  // hash of params + graph, guards backward()
};

struct ForwardResult {
  std::vector<double> scores;  // one per vertex
  double value = 0.0;
  ForwardCache cache;
};

// Message passing as configured by the arch; throws ShapeError when the graph
// feature dim disagrees. Deterministic: identical inputs give identical bits.
ForwardResult gnn_forward(const PolicyParams& params, const EmploymentGraph& graph);

// Masked softmax. Infeasible entries get probability 0; the feasible block
// sums to 1. With no feasible entry: returns {} when require_choice is false,
// throws FeasibilityError otherwise.
std::vector<double> policy_distribution(const std::vector<double>& scores,
                                        const std::vector<bool>& mask,
                                        bool require_choice = false);

// Scalar loss the backward pass differentiates:
//   -log pi(action) * advantage - entropy_weight * H(pi)
//   + value_weight * (value - return_target)^2
struct LossSpec {
  int action = -1;
  double advantage = 0.0;
  double entropy_weight = 0.0;
  double value_weight = 0.0;
  double return_target = 0.0;
  std::vector<bool> mask;
};

struct Grads {
  std::vector<double> values;  // same layout as PolicyParams
  double loss = 0.0;
  double entropy = 0.0;
};

// Exact gradients of the surrogate loss wrt every parameter. The cache must
// come from gnn_forward with these params and this graph (ConsistencyError
// otherwise).
Grads backward(const PolicyParams& params, const EmploymentGraph& graph,
               const ForwardResult& forward, const LossSpec& spec);

// Versioned JSON checkpoint; round-trips exactly.
std::string params_to_json(const PolicyParams& params);
PolicyParams params_from_json(const std::string& text);

}  // namespace iscc
