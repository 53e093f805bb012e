#pragma once
// Three-stage graph construction over one round's contracts: information-flow
// digraph (CAVs + RSUs) -> RSU-folded CAV digraph -> employment-as-vertex
// graph whose role-conditioned edge features carry repeated information
// (distributor) or reused resources (purchaser).

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "iscc/market.hpp"

namespace iscc {

struct FlowNode {
  bool is_rsu = false;
  int id = 0;
  auto operator<=>(const FlowNode&) const = default;
};

struct FlowEdge {
  FlowNode from;
  FlowNode to;
  int contract_id = -1;
};

// Nodes are the CAVs and RSUs touched by contracts; edges follow the
// information flow employee -> RSU -> employer. Self-employment is a single
// self-loop with no RSU.
struct FlowGraph {
  std::set<FlowNode> nodes;
  std::vector<FlowEdge> edges;
};

struct CavEdge {
  int employee = -1;
  int employer = -1;
  std::optional<int> rsu;  // folded into the edge feature
  int contract_id = -1;
};

struct CavDigraph {
  std::set<int> nodes;  // CAV ids only
  std::vector<CavEdge> edges;
};

enum class Role { Distributor, Purchaser };

// Employment-as-vertex graph. Vertices may be synthetic decision candidates
// (contract_id -1), so the feature dimension is carried explicitly.
struct EmploymentGraph {
  Role role = Role::Distributor;
  int feature_dim = 0;
  std::vector<std::vector<double>> vertex_features;
  std::vector<int> contract_ids;
  struct Edge {
    int a = 0;
    int b = 0;
    double feature = 0.0;
  };
  std::vector<Edge> edges;

  std::size_t vertex_count() const { return vertex_features.size(); }
};

// Core vertex feature order used for post-round employment graphs:
// (info produced, resources consumed, target I_t, ordered quality,
//  mode flag 0=AWS 1=PWS, self-employment flag).
inline constexpr int kContractFeatureDim = 6;

FlowGraph build_flow_graph(const std::vector<EmploymentContract>& contracts);

// Collapses every employee -> RSU -> employer path into one edge carrying the
// RSU id. Throws Error("dangling...") when a contract's RSU path is broken.
CavDigraph fold_rsus(const FlowGraph& fg);

// Post-round graph: one vertex per contract; an edge where the role feature
// is positive or the contracts share a CAV (feature 0 marks "related but not
// overlapping").
EmploymentGraph build_employment_graph(const std::vector<EmploymentContract>& contracts,
                                       const ExecutionReport& report,
                                       const TwinResourcePool& pool, Role role);

// Information both contracts produced about the same targets:
// sum over targets of min(info by c1, info by c2).
double repeated_information(const EmploymentContract& c1, const EmploymentContract& c2,
                            const ExecutionReport& report);

// Distinct pool cells referenced by receipts of both contracts.
int reused_resources(const EmploymentContract& c1, const EmploymentContract& c2,
                     const TwinResourcePool& pool);

// Edge-list text dump: one `(a, b, feature)` line per edge after a vertex
// feature table. Stable across runs, used for golden-file tests.
std::string graph_dump(const EmploymentGraph& g);

}  // namespace iscc
