#include "iscc/graph_model.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "iscc/textio.hpp"

namespace iscc {

FlowGraph build_flow_graph(const std::vector<EmploymentContract>& contracts) {
  FlowGraph g;
  for (const auto& c : contracts) {
    const FlowNode employee{false, c.employee};
    const FlowNode employer{false, c.employer};
    g.nodes.insert(employee);
    g.nodes.insert(employer);
    if (c.rsu) {
      const FlowNode rsu{true, *c.rsu};
      g.nodes.insert(rsu);
      g.edges.push_back({employee, rsu, c.contract_id});
      g.edges.push_back({rsu, employer, c.contract_id});
    } else {
      // self-employment is the employee -> employee self-loop
      g.edges.push_back({employee, employer, c.contract_id});
    }
  }
  return g;
}

CavDigraph fold_rsus(const FlowGraph& fg) {
  CavDigraph out;
  std::map<int, std::vector<FlowEdge>> by_contract;
  for (const auto& e : fg.edges) by_contract[e.contract_id].push_back(e);

  for (const auto& [cid, edges] : by_contract) {
    if (edges.size() == 1) {
      const FlowEdge& e = edges.front();
      if (e.from.is_rsu || e.to.is_rsu)
        throw Error("dangling RSU path for contract " + std::to_string(cid));
      out.nodes.insert(e.from.id);
      out.nodes.insert(e.to.id);
      out.edges.push_back({e.from.id, e.to.id, std::nullopt, cid});
    } else if (edges.size() == 2) {
      const FlowEdge* in = nullptr;
      const FlowEdge* outg = nullptr;
      for (const auto& e : edges) {
        if (!e.from.is_rsu && e.to.is_rsu) in = &e;
        if (e.from.is_rsu && !e.to.is_rsu) outg = &e;
      }
      if (in == nullptr || outg == nullptr || in->to != outg->from)
        throw Error("dangling RSU path for contract " + std::to_string(cid));
      out.nodes.insert(in->from.id);
      out.nodes.insert(outg->to.id);
      out.edges.push_back({in->from.id, outg->to.id, in->to.id, cid});
    } else {
      throw Error("contract " + std::to_string(cid) + " contributes " +
                  std::to_string(edges.size()) + " flow edges");
    }
  }
  std::sort(out.edges.begin(), out.edges.end(),
            [](const CavEdge& a, const CavEdge& b) { return a.contract_id < b.contract_id; });
  return out;
}

namespace {

double produced_info_of(const EmploymentContract& c, const ExecutionReport& report) {
  for (const auto& o : report.outcomes)
    if (o.contract_id == c.contract_id) return o.produced ? o.produced->info : 0.0;
  return c.produced ? c.produced->info : 0.0;
}

double cost_of(const EmploymentContract& c, const ExecutionReport& report) {
  for (const auto& o : report.outcomes)
    if (o.contract_id == c.contract_id) return o.cost;
  return 0.0;
}

bool share_cav(const EmploymentContract& a, const EmploymentContract& b) {
  return a.employee == b.employee || a.employee == b.employer || a.employer == b.employee ||
         a.employer == b.employer;
}

}  // namespace

double repeated_information(const EmploymentContract& c1, const EmploymentContract& c2,
                            const ExecutionReport& report) {
  // One record per contract; overlap exists only on a shared target.
  if (c1.target != c2.target) return 0.0;
  return std::min(produced_info_of(c1, report), produced_info_of(c2, report));
}

int reused_resources(const EmploymentContract& c1, const EmploymentContract& c2,
                     const TwinResourcePool& pool) {
  using CellKey = std::tuple<PoolKind, SiteId, Cell>;
  std::set<CellKey> cells1;
  for (ReceiptId rid : c1.all_receipts()) {
    const auto& req = pool.receipt(rid).request;
    for (const Cell& c : req.cells) cells1.insert({req.kind, req.owner, c});
  }
  int shared = 0;
  std::set<CellKey> counted;
  for (ReceiptId rid : c2.all_receipts()) {
    const auto& req = pool.receipt(rid).request;
    for (const Cell& c : req.cells) {
      CellKey key{req.kind, req.owner, c};
      if (cells1.count(key) && counted.insert(key).second) ++shared;
    }
  }
  return shared;
}

EmploymentGraph build_employment_graph(const std::vector<EmploymentContract>& contracts,
                                       const ExecutionReport& report,
                                       const TwinResourcePool& pool, Role role) {
  EmploymentGraph g;
  g.role = role;
  g.feature_dim = kContractFeatureDim;
  for (const auto& c : contracts) {
    g.contract_ids.push_back(c.contract_id);
    g.vertex_features.push_back({produced_info_of(c, report), cost_of(c, report),
                                 c.target_info_value, c.ordered_quality,
                                 c.mode == SensingMode::Pws ? 1.0 : 0.0,
                                 c.self_employment() ? 1.0 : 0.0});
  }
  for (std::size_t i = 0; i < contracts.size(); ++i) {
    for (std::size_t j = i + 1; j < contracts.size(); ++j) {
      const double feature =
          role == Role::Distributor
              ? repeated_information(contracts[i], contracts[j], report)
              : static_cast<double>(reused_resources(contracts[i], contracts[j], pool));
      if (feature > 0.0 || share_cav(contracts[i], contracts[j]))
        g.edges.push_back({static_cast<int>(i), static_cast<int>(j), feature});
    }
  }
  return g;
}

std::string graph_dump(const EmploymentGraph& g) {
  std::ostringstream os;
  os << "role " << (g.role == Role::Distributor ? "distributor" : "purchaser") << "\n";
  os << "vertices " << g.vertex_count() << " dim " << g.feature_dim << "\n";
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    os << v << " contract " << g.contract_ids[v] << " [";
    for (std::size_t i = 0; i < g.vertex_features[v].size(); ++i)
      os << (i ? " " : "") << fmt_double(g.vertex_features[v][i]);
    os << "]\n";
  }
  os << "edges " << g.edges.size() << "\n";
  for (const auto& e : g.edges)
    os << "(" << e.a << ", " << e.b << ", " << fmt_double(e.feature) << ")\n";
  return os.str();
}

}  // namespace iscc
