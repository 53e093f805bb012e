#include "iscc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iscc/rng.hpp"
#include "json.hpp"

namespace iscc {

using nlohmann::json;

namespace {

constexpr double kEps = 1e-9;

// Highest ladder rung the template's quality fulfills; 0 when below the first
// positive rung.
int achievable_level(const std::vector<double>& ladder, double q) {
  int level = 0;
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (q + kEps >= ladder[i]) level = static_cast<int>(i);
  return level;
}

// Expected payment if the template delivers in full: every demanding buyer
// above threshold pays price * info.
double estimated_payment(const DemandProfile& demand, int target, double info) {
  double payment = 0.0;
  for (const auto& [buyer, lines] : demand.buyers)
    for (const auto& d : lines)
      if (d.target == target && info + kEps >= d.q_min * d.info_value)
        payment += d.unit_price * std::min(info, d.info_value);
  return payment;
}

OrderLine make_line(const Scenario& s, const DemandProfile& demand, int target,
                    double quality) {
  OrderLine line;
  line.target = target;
  line.ordered_quality = quality;
  line.info_value = s.nct(target).info_value;
  line.employer = employer_of_record(demand, target);
  line.speculative = !line.employer.has_value();
  return line;
}

}  // namespace

AllocatorResult random_allocator(std::uint64_t seed, const Scenario& s,
                                 TwinResourcePool& pool, const DemandProfile& demand,
                                 const ProcessParams& params) {
  Rng rng(seed);
  const auto& ladder = s.market.quality_ladder;

  DistributorDecision decision;
  for (int target : demand.demanded_targets())
    decision[target] = static_cast<int>(uniform_index(rng, ladder.size()));

  AllocatorResult out;
  out.order = place_order(s, demand, decision);
  int next_id = 0;
  for (std::size_t i = 0; i < out.order.lines.size(); ++i) {
    const OrderLine& line = out.order.lines[i];
    const auto templates = enumerate_templates(s, pool, line, params);
    const auto pick = uniform_index(rng, templates.size() + 1);
    if (pick == templates.size()) {
      out.skipped.push_back({static_cast<int>(i), "left unserved by random draw"});
      continue;
    }
    out.contracts.push_back(
        instantiate_template(s, pool, line, templates[pick], next_id++));
  }
  return out;
}

AllocatorResult greedy_allocator(const Scenario& s, TwinResourcePool& pool,
                                 const DemandProfile& demand, const ProcessParams& params) {
  const auto& ladder = s.market.quality_ladder;
  AllocatorResult out;
  if (ladder.size() < 2) return out;

  struct Ranked {
    int target;
    double value;  // total demand price * I_t
  };
  std::vector<Ranked> ranked;
  for (int target : demand.demanded_targets()) {
    double total_price = 0.0;
    for (const auto& [buyer, lines] : demand.buyers)
      for (const auto& d : lines)
        if (d.target == target) total_price += d.unit_price;
    ranked.push_back({target, total_price * s.nct(target).info_value});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return a.value != b.value ? a.value > b.value : a.target < b.target;
  });

  int next_id = 0;
  for (const auto& r : ranked) {
    const OrderLine probe = make_line(s, demand, r.target, ladder[1]);
    const auto templates = enumerate_templates(s, pool, probe, params);

    int best = -1;
    double best_cpi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < templates.size(); ++i) {
      const ContractTemplate& t = templates[i];
      if (t.expected_info <= 0.0) continue;
      if (estimated_payment(demand, r.target, t.expected_info) <= 0.0) continue;
      const double cpi = t.expected_cost / t.expected_info;
      const bool better =
          cpi < best_cpi - kEps ||
          (std::fabs(cpi - best_cpi) <= kEps && best >= 0 &&
           t.mode == SensingMode::Pws && templates[best].mode != SensingMode::Pws);
      if (best < 0 || better) {
        best = static_cast<int>(i);
        best_cpi = cpi;
      }
    }
    if (best < 0) continue;
    const ContractTemplate& t = templates[best];
    if (estimated_payment(demand, r.target, t.expected_info) < t.expected_cost) continue;

    const int level = achievable_level(ladder, t.expected_quality);
    OrderLine line = make_line(s, demand, r.target, ladder[level]);
    out.contracts.push_back(instantiate_template(s, pool, line, t, next_id++));
    out.order.lines.push_back(line);
  }
  std::sort(out.order.lines.begin(), out.order.lines.end(),
            [](const OrderLine& a, const OrderLine& b) { return a.target < b.target; });
  return out;
}

namespace {

struct SearchState {
  const Scenario* s = nullptr;
  TwinResourcePool* pool = nullptr;
  const DemandProfile* demand = nullptr;
  const ProcessParams* params = nullptr;
  const OracleCaps* caps = nullptr;
  bool prune = true;

  std::vector<int> targets;
  std::vector<double> suffix_bound;  // optimistic gross of targets i..end
  std::vector<OracleChoice> current;
  std::vector<OracleChoice> best_choice;
  double best_net = -std::numeric_limits<double>::infinity();
  long long nodes = 0;
};

void search(SearchState& st, std::size_t i, double net_acc) {
  ++st.nodes;
  if (i == st.targets.size()) {
    if (net_acc > st.best_net) {
      st.best_net = net_acc;
      st.best_choice = st.current;
    }
    return;
  }
  if (st.prune && net_acc + st.suffix_bound[i] <= st.best_net) return;

  // skip first: lexicographically smallest choice
  search(st, i + 1, net_acc);

  const auto& ladder = st.s->market.quality_ladder;
  if (ladder.size() < 2) return;
  const int target = st.targets[i];
  const OrderLine probe = make_line(*st.s, *st.demand, target, ladder[1]);
  const auto templates = enumerate_templates(*st.s, *st.pool, probe, *st.params);
  if (static_cast<int>(templates.size()) > st.caps->max_templates_per_target)
    throw SizeError("target " + std::to_string(target) + " has " +
                    std::to_string(templates.size()) + " templates, cap is " +
                    std::to_string(st.caps->max_templates_per_target));

  for (const ContractTemplate& t : templates) {
    // Revenue depends on the delivered quality, not the ordered level, so the
    // level is pinned to the highest rung the template fulfills.
    const int level = achievable_level(ladder, t.expected_quality);
    OrderLine line = make_line(*st.s, *st.demand, target, ladder[level]);
    EmploymentContract c;
    try {
      c = instantiate_template(*st.s, *st.pool, line, t, static_cast<int>(i));
    } catch (const Error&) {
      continue;  // lost a race against nothing; defensive only
    }
    const double delta =
        estimated_payment(*st.demand, target, t.expected_info) - t.expected_cost;
    OracleChoice choice;
    choice.target = target;
    choice.ladder_index = level;
    choice.employee = t.employee;
    choice.mode = t.mode;
    choice.slots = t.slots;
    choice.site = t.compute_site;
    st.current.push_back(choice);
    search(st, i + 1, net_acc + delta);
    st.current.pop_back();
    auto receipts = c.all_receipts();
    for (auto it = receipts.rbegin(); it != receipts.rend(); ++it) st.pool->release(*it);
  }
}

}  // namespace

AllocatorResult apply_oracle_choice(const Scenario& s, TwinResourcePool& pool,
                                    const DemandProfile& demand, const ProcessParams& params,
                                    const std::vector<OracleChoice>& choice) {
  const auto& ladder = s.market.quality_ladder;
  AllocatorResult out;
  int next_id = 0;
  for (const OracleChoice& ch : choice) {
    if (ch.ladder_index < 1 || ch.ladder_index >= static_cast<int>(ladder.size()))
      throw DecisionError("oracle choice with ladder index " +
                          std::to_string(ch.ladder_index));
    OrderLine line = make_line(s, demand, ch.target, ladder[ch.ladder_index]);
    const auto templates = enumerate_templates(s, pool, line, params);
    const ContractTemplate* match = nullptr;
    for (const auto& t : templates)
      if (t.employee == ch.employee && t.mode == ch.mode && t.slots == ch.slots &&
          t.compute_site == ch.site) {
        match = &t;
        break;
      }
    if (match == nullptr)
      throw DecisionError("oracle choice for target " + std::to_string(ch.target) +
                          " has no matching feasible template");
    out.contracts.push_back(instantiate_template(s, pool, line, *match, next_id++));
    out.order.lines.push_back(line);
  }
  std::sort(out.order.lines.begin(), out.order.lines.end(),
            [](const OrderLine& a, const OrderLine& b) { return a.target < b.target; });
  return out;
}

OracleResult exhaustive_optimal(const Scenario& s, const TwinResourcePool& pool,
                                const DemandProfile& demand, const ProcessParams& params,
                                OracleCaps caps, bool prune) {
  if (static_cast<int>(s.ncts.size()) > caps.max_ncts)
    throw SizeError("instance has " + std::to_string(s.ncts.size()) + " NCTs, cap is " +
                    std::to_string(caps.max_ncts));

  TwinResourcePool work = pool;
  SearchState st;
  st.s = &s;
  st.pool = &work;
  st.demand = &demand;
  st.params = &params;
  st.caps = &caps;
  st.prune = prune;
  st.targets = demand.demanded_targets();

  st.suffix_bound.assign(st.targets.size() + 1, 0.0);
  for (std::size_t i = st.targets.size(); i-- > 0;) {
    const double I_t = s.nct(st.targets[i]).info_value;
    double gross_cap = 0.0;
    for (const auto& [buyer, lines] : demand.buyers)
      for (const auto& d : lines)
        if (d.target == st.targets[i]) gross_cap += d.unit_price * I_t;
    st.suffix_bound[i] = st.suffix_bound[i + 1] + gross_cap;
  }

  search(st, 0, 0.0);

  OracleResult out;
  out.choice = st.best_choice;
  out.nodes_explored = st.nodes;

  // Authoritative net: replay the argmax through the real pipeline.
  TwinResourcePool verify = pool;
  AllocatorResult applied = apply_oracle_choice(s, verify, demand, params, out.choice);
  ExecutionReport report = execute_round(s, verify, applied.contracts, params);
  TransactionLedger ledger = settle(s, demand, applied.order, applied.contracts, report);
  if (std::fabs(ledger.net_profit - st.best_net) > 1e-6)
    throw Error("oracle bookkeeping mismatch: search " + std::to_string(st.best_net) +
                ", pipeline " + std::to_string(ledger.net_profit));
  out.best_net = ledger.net_profit;
  return out;
}

std::string oracle_to_json(const OracleResult& r) {
  json j;
  j["best_net"] = r.best_net;
  j["nodes_explored"] = r.nodes_explored;
  j["choice"] = json::array();
  for (const auto& c : r.choice) {
    json e;
    e["target"] = c.target;
    e["ladder_index"] = c.ladder_index;
    e["employee"] = c.employee;
    e["mode"] = c.mode == SensingMode::Aws ? "aws" : "pws";
    e["slots"] = c.slots;
    e["site"] = to_string(c.site);
    j["choice"].push_back(e);
  }
  return j.dump(2);
}

}  // namespace iscc
