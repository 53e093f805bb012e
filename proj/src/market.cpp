#include "iscc/market.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "iscc/textio.hpp"
#include "json.hpp"

namespace iscc {

using nlohmann::json;

namespace {

// Tolerance for quality-threshold comparisons; keeps ladder values that are
// not exactly representable from flipping a sale or a fulfillment check.
constexpr double kQualityEps = 1e-9;

}  // namespace

bool DemandProfile::demands(int buyer, int target) const {
  auto it = buyers.find(buyer);
  if (it == buyers.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const DemandLine& d) { return d.target == target; });
}

std::vector<int> DemandProfile::demanded_targets() const {
  std::set<int> t;
  for (const auto& [buyer, lines] : buyers)
    for (const auto& d : lines) t.insert(d.target);
  return {t.begin(), t.end()};
}

std::vector<ReceiptId> EmploymentContract::all_receipts() const {
  std::vector<ReceiptId> out;
  for (const auto& r :
       {space_receipt, sense_freq_receipt, comm_receipt, piggyback_receipt, compute_receipt})
    if (r) out.push_back(*r);
  return out;
}

std::vector<InformationRecord> ExecutionReport::produced_records() const {
  std::vector<InformationRecord> out;
  for (const auto& o : outcomes)
    if (o.produced) out.push_back(*o.produced);
  return out;
}

DemandProfile publish_demand(const Scenario& s) { return publish_demand(s, s.market); }

DemandProfile publish_demand(const Scenario& s, const MarketConfig& cfg) {
  DemandProfile out;
  for (const auto& cav : s.cavs) {
    std::vector<DemandLine> lines;
    for (int target : visible_targets(s, cav.id)) {
      DemandLine d;
      d.target = target;
      d.unit_price = cfg.unit_price;
      d.q_min = cfg.q_min;
      d.info_value = s.nct(target).info_value;
      lines.push_back(d);
    }
    if (!lines.empty()) out.buyers.emplace(cav.id, std::move(lines));
  }
  return out;
}

std::optional<int> employer_of_record(const DemandProfile& demand, int target) {
  std::optional<int> employer;
  double best_price = -1.0;
  for (const auto& [buyer, lines] : demand.buyers)
    for (const auto& d : lines)
      if (d.target == target && d.unit_price > best_price) {
        best_price = d.unit_price;
        employer = buyer;
      }
  return employer;
}

InformationOrder place_order(const Scenario& s, const DemandProfile& demand,
                             const DistributorDecision& decision) {
  const auto& ladder = s.market.quality_ladder;
  InformationOrder order;
  for (const auto& [target, level] : decision) {
    if (!s.has_nct(target))
      throw DecisionError("order names unknown target " + std::to_string(target));
    if (level < 0 || level >= static_cast<int>(ladder.size()))
      throw DecisionError("ladder index " + std::to_string(level) + " out of range");
    if (level == 0) continue;  // not ordered

    OrderLine line;
    line.target = target;
    line.ordered_quality = ladder[level];
    line.info_value = s.nct(target).info_value;
    line.employer = employer_of_record(demand, target);
    line.speculative = !line.employer.has_value();
    order.lines.push_back(line);
  }
  std::sort(order.lines.begin(), order.lines.end(),
            [](const OrderLine& a, const OrderLine& b) { return a.target < b.target; });
  return order;
}

namespace {

long long required_compute_cells(const ProcessParams& p, int slots) {
  const double load = p.d0 * slots * (1.0 + p.p_fa);
  return static_cast<long long>(std::ceil(p.c_per_unit * load));
}

long long required_comm_cells(const ProcessParams& p, int slots) {
  const double raw = p.d0 * slots * (1.0 + p.p_fa);
  if (raw <= 0.0) return 0;
  return std::max<long long>(1, static_cast<long long>(std::ceil(raw / p.r0)));
}

// Lowest free subcarrier at slot t, skipping cells already picked for this
// template. Returns -1 when none is free.
int lowest_free_subcarrier(const TwinResourcePool& pool, int t, int subcarriers,
                           const std::set<Cell>& taken) {
  for (int f = 0; f < subcarriers; ++f) {
    Cell c{t, f};
    if (taken.count(c)) continue;
    if (pool.is_free(PoolKind::Freq, {}, c)) return f;
  }
  return -1;
}

// First `count` free compute cells of the site, time-major. Empty when the
// grid is missing or too full.
std::vector<Cell> pick_compute_cells(const TwinResourcePool& pool, SiteId site,
                                     long long count) {
  std::vector<Cell> out;
  if (count == 0) return out;
  if (!pool.has_grid(PoolKind::Compute, site)) return out;
  auto [t_max, k_max] = pool.grid_shape(PoolKind::Compute, site);
  for (int t = 0; t < t_max && static_cast<long long>(out.size()) < count; ++t)
    for (int k = 0; k < k_max && static_cast<long long>(out.size()) < count; ++k)
      if (pool.is_free(PoolKind::Compute, site, {t, k})) out.push_back({t, k});
  if (static_cast<long long>(out.size()) < count) out.clear();
  return out;
}

double template_cost(const ContractTemplate& t, const CostWeights& w) {
  return w.space * static_cast<double>(t.space_cells.size()) +
         w.freq * static_cast<double>(t.sense_freq_cells.size() + t.comm_freq_cells.size()) +
         w.compute * static_cast<double>(t.compute_cells.size());
}

}  // namespace

std::vector<ContractTemplate> enumerate_templates(const Scenario& s,
                                                  const TwinResourcePool& pool,
                                                  const OrderLine& line,
                                                  const ProcessParams& params) {
  std::vector<ContractTemplate> out;
  const double I_t = s.nct(line.target).info_value;

  for (const auto& employee : s.cavs) {
    const double dist = distance(employee.position, s.nct(line.target).position);
    if (dist > employee.security_radius) continue;

    // Active sensing needs a well-defined bearing sector.
    int sector = -1;
    try {
      sector = bearing_sector(s, employee.id, line.target);
    } catch (const GeometryError&) {
      sector = -1;
    }

    for (int slots = 1; slots <= 2; ++slots) {
      const long long compute_needed = required_compute_cells(params, slots);

      // --- active sensing ---
      const double q_aws = detection_quality(params.p_aws, slots);
      if (sector >= 0 && q_aws + kQualityEps >= line.ordered_quality &&
          pool.has_grid(PoolKind::Space, cav_site(employee.id))) {
        std::vector<Cell> space_cells, sense_freq;
        std::set<Cell> taken_freq;
        auto [t_max, a_max] = pool.grid_shape(PoolKind::Space, cav_site(employee.id));
        (void)a_max;
        for (int t = 0; t < t_max && static_cast<int>(space_cells.size()) < slots; ++t) {
          if (!pool.is_free(PoolKind::Space, cav_site(employee.id), {t, sector})) continue;
          const int f = lowest_free_subcarrier(pool, t, s.subcarriers, taken_freq);
          if (f < 0) continue;
          space_cells.push_back({t, sector});
          sense_freq.push_back({t, f});
          taken_freq.insert({t, f});
        }
        if (static_cast<int>(space_cells.size()) == slots) {
          // local compute
          {
            auto cc = pick_compute_cells(pool, cav_site(employee.id), compute_needed);
            if (compute_needed == 0 || !cc.empty()) {
              ContractTemplate t;
              t.employee = employee.id;
              t.mode = SensingMode::Aws;
              t.slots = slots;
              t.compute_site = cav_site(employee.id);
              t.space_cells = space_cells;
              t.sense_freq_cells = sense_freq;
              t.compute_cells = std::move(cc);
              t.expected_quality = q_aws;
              t.expected_info = q_aws * I_t;
              t.expected_cost = template_cost(t, pool.weights());
              out.push_back(std::move(t));
            }
          }
          // edge compute through each RSU
          for (const auto& rsu : s.rsus) {
            const long long comm_needed = required_comm_cells(params, slots);
            std::vector<Cell> comm_cells;
            std::set<Cell> taken = taken_freq;
            for (int t = 0; t < s.time_horizon &&
                            static_cast<long long>(comm_cells.size()) < comm_needed;
                 ++t) {
              const int f = lowest_free_subcarrier(pool, t, s.subcarriers, taken);
              if (f < 0) continue;
              comm_cells.push_back({t, f});
              taken.insert({t, f});
            }
            if (static_cast<long long>(comm_cells.size()) < comm_needed) continue;
            auto cc = pick_compute_cells(pool, rsu_site(rsu.id), compute_needed);
            if (compute_needed > 0 && cc.empty()) continue;
            ContractTemplate t;
            t.employee = employee.id;
            t.mode = SensingMode::Aws;
            t.slots = slots;
            t.compute_site = rsu_site(rsu.id);
            t.rsu = rsu.id;
            t.space_cells = space_cells;
            t.sense_freq_cells = sense_freq;
            t.comm_freq_cells = std::move(comm_cells);
            t.compute_cells = std::move(cc);
            t.expected_quality = q_aws;
            t.expected_info = q_aws * I_t;
            t.expected_cost = template_cost(t, pool.weights());
            out.push_back(std::move(t));
          }
        }
      }

      // --- passive sensing: piggyback on the employee's first suitable live
      // comm link; computes locally so the contract consumes no new
      // space/freq cells ---
      const double q_pws = detection_quality(params.p_pws, slots);
      if (q_pws + kQualityEps < line.ordered_quality) continue;
      for (ReceiptId rid : pool.live_receipts()) {
        const AllocationReceipt& r = pool.receipt(rid);
        if (r.request.kind != PoolKind::Freq || r.request.owner != cav_site(employee.id) ||
            !r.request.comm_dest_rsu)
          continue;
        double beam, target_bearing;
        try {
          beam = bearing_deg(employee.position, s.rsu(*r.request.comm_dest_rsu).position);
          target_bearing = bearing_deg(employee.position, s.nct(line.target).position);
        } catch (const GeometryError&) {
          continue;
        }
        if (angular_distance_deg(beam, target_bearing) > params.theta_tol_deg) continue;

        // one cell per distinct slot, earliest first
        std::vector<Cell> shared;
        std::set<int> seen_slots;
        for (const Cell& c : r.request.cells) {
          if (seen_slots.count(c.t)) continue;
          shared.push_back(c);
          seen_slots.insert(c.t);
          if (static_cast<int>(shared.size()) == slots) break;
        }
        if (static_cast<int>(shared.size()) < slots) break;
        auto cc = pick_compute_cells(pool, cav_site(employee.id), compute_needed);
        if (compute_needed > 0 && cc.empty()) break;
        ContractTemplate t;
        t.employee = employee.id;
        t.mode = SensingMode::Pws;
        t.slots = slots;
        t.compute_site = cav_site(employee.id);
        t.piggyback_on = rid;
        t.piggyback_cells = std::move(shared);
        t.compute_cells = std::move(cc);
        t.expected_quality = q_pws;
        t.expected_info = q_pws * I_t;
        t.expected_cost = template_cost(t, pool.weights());
        out.push_back(std::move(t));
        break;  // lowest receipt id only
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const ContractTemplate& a, const ContractTemplate& b) {
    return std::tuple(a.employee, a.mode, a.slots, a.compute_site) <
           std::tuple(b.employee, b.mode, b.slots, b.compute_site);
  });
  return out;
}

EmploymentContract instantiate_template(const Scenario& s, TwinResourcePool& pool,
                                        const OrderLine& line, const ContractTemplate& t,
                                        int contract_id) {
  EmploymentContract c;
  c.contract_id = contract_id;
  c.employee = t.employee;
  c.employer = line.employer.value_or(t.employee);
  c.rsu = t.rsu;
  c.target = line.target;
  c.mode = t.mode;
  c.ordered_quality = line.ordered_quality;
  c.target_info_value = s.nct(line.target).info_value;

  std::vector<ReceiptId> allocated;
  auto rollback = [&]() {
    for (auto it = allocated.rbegin(); it != allocated.rend(); ++it) pool.release(*it);
  };
  try {
    if (t.mode == SensingMode::Aws) {
      BlockRequest req;
      req.kind = PoolKind::Space;
      req.owner = cav_site(t.employee);
      req.cells = t.space_cells;
      c.space_receipt = pool.allocate(req).id;
      allocated.push_back(*c.space_receipt);

      req = {};
      req.kind = PoolKind::Freq;
      req.owner = cav_site(t.employee);
      req.cells = t.sense_freq_cells;
      c.sense_freq_receipt = pool.allocate(req).id;
      allocated.push_back(*c.sense_freq_receipt);

      if (t.rsu) {
        req = {};
        req.kind = PoolKind::Freq;
        req.owner = cav_site(t.employee);
        req.cells = t.comm_freq_cells;
        req.comm_dest_rsu = t.rsu;
        c.comm_receipt = pool.allocate(req).id;
        allocated.push_back(*c.comm_receipt);
      }
    } else {
      BlockRequest req;
      req.kind = PoolKind::Freq;
      req.owner = cav_site(t.employee);
      req.cells = t.piggyback_cells;
      req.share_with = t.piggyback_on;
      c.piggyback_receipt = pool.allocate(req).id;
      allocated.push_back(*c.piggyback_receipt);
    }
    if (!t.compute_cells.empty()) {
      BlockRequest req;
      req.kind = PoolKind::Compute;
      req.owner = t.compute_site;
      req.cells = t.compute_cells;
      c.compute_receipt = pool.allocate(req).id;
      allocated.push_back(*c.compute_receipt);
    }
  } catch (const Error&) {
    rollback();
    throw;
  }
  return c;
}

FormResult form_contracts(const Scenario& s, TwinResourcePool& pool,
                          const InformationOrder& order, const PurchaserDecision& decision,
                          const ProcessParams& params) {
  if (decision.size() != order.lines.size())
    throw DecisionError("purchaser decision size " + std::to_string(decision.size()) +
                        " does not match " + std::to_string(order.lines.size()) + " lines");
  FormResult out;
  int next_id = 0;
  for (std::size_t i = 0; i < order.lines.size(); ++i) {
    const OrderLine& line = order.lines[i];
    if (!decision[i]) {
      out.skipped.push_back({static_cast<int>(i), "left unserved by decision"});
      continue;
    }
    const auto templates = enumerate_templates(s, pool, line, params);
    const int choice = *decision[i];
    if (choice < 0 || choice >= static_cast<int>(templates.size()))
      throw DecisionError("template index " + std::to_string(choice) + " out of range for line " +
                          std::to_string(i));
    try {
      out.contracts.push_back(
          instantiate_template(s, pool, line, templates[choice], next_id));
      ++next_id;
    } catch (const Error& e) {
      out.skipped.push_back({static_cast<int>(i), e.what()});
    }
  }
  return out;
}

ExecutionReport execute_round(const Scenario& s, const TwinResourcePool& pool,
                              std::vector<EmploymentContract>& contracts,
                              const ProcessParams& params, Rng* rng) {
  std::sort(contracts.begin(), contracts.end(),
            [](const EmploymentContract& a, const EmploymentContract& b) {
              return a.contract_id < b.contract_id;
            });
  ExecutionReport report;
  for (auto& c : contracts) {
    ContractOutcome o;
    o.contract_id = c.contract_id;
    for (ReceiptId rid : c.all_receipts()) o.cost += pool.receipt(rid).weighted_cost;
    try {
      SensingResult sr =
          c.mode == SensingMode::Aws
              ? aws_sense(s, pool, c.employee, c.target, *c.space_receipt,
                          *c.sense_freq_receipt, params, rng)
              : pws_sense(s, pool, c.employee, c.target, *c.piggyback_receipt, params, rng);
      o.sensing = sr;

      if (c.rsu) {
        const double raw = sr.data_volume + sr.false_alarm_volume;
        o.transferred = comm_transfer(s, pool, c.employee, *c.rsu, *c.comm_receipt, raw, params);
        if (o.transferred + 1e-9 < raw)
          throw DependencyError("comm capacity " + std::to_string(o.transferred) +
                                " below sensing volume " + std::to_string(raw) +
                                "; data not fully at the edge");
      }

      InformationRecord rec;
      if (c.compute_receipt) {
        const SiteId site = pool.receipt(*c.compute_receipt).request.owner;
        rec = compute_extract(sr, pool, *c.compute_receipt, site, c.target_info_value, params,
                              c.contract_id);
      } else {
        // zero data load: nothing to mine, extraction is complete by definition
        rec.target_id = c.target;
        rec.info = sr.q * c.target_info_value;
        rec.site = c.rsu ? ComputeSite::Edge : ComputeSite::Local;
        rec.contract_id = c.contract_id;
      }
      o.produced = rec;
      c.produced = rec;
    } catch (const Error& e) {
      o.error = e.what();
    }
    report.total_cost += o.cost;
    report.outcomes.push_back(std::move(o));
  }
  return report;
}

TransactionLedger settle(const Scenario& s, const DemandProfile& demand,
                         const InformationOrder& order,
                         const std::vector<EmploymentContract>& contracts,
                         const ExecutionReport& report) {
  TransactionLedger ledger;
  const auto records = report.produced_records();
  const auto fused = fuse_information(records);

  for (const auto& r : records) ledger.produced_info += r.info;
  ledger.resource_cost = report.total_cost;
  for (const auto& o : report.outcomes) ledger.contract_costs[o.contract_id] = o.cost;

  for (const auto& [target, info] : fused) {
    int paying = 0;
    for (const auto& [buyer, lines] : demand.buyers) {
      for (const auto& d : lines) {
        if (d.target != target) continue;
        if (info + kQualityEps >= d.q_min * d.info_value) {
          const double payment = d.unit_price * std::min(info, d.info_value);
          ledger.buyer_payments[buyer] += payment;
          ledger.gross_income += payment;
          ++paying;
        }
      }
    }
    ledger.buyers_paid[target] = paying;
    if (paying == 0) {
      ledger.unsold_info[target] = info;
    } else {
      ledger.sold_info += info;
      if (paying >= 2) ledger.reused_sold_info += info;
    }
  }

  for (const OrderLine& line : order.lines) {
    bool fulfilled = false;
    for (const auto& c : contracts) {
      if (c.target != line.target || !c.produced) continue;
      if (c.produced->info + kQualityEps >= line.ordered_quality * line.info_value) {
        fulfilled = true;
        break;
      }
    }
    if (!fulfilled) ledger.unfulfilled.push_back(line);
  }

  ledger.net_profit = ledger.gross_income - ledger.resource_cost;
  return ledger;
}

std::string ledger_to_json(const TransactionLedger& ledger) {
  json j;
  j["gross_income"] = ledger.gross_income;
  j["resource_cost"] = ledger.resource_cost;
  j["net_profit"] = ledger.net_profit;
  j["buyer_payments"] = json::object();
  for (const auto& [b, v] : ledger.buyer_payments) j["buyer_payments"][std::to_string(b)] = v;
  j["contract_costs"] = json::object();
  for (const auto& [c, v] : ledger.contract_costs) j["contract_costs"][std::to_string(c)] = v;
  j["unsold_info"] = json::object();
  for (const auto& [t, v] : ledger.unsold_info) j["unsold_info"][std::to_string(t)] = v;
  j["unfulfilled"] = json::array();
  for (const auto& line : ledger.unfulfilled)
    j["unfulfilled"].push_back({{"target", line.target}, {"quality", line.ordered_quality}});
  j["produced_info"] = ledger.produced_info;
  j["sold_info"] = ledger.sold_info;
  j["reused_sold_info"] = ledger.reused_sold_info;
  j["hit_rate"] = ledger.hit_rate();
  j["reuse_rate"] = ledger.reuse_rate();
  return j.dump(2);
}

std::string ledger_csv_header() { return "episode,gross,cost,net,hit_rate,reuse_rate,unfulfilled"; }

std::string ledger_csv_row(int episode, const TransactionLedger& ledger) {
  std::ostringstream os;
  os << episode << ',' << fmt_double(ledger.gross_income) << ','
     << fmt_double(ledger.resource_cost) << ',' << fmt_double(ledger.net_profit) << ','
     << fmt_double(ledger.hit_rate()) << ',' << fmt_double(ledger.reuse_rate()) << ','
     << ledger.unfulfilled.size();
  return os.str();
}

}  // namespace iscc
