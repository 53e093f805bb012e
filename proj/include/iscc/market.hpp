#pragma once
// The information-oriented resource trading platform: buyers publish demand,
// the distributor places an information order, the purchaser forms employment
// contracts against the twin resource pool, the round executes and settlement
// computes gross income, resource cost and net profit.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iscc/process_models.hpp"
#include "iscc/resource_pool.hpp"
#include "iscc/scenario.hpp"

namespace iscc {

struct DemandLine {
  int target = -1;
  double unit_price = 0.0;  // cost units per information unit
  double q_min = 0.0;       // accept info amounting to >= q_min * info_value
  double info_value = 0.0;  // I_t snapshot at publication
};

// Buyer (employer CAV) id -> demanded targets. Each CAV demands every NCT in
// its security domain.
struct DemandProfile {
  std::map<int, std::vector<DemandLine>> buyers;

  bool demands(int buyer, int target) const;
  std::vector<int> demanded_targets() const;  // ascending, deduplicated
};

struct OrderLine {
  int target = -1;
  double ordered_quality = 0.0;     // ladder value, > 0 for a live line
  bool speculative = false;         // no buyer currently demands the target
  std::optional<int> employer;      // buyer of record (highest price, lowest id)
  double info_value = 0.0;
};

struct InformationOrder {
  std::vector<OrderLine> lines;  // sorted by target id, one line per target
};

// Distributor decision: target id -> index into the quality ladder.
// Index 0 (quality 0) means "do not order".
using DistributorDecision = std::map<int, int>;

// One feasible way to produce an order line: employee, sensing mode, slot
// count, compute site, and the concrete cells the purchaser would allocate.
struct ContractTemplate {
  int employee = -1;
  SensingMode mode = SensingMode::Aws;
  int slots = 1;
  SiteId compute_site;
  std::optional<int> rsu;  // comm destination (edge compute)

  std::vector<Cell> space_cells;       // AWS sensing beam
  std::vector<Cell> sense_freq_cells;  // AWS sensing spectrum
  std::vector<Cell> comm_freq_cells;   // edge offload link
  std::optional<ReceiptId> piggyback_on;  // PWS: comm receipt to share
  std::vector<Cell> piggyback_cells;      // PWS: shared cells
  std::vector<Cell> compute_cells;

  double expected_quality = 0.0;  // q(slots) for the mode
  double expected_info = 0.0;     // expected_quality * I_t
  double expected_cost = 0.0;     // weighted new cells
};

struct EmploymentContract {
  int contract_id = -1;
  int employer = -1;
  int employee = -1;
  std::optional<int> rsu;  // edge route; empty for local compute
  int target = -1;
  SensingMode mode = SensingMode::Aws;
  double ordered_quality = 0.0;
  double target_info_value = 0.0;

  std::optional<ReceiptId> space_receipt;
  std::optional<ReceiptId> sense_freq_receipt;
  std::optional<ReceiptId> comm_receipt;       // owned comm link (edge)
  std::optional<ReceiptId> piggyback_receipt;  // PWS share of a comm link
  std::optional<ReceiptId> compute_receipt;

  std::optional<InformationRecord> produced;

  bool self_employment() const { return employer == employee && !rsu.has_value(); }
  std::vector<ReceiptId> all_receipts() const;
};

// Per purchaser step: index into enumerate_templates for the line, or empty
// to leave the line unserved.
using PurchaserDecision = std::vector<std::optional<int>>;

struct SkippedLine {
  int line_index = -1;
  std::string reason;
};

struct FormResult {
  std::vector<EmploymentContract> contracts;
  std::vector<SkippedLine> skipped;
};

struct ContractOutcome {
  int contract_id = -1;
  std::optional<SensingResult> sensing;
  double transferred = 0.0;
  std::optional<InformationRecord> produced;
  double cost = 0.0;  // weighted new cells of this contract's receipts
  std::string error;  // empty on success
};

struct ExecutionReport {
  std::vector<ContractOutcome> outcomes;
  double total_cost = 0.0;

  std::vector<InformationRecord> produced_records() const;
};

struct TransactionLedger {
  double gross_income = 0.0;
  double resource_cost = 0.0;
  double net_profit = 0.0;  // gross - cost, exactly
  std::map<int, double> buyer_payments;     // buyer cav -> total paid
  std::map<int, double> contract_costs;     // contract id -> weighted cost
  std::map<int, double> unsold_info;        // target -> produced-but-unsold fused info
  std::vector<OrderLine> unfulfilled;       // order lines not met

  // Settlement accounting reused by episode statistics.
  double produced_info = 0.0;     // sum over records (duplicates included)
  double sold_info = 0.0;         // fused info of targets with >= 1 paying buyer
  double reused_sold_info = 0.0;  // fused info sold to >= 2 buyers
  std::map<int, int> buyers_paid;  // target -> paying buyer count

  double hit_rate() const { return produced_info > 0 ? sold_info / produced_info : 0.0; }
  double reuse_rate() const { return sold_info > 0 ? reused_sold_info / sold_info : 0.0; }
};

// Every CAV demands every NCT in its security domain at the configured unit
// price and quality threshold.
DemandProfile publish_demand(const Scenario& s);
DemandProfile publish_demand(const Scenario& s, const MarketConfig& cfg);

// Builds the order from the distributor's ladder choices. Targets demanded by
// several buyers appear once; unknown targets or ladder indices raise
// DecisionError. Ordering a target nobody demands is allowed (speculative).
InformationOrder place_order(const Scenario& s, const DemandProfile& demand,
                             const DistributorDecision& decision);

// Buyer of record for a target: highest unit price, ties to the lowest buyer
// id; empty when nobody demands it.
std::optional<int> employer_of_record(const DemandProfile& demand, int target);

// All feasible production templates for one order line against the current
// pool state, sorted by (employee, mode, slots, site).
std::vector<ContractTemplate> enumerate_templates(const Scenario& s,
                                                  const TwinResourcePool& pool,
                                                  const OrderLine& line,
                                                  const ProcessParams& params);

// Allocates the template's cells and builds one contract. Rolls the pool back
// and rethrows on any allocation failure.
EmploymentContract instantiate_template(const Scenario& s, TwinResourcePool& pool,
                                        const OrderLine& line, const ContractTemplate& t,
                                        int contract_id);

// Allocates pool blocks per chosen template and forms contracts. Infeasible
// or conflicting choices are skipped with a recorded reason; the pool is left
// clean of partial allocations.
FormResult form_contracts(const Scenario& s, TwinResourcePool& pool,
                          const InformationOrder& order, const PurchaserDecision& decision,
                          const ProcessParams& params);

// Runs sensing -> transfer -> extraction per contract in contract_id order,
// filling `produced`. Per-contract failures are recorded and the round
// continues. rng is used in sampled mode only.
ExecutionReport execute_round(const Scenario& s, const TwinResourcePool& pool,
                              std::vector<EmploymentContract>& contracts,
                              const ProcessParams& params, Rng* rng = nullptr);

// Fuses records, sells to every demanding buyer above threshold (information
// is non-rival) and closes the books: net = gross - cost exactly.
TransactionLedger settle(const Scenario& s, const DemandProfile& demand,
                         const InformationOrder& order,
                         const std::vector<EmploymentContract>& contracts,
                         const ExecutionReport& report);

// JSON serialization of a ledger; key order and number formatting are stable.
std::string ledger_to_json(const TransactionLedger& ledger);

// CSV summary row: episode,gross,cost,net,hit_rate,reuse_rate,unfulfilled.
std::string ledger_csv_header();
std::string ledger_csv_row(int episode, const TransactionLedger& ledger);

}  // namespace iscc
