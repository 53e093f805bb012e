#pragma once
// Executable models of the processes that turn pool resources into
// information: active wireless sensing (dedicated beam + spectrum), passive
// wireless sensing (piggybacks on a communication beam), communication
// transfer and computing extraction, plus local/cloud fusion.

#include <map>
#include <optional>
#include <vector>

#include "iscc/resource_pool.hpp"
#include "iscc/rng.hpp"
#include "iscc/scenario.hpp"

namespace iscc {

enum class SensingMode { Aws, Pws };

enum class ComputeSite { Local, Edge };

struct SensingResult {
  int target_id = 0;
  SensingMode mode = SensingMode::Aws;
  double data_volume = 0.0;        // data units
  double q = 0.0;                  // detection quality in [0,1]
  double false_alarm_volume = 0.0;  // data units that carry no information
  std::vector<ReceiptId> receipts;
};

struct InformationRecord {
  int target_id = 0;
  double info = 0.0;  // information units, <= q * I_t
  ComputeSite site = ComputeSite::Local;
  int contract_id = -1;
};

// Detection quality after n independent per-slot trials at probability p.
double detection_quality(double p, int n);

// Active sensing: the space receipt must track the target's bearing sector at
// every slot and the freq receipt must cover the same slots. rng is required
// in sampled mode.
SensingResult aws_sense(const Scenario& s, const TwinResourcePool& pool, int cav_id,
                        int nct_id, ReceiptId space_receipt, ReceiptId freq_receipt,
                        const ProcessParams& params, Rng* rng = nullptr);

// Passive sensing: rides an existing communication link of the same CAV. The
// receipt is either a live comm allocation (comm_dest_rsu set) or a share of
// one; no new space/freq capacity is consumed.
SensingResult pws_sense(const Scenario& s, const TwinResourcePool& pool, int cav_id,
                        int nct_id, ReceiptId comm_receipt, const ProcessParams& params,
                        Rng* rng = nullptr);

// Moves sensing data over a communication link. Returns the transferred
// volume: min(r0 * cells, data_volume).
double comm_transfer(const Scenario& s, const TwinResourcePool& pool, int cav_id,
                     int rsu_id, ReceiptId freq_receipt, double data_volume,
                     const ProcessParams& params);

// Extracts information from sensing data with the compute cells of one site.
// required = ceil(c_per_unit * (data + false alarms)); a shortfall of cells
// scales the extracted information linearly. False-alarm data consumes
// compute but contributes nothing.
InformationRecord compute_extract(const SensingResult& sr, const TwinResourcePool& pool,
                                  ReceiptId compute_receipt, SiteId site, double info_value,
                                  const ProcessParams& params, int contract_id = -1);

// Local/cloud fusion: per target the best single observation wins; duplicate
// observations do not add.
std::map<int, double> fuse_information(const std::vector<InformationRecord>& records);

// Resolves the underlying communication allocation of a receipt: the receipt
// itself when it carries comm_dest_rsu, otherwise the parent it shares.
// Throws DependencyError when there is none.
const AllocationReceipt& resolve_comm_link(const TwinResourcePool& pool, ReceiptId id);

}  // namespace iscc
