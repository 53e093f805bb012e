#include "iscc/process_models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace iscc {

double detection_quality(double p, int n) {
  if (n <= 0) return 0.0;
  return 1.0 - std::pow(1.0 - p, n);
}

namespace {

std::set<int> slots_of(const std::vector<Cell>& cells) {
  std::set<int> s;
  for (const Cell& c : cells) s.insert(c.t);
  return s;
}

void require_in_security_domain(const Scenario& s, const CavState& cav, int nct_id) {
  const NctState& n = s.nct(nct_id);
  if (distance(cav.position, n.position) > cav.security_radius)
    throw GeometryError("nct " + std::to_string(nct_id) + " outside security domain of cav " +
                        std::to_string(cav.id));
}

// Fills the stochastic fields of a sensing result. Expected mode uses the
// closed forms; sampled mode draws per-slot Bernoulli trials.
void fill_detection(SensingResult& out, double p, int n, const ProcessParams& params,
                    Rng* rng) {
  out.data_volume = params.d0 * n;
  if (params.mode == ProcessMode::Expected) {
    out.q = detection_quality(p, n);
    out.false_alarm_volume = params.d0 * params.p_fa * n;
    return;
  }
  if (rng == nullptr) throw ValidationError("sampled mode requires an rng");
  bool detected = false;
  int false_alarm_slots = 0;
  for (int i = 0; i < n; ++i) {
    if (bernoulli(*rng, p)) detected = true;
    if (bernoulli(*rng, params.p_fa)) ++false_alarm_slots;
  }
  out.q = detected ? 1.0 : 0.0;
  out.false_alarm_volume = params.d0 * false_alarm_slots;
}

}  // namespace

const AllocationReceipt& resolve_comm_link(const TwinResourcePool& pool, ReceiptId id) {
  if (!pool.is_live(id)) throw DependencyError("no live comm allocation " + std::to_string(id));
  const AllocationReceipt& r = pool.receipt(id);
  if (r.request.kind != PoolKind::Freq)
    throw DependencyError("receipt " + std::to_string(id) + " is not a freq allocation");
  if (r.request.comm_dest_rsu) return r;
  if (r.request.share_with && pool.is_live(*r.request.share_with)) {
    const AllocationReceipt& parent = pool.receipt(*r.request.share_with);
    if (parent.request.comm_dest_rsu) return parent;
  }
  throw DependencyError("receipt " + std::to_string(id) + " has no communication destination");
}

SensingResult aws_sense(const Scenario& s, const TwinResourcePool& pool, int cav_id,
                        int nct_id, ReceiptId space_receipt, ReceiptId freq_receipt,
                        const ProcessParams& params, Rng* rng) {
  const CavState& cav = s.cav(cav_id);
  require_in_security_domain(s, cav, nct_id);

  const AllocationReceipt& space = pool.receipt(space_receipt);
  const AllocationReceipt& freq = pool.receipt(freq_receipt);
  if (space.request.kind != PoolKind::Space || space.request.owner != cav_site(cav_id))
    throw OwnershipError("space receipt not owned by cav " + std::to_string(cav_id));
  if (freq.request.kind != PoolKind::Freq || freq.request.owner != cav_site(cav_id))
    throw OwnershipError("freq receipt not owned by cav " + std::to_string(cav_id));

  // Tracking: the allocated sector must equal the target's bearing sector at
  // every slot of the request (a per-slot check, so a time-varying scenario
  // sequence may legally use different sectors per slot).
  const int sector = bearing_sector(s, cav_id, nct_id);
  for (const Cell& c : space.request.cells)
    if (c.k != sector)
      throw GeometryError("space cell at slot " + std::to_string(c.t) + " points at sector " +
                          std::to_string(c.k) + ", target is in sector " +
                          std::to_string(sector));

  if (slots_of(space.request.cells) != slots_of(freq.request.cells))
    throw GeometryError("freq receipt must cover the same slots as the space receipt");

  SensingResult out;
  out.target_id = nct_id;
  out.mode = SensingMode::Aws;
  out.receipts = {space_receipt, freq_receipt};
  const int n = static_cast<int>(slots_of(space.request.cells).size());
  fill_detection(out, params.p_aws, n, params, rng);
  return out;
}

SensingResult pws_sense(const Scenario& s, const TwinResourcePool& pool, int cav_id,
                        int nct_id, ReceiptId comm_receipt, const ProcessParams& params,
                        Rng* rng) {
  const CavState& cav = s.cav(cav_id);
  require_in_security_domain(s, cav, nct_id);

  if (!pool.is_live(comm_receipt))
    throw DependencyError("no live comm allocation " + std::to_string(comm_receipt));
  const AllocationReceipt& used = pool.receipt(comm_receipt);
  if (used.request.owner != cav_site(cav_id))
    throw OwnershipError("comm receipt not owned by cav " + std::to_string(cav_id));
  const AllocationReceipt& link = resolve_comm_link(pool, comm_receipt);
  const int rsu_id = *link.request.comm_dest_rsu;

  const double beam = bearing_deg(cav.position, s.rsu(rsu_id).position);
  const double target = bearing_deg(cav.position, s.nct(nct_id).position);
  if (angular_distance_deg(beam, target) > params.theta_tol_deg)
    throw RegionError("target bearing " + std::to_string(target) + " deviates more than " +
                      std::to_string(params.theta_tol_deg) + " deg from the comm beam at " +
                      std::to_string(beam));

  SensingResult out;
  out.target_id = nct_id;
  out.mode = SensingMode::Pws;
  out.receipts = {comm_receipt};
  const int n = static_cast<int>(slots_of(used.request.cells).size());
  fill_detection(out, params.p_pws, n, params, rng);
  return out;
}

double comm_transfer(const Scenario& s, const TwinResourcePool& pool, int cav_id,
                     int rsu_id, ReceiptId freq_receipt, double data_volume,
                     const ProcessParams& params) {
  if (!s.has_rsu(rsu_id)) throw LookupError("unknown rsu id " + std::to_string(rsu_id));
  const AllocationReceipt& r = pool.receipt(freq_receipt);
  if (r.request.kind != PoolKind::Freq || r.request.owner != cav_site(cav_id))
    throw OwnershipError("freq receipt not owned by cav " + std::to_string(cav_id));
  if (!r.request.comm_dest_rsu || *r.request.comm_dest_rsu != rsu_id)
    throw OwnershipError("freq receipt is not a comm link to rsu " + std::to_string(rsu_id));
  const double capacity = params.r0 * static_cast<double>(r.request.cells.size());
  return std::min(capacity, data_volume);
}

InformationRecord compute_extract(const SensingResult& sr, const TwinResourcePool& pool,
                                  ReceiptId compute_receipt, SiteId site, double info_value,
                                  const ProcessParams& params, int contract_id) {
  const AllocationReceipt& r = pool.receipt(compute_receipt);
  if (r.request.kind != PoolKind::Compute || r.request.owner != site)
    throw OwnershipError("compute receipt does not belong to site " + to_string(site));

  const double load = sr.data_volume + sr.false_alarm_volume;
  const long long required = static_cast<long long>(std::ceil(params.c_per_unit * load));
  const double fraction =
      required <= 0
          ? 1.0
          : std::min(1.0, static_cast<double>(r.request.cells.size()) /
                              static_cast<double>(required));
  InformationRecord out;
  out.target_id = sr.target_id;
  out.info = fraction * sr.q * info_value;
  out.site = site.kind == SiteKind::Rsu ? ComputeSite::Edge : ComputeSite::Local;
  out.contract_id = contract_id;
  return out;
}

std::map<int, double> fuse_information(const std::vector<InformationRecord>& records) {
  std::map<int, double> fused;
  for (const auto& r : records) {
    auto [it, inserted] = fused.emplace(r.target_id, r.info);
    if (!inserted) it->second = std::max(it->second, r.info);
  }
  return fused;
}

}  // namespace iscc
