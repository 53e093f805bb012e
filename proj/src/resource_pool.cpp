#include "iscc/resource_pool.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace iscc {

using nlohmann::json;

std::string to_string(PoolKind kind) {
  switch (kind) {
    case PoolKind::Space: return "space";
    case PoolKind::Freq: return "freq";
    case PoolKind::Compute: return "compute";
  }
  return "?";
}

std::string to_string(SiteId site) {
  return (site.kind == SiteKind::Cav ? "cav:" : "rsu:") + std::to_string(site.id);
}

TwinResourcePool TwinResourcePool::from_scenario(const Scenario& s, CostWeights weights) {
  std::vector<int> cav_ids;
  std::map<SiteId, int> caps;
  for (const auto& c : s.cavs) {
    cav_ids.push_back(c.id);
    caps[cav_site(c.id)] = c.local_compute_units;
  }
  for (const auto& r : s.rsus) caps[rsu_site(r.id)] = r.edge_compute_units;
  return make(s.time_horizon, s.angle_sectors, s.subcarriers, cav_ids, caps, weights);
}

TwinResourcePool TwinResourcePool::make(int time_horizon, int angle_sectors, int subcarriers,
                                        const std::vector<int>& cav_ids,
                                        const std::map<SiteId, int>& compute_capacities,
                                        CostWeights weights) {
  if (time_horizon < 1 || angle_sectors < 1 || subcarriers < 1)
    throw ValidationError("pool dimensions must be >= 1");
  weights.validate();
  TwinResourcePool p;
  p.weights_ = weights;
  for (int id : cav_ids) {
    Grid g;
    g.t = time_horizon;
    g.k = angle_sectors;
    g.refs.resize(static_cast<std::size_t>(g.t) * g.k);
    p.space_.emplace(id, std::move(g));
  }
  p.freq_.t = time_horizon;
  p.freq_.k = subcarriers;
  p.freq_.refs.resize(static_cast<std::size_t>(time_horizon) * subcarriers);
  for (const auto& [site, cap] : compute_capacities) {
    if (cap < 0) throw ValidationError("compute capacity must be >= 0 for " + to_string(site));
    if (cap == 0) continue;  // site without a grid
    Grid g;
    g.t = time_horizon;
    g.k = cap;
    g.refs.resize(static_cast<std::size_t>(g.t) * g.k);
    p.compute_.emplace(site, std::move(g));
  }
  return p;
}

TwinResourcePool::Grid* TwinResourcePool::find_grid(PoolKind kind, SiteId owner) {
  return const_cast<Grid*>(std::as_const(*this).find_grid(kind, owner));
}

const TwinResourcePool::Grid* TwinResourcePool::find_grid(PoolKind kind, SiteId owner) const {
  switch (kind) {
    case PoolKind::Space: {
      if (owner.kind != SiteKind::Cav) return nullptr;
      auto it = space_.find(owner.id);
      return it == space_.end() ? nullptr : &it->second;
    }
    case PoolKind::Freq:
      return &freq_;
    case PoolKind::Compute: {
      auto it = compute_.find(owner);
      return it == compute_.end() ? nullptr : &it->second;
    }
  }
  return nullptr;
}

double TwinResourcePool::kind_weight(PoolKind kind) const {
  switch (kind) {
    case PoolKind::Space: return weights_.space;
    case PoolKind::Freq: return weights_.freq;
    case PoolKind::Compute: return weights_.compute;
  }
  return 0.0;
}

AllocationReceipt TwinResourcePool::allocate(const BlockRequest& req) {
  if (req.cells.empty()) throw ValidationError("allocation request with no cells");
  if ((req.kind == PoolKind::Space || req.kind == PoolKind::Freq) &&
      req.owner.kind != SiteKind::Cav)
    throw OwnershipError("space/freq allocations are owned by CAVs");

  const Grid* grid = find_grid(req.kind, req.owner);
  if (grid == nullptr)
    throw LookupError("no " + to_string(req.kind) + " grid for " + to_string(req.owner));

  std::set<Cell> cells(req.cells.begin(), req.cells.end());
  for (const Cell& c : cells)
    if (!grid->in_range(c))
      throw BoundsError("cell (" + std::to_string(c.t) + "," + std::to_string(c.k) +
                        ") outside " + to_string(req.kind) + " grid of " + to_string(req.owner));

  if (req.share_with) {
    auto it = receipts_.find(*req.share_with);
    if (it == receipts_.end())
      throw LookupError("share_with receipt " + std::to_string(*req.share_with) + " not live");
    const BlockRequest& parent = it->second.request;
    if (parent.kind != req.kind || parent.owner != req.owner)
      throw OwnershipError("sharing requires identical pool kind and owner");
    std::set<Cell> parent_cells(parent.cells.begin(), parent.cells.end());
    for (const Cell& c : cells)
      if (!parent_cells.count(c))
        throw ConflictError("cell (" + std::to_string(c.t) + "," + std::to_string(c.k) +
                            ") not held by receipt " + std::to_string(*req.share_with));
  } else {
    std::string occupied;
    for (const Cell& c : cells) {
      if (!grid->at(c).empty())
        occupied += " (" + std::to_string(c.t) + "," + std::to_string(c.k) + ")";
    }
    if (!occupied.empty())
      throw ConflictError("occupied cells in " + to_string(req.kind) + " grid of " +
                          to_string(req.owner) + ":" + occupied);
  }

  // Validation done; mutate.
  AllocationReceipt receipt;
  receipt.id = next_receipt_++;
  receipt.request = req;
  receipt.request.cells.assign(cells.begin(), cells.end());
  receipt.weighted_cost =
      req.share_with ? 0.0 : kind_weight(req.kind) * static_cast<double>(cells.size());

  Grid* g = find_grid(req.kind, req.owner);
  for (const Cell& c : cells) g->at(c).insert(receipt.id);
  receipts_.emplace(receipt.id, receipt);
  log_.push_back({PoolEvent::Kind::Allocate, receipt.request, receipt.id});
  return receipt;
}

void TwinResourcePool::release(ReceiptId id) {
  auto it = receipts_.find(id);
  if (it == receipts_.end())
    throw LookupError("receipt " + std::to_string(id) + " not live");
  const BlockRequest& req = it->second.request;
  Grid* g = find_grid(req.kind, req.owner);
  for (const Cell& c : req.cells) g->at(c).erase(id);
  receipts_.erase(it);
  log_.push_back({PoolEvent::Kind::Release, {}, id});
}

PoolUtilization TwinResourcePool::utilization() const {
  auto frac = [](long long used, long long total) {
    return total == 0 ? 0.0 : static_cast<double>(used) / static_cast<double>(total);
  };
  long long space_used = 0, space_total = 0;
  for (const auto& [id, g] : space_) {
    space_total += static_cast<long long>(g.refs.size());
    for (const auto& r : g.refs) space_used += r.empty() ? 0 : 1;
  }
  long long freq_used = 0;
  for (const auto& r : freq_.refs) freq_used += r.empty() ? 0 : 1;
  long long compute_used = 0, compute_total = 0;
  for (const auto& [site, g] : compute_) {
    compute_total += static_cast<long long>(g.refs.size());
    for (const auto& r : g.refs) compute_used += r.empty() ? 0 : 1;
  }
  return {frac(space_used, space_total),
          frac(freq_used, static_cast<long long>(freq_.refs.size())),
          frac(compute_used, compute_total)};
}

bool TwinResourcePool::is_live(ReceiptId id) const { return receipts_.count(id) > 0; }

const AllocationReceipt& TwinResourcePool::receipt(ReceiptId id) const {
  auto it = receipts_.find(id);
  if (it == receipts_.end())
    throw LookupError("receipt " + std::to_string(id) + " not live");
  return it->second;
}

std::vector<ReceiptId> TwinResourcePool::live_receipts() const {
  std::vector<ReceiptId> out;
  out.reserve(receipts_.size());
  for (const auto& [id, r] : receipts_) out.push_back(id);
  return out;
}

const std::set<ReceiptId>& TwinResourcePool::refs_at(PoolKind kind, SiteId owner,
                                                     Cell cell) const {
  const Grid* g = find_grid(kind, owner);
  if (g == nullptr)
    throw LookupError("no " + to_string(kind) + " grid for " + to_string(owner));
  if (!g->in_range(cell))
    throw BoundsError("cell (" + std::to_string(cell.t) + "," + std::to_string(cell.k) +
                      ") outside grid");
  return g->at(cell);
}

bool TwinResourcePool::is_free(PoolKind kind, SiteId owner, Cell cell) const {
  return refs_at(kind, owner, cell).empty();
}

std::pair<int, int> TwinResourcePool::grid_shape(PoolKind kind, SiteId owner) const {
  const Grid* g = find_grid(kind, owner);
  if (g == nullptr)
    throw LookupError("no " + to_string(kind) + " grid for " + to_string(owner));
  return {g->t, g->k};
}

bool TwinResourcePool::has_grid(PoolKind kind, SiteId owner) const {
  return find_grid(kind, owner) != nullptr;
}

int TwinResourcePool::free_cell_count(PoolKind kind, SiteId owner) const {
  const Grid* g = find_grid(kind, owner);
  if (g == nullptr) return 0;
  int n = 0;
  for (const auto& r : g->refs) n += r.empty() ? 1 : 0;
  return n;
}

bool operator==(const TwinResourcePool& a, const TwinResourcePool& b) {
  return a.space_ == b.space_ && a.freq_ == b.freq_ && a.compute_ == b.compute_ &&
         a.receipts_ == b.receipts_;
}

std::string TwinResourcePool::dump() const {
  json j;
  auto grid_json = [](const Grid& g) {
    json out;
    out["shape"] = {g.t, g.k};
    json cells = json::object();
    for (int t = 0; t < g.t; ++t)
      for (int k = 0; k < g.k; ++k) {
        const auto& refs = g.at({t, k});
        if (!refs.empty())
          cells[std::to_string(t) + "," + std::to_string(k)] = refs;
      }
    out["cells"] = cells;
    return out;
  };
  j["space"] = json::object();
  for (const auto& [id, g] : space_) j["space"][std::to_string(id)] = grid_json(g);
  j["freq"] = grid_json(freq_);
  j["compute"] = json::object();
  for (const auto& [site, g] : compute_) j["compute"][to_string(site)] = grid_json(g);
  j["receipts"] = json::object();
  for (const auto& [id, r] : receipts_) {
    json e;
    e["kind"] = to_string(r.request.kind);
    e["owner"] = to_string(r.request.owner);
    json cells = json::array();
    for (const Cell& c : r.request.cells) cells.push_back({c.t, c.k});
    e["cells"] = cells;
    if (r.request.share_with) e["share_with"] = *r.request.share_with;
    if (r.request.comm_dest_rsu) e["comm_dest_rsu"] = *r.request.comm_dest_rsu;
    e["weighted_cost"] = r.weighted_cost;
    j["receipts"][std::to_string(id)] = e;
  }
  return j.dump(2);
}

TwinResourcePool replay_log(const TwinResourcePool& shape_source,
                            const std::vector<PoolEvent>& log) {
  TwinResourcePool p = shape_source;
  // Reset contents but keep shapes and weights.
  for (auto& [id, g] : p.space_)
    for (auto& r : g.refs) r.clear();
  for (auto& r : p.freq_.refs) r.clear();
  for (auto& [site, g] : p.compute_)
    for (auto& r : g.refs) r.clear();
  p.receipts_.clear();
  p.next_receipt_ = 1;
  p.log_.clear();

  for (const PoolEvent& ev : log) {
    if (ev.kind == PoolEvent::Kind::Allocate) {
      p.next_receipt_ = ev.receipt;  // reproduce original ids
      p.allocate(ev.request);
    } else {
      p.release(ev.receipt);
    }
  }
  return p;
}

}  // namespace iscc
