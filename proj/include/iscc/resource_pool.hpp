#pragma once
// The twin resource pool: three discrete time-indexed grids (angle sectors,
// subcarriers, compute units) decoupled from the sensing / communication /
// computing processes. Cells hold reference sets of receipt ids, so several
// receipts can share one cell (explicit reuse) while capacity is consumed
// only once.

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "iscc/params.hpp"
#include "iscc/scenario.hpp"

namespace iscc {

enum class PoolKind { Space, Freq, Compute };

enum class SiteKind { Cav, Rsu };

// Owner of a grid or allocation: a CAV (antenna plane, transmitter, LSCU) or
// an RSU (ESCU).
struct SiteId {
  SiteKind kind = SiteKind::Cav;
  int id = 0;
  auto operator<=>(const SiteId&) const = default;
};

inline SiteId cav_site(int id) { return {SiteKind::Cav, id}; }
inline SiteId rsu_site(int id) { return {SiteKind::Rsu, id}; }

struct Cell {
  int t = 0;  // time slot
  int k = 0;  // ordinate: sector, subcarrier or compute unit
  auto operator<=>(const Cell&) const = default;
};

using ReceiptId = int;

struct BlockRequest {
  PoolKind kind = PoolKind::Space;
  SiteId owner;
  std::vector<Cell> cells;
  // Explicit reuse: all cells must currently belong to this live receipt.
  std::optional<ReceiptId> share_with;
  // Set on freq allocations that realize a communication link to an RSU.
  std::optional<int> comm_dest_rsu;

  friend bool operator==(const BlockRequest&, const BlockRequest&) = default;
};

struct AllocationReceipt {
  ReceiptId id = 0;
  BlockRequest request;
  double weighted_cost = 0.0;  // new cells times the kind's weight; 0 when shared

  friend bool operator==(const AllocationReceipt&, const AllocationReceipt&) = default;
};

struct PoolUtilization {
  double space = 0.0;
  double freq = 0.0;
  double compute = 0.0;
};

struct PoolEvent {
  enum class Kind { Allocate, Release } kind = Kind::Allocate;
  BlockRequest request;   // Allocate only
  ReceiptId receipt = 0;  // id assigned / released
};

class TwinResourcePool {
 public:
  TwinResourcePool() = default;

  // Grids shaped from the scenario: one TxA space grid per CAV, one TD-wide
  // TxF freq grid, one TxC compute grid per site with positive capacity.
  static TwinResourcePool from_scenario(const Scenario& s, CostWeights weights = {});

  // Explicit capacities, keyed by site. Capacities must be >= 0.
  static TwinResourcePool make(int time_horizon, int angle_sectors, int subcarriers,
                               const std::vector<int>& cav_ids,
                               const std::map<SiteId, int>& compute_capacities,
                               CostWeights weights = {});

  // All-or-nothing. Throws ConflictError (cells listed), BoundsError,
  // OwnershipError or LookupError; on throw the pool is unchanged.
  AllocationReceipt allocate(const BlockRequest& req);

  // Removes the receipt from every cell set. Throws LookupError if unknown.
  void release(ReceiptId id);

  PoolUtilization utilization() const;

  bool is_live(ReceiptId id) const;
  const AllocationReceipt& receipt(ReceiptId id) const;
  std::vector<ReceiptId> live_receipts() const;  // ascending

  // Reference set of one cell (empty set when free).
  const std::set<ReceiptId>& refs_at(PoolKind kind, SiteId owner, Cell cell) const;
  bool is_free(PoolKind kind, SiteId owner, Cell cell) const;

  // Grid shape queries. Freq ignores the owner. Returns {T, K}.
  std::pair<int, int> grid_shape(PoolKind kind, SiteId owner) const;
  bool has_grid(PoolKind kind, SiteId owner) const;
  int free_cell_count(PoolKind kind, SiteId owner) const;

  const std::vector<PoolEvent>& log() const { return log_; }
  const CostWeights& weights() const { return weights_; }

  // Structural equality: shapes, cell reference sets and live receipts.
  friend bool operator==(const TwinResourcePool& a, const TwinResourcePool& b);

  // JSON dump of every grid's cell -> receipt-id map plus live receipts.
  std::string dump() const;

  friend TwinResourcePool replay_log(const TwinResourcePool& shape_source,
                                     const std::vector<PoolEvent>& log);

 private:
  struct Grid {
    int t = 0;
    int k = 0;
    // cell refs indexed t*k; empty set = free
    std::vector<std::set<ReceiptId>> refs;

    std::set<ReceiptId>& at(Cell c) { return refs[static_cast<std::size_t>(c.t) * k + c.k]; }
    const std::set<ReceiptId>& at(Cell c) const {
      return refs[static_cast<std::size_t>(c.t) * k + c.k];
    }
    bool in_range(Cell c) const { return c.t >= 0 && c.t < t && c.k >= 0 && c.k < k; }
    friend bool operator==(const Grid&, const Grid&) = default;
  };

  Grid* find_grid(PoolKind kind, SiteId owner);
  const Grid* find_grid(PoolKind kind, SiteId owner) const;
  double kind_weight(PoolKind kind) const;

  std::map<int, Grid> space_;       // per CAV
  Grid freq_;                       // TD-wide
  std::map<SiteId, Grid> compute_;  // per site
  std::map<ReceiptId, AllocationReceipt> receipts_;
  ReceiptId next_receipt_ = 1;
  CostWeights weights_;
  std::vector<PoolEvent> log_;
};

// Reconstructs a pool by replaying an event log against fresh grids of the
// same shape. Used by the conservation checks.
TwinResourcePool replay_log(const TwinResourcePool& shape_source,
                            const std::vector<PoolEvent>& log);

std::string to_string(PoolKind kind);
std::string to_string(SiteId site);

}  // namespace iscc
