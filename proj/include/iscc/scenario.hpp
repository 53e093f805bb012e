#pragma once
// World snapshot: connected vehicles (CAVs), roadside units (RSUs) and
// non-connected targets (NCTs) inside the macro-base-station twin domain.
// Scenario values are immutable snapshots; operations return new values.

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "iscc/params.hpp"

namespace iscc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

double norm(Vec2 v);
double distance(Vec2 a, Vec2 b);

// Bearing of `to` as seen from `from`, degrees in [0, 360), east = 0, north = 90.
// Throws GeometryError when the points coincide.
double bearing_deg(Vec2 from, Vec2 to);

// Smallest absolute angular difference between two bearings, degrees in [0, 180].
double angular_distance_deg(double a_deg, double b_deg);

struct CavState {
  int id = 0;
  Vec2 position;
  double heading_deg = 0.0;
  double speed = 0.0;           // m/s
  double security_radius = 0.0;  // m
  int local_compute_units = 0;   // LSCU grid height
  bool boundary_clamped = false;
};

struct RsuState {
  int id = 0;
  Vec2 position;
  int edge_compute_units = 0;  // ESCU grid height
};

struct NctState {
  int id = 0;
  Vec2 position;
  Vec2 velocity;        // exogenous, never policy-controlled
  double info_value = 0.0;  // information units I_t
  bool boundary_clamped = false;
};

struct Scenario {
  std::vector<CavState> cavs;
  std::vector<RsuState> rsus;
  std::vector<NctState> ncts;
  double twin_domain_radius = 0.0;
  int time_horizon = 1;   // T
  int angle_sectors = 1;  // A
  int subcarriers = 1;    // F
  std::uint64_t rng_seed = 0;
  ProcessParams process;
  MarketConfig market;

  const CavState& cav(int id) const;
  const RsuState& rsu(int id) const;
  const NctState& nct(int id) const;
  bool has_cav(int id) const;
  bool has_rsu(int id) const;
  bool has_nct(int id) const;

  // Throws ValidationError on any violated invariant.
  void validate() const;
};

// Parses and validates a scenario from its JSON schema. Parse failures name
// the offending field; invariant failures raise ValidationError.
Scenario load_scenario(std::istream& config_text);
Scenario load_scenario_string(const std::string& config_text);
Scenario load_scenario_file(const std::string& path);

// Serializes back to the schema. load(save(s)) == s.
std::string save_scenario(const Scenario& s);

// Advances every entity by dt seconds of straight-line motion. Entities that
// would leave the twin domain stop at the boundary intersection and are
// flagged. dt must be >= 0.
Scenario step_mobility(const Scenario& s, double dt);

// NCT ids within the closed ball of the CAV's security radius.
std::set<int> visible_targets(const Scenario& s, int cav_id);

// Index in [0, A) of the angular sector containing the CAV -> NCT bearing.
int bearing_sector(const Scenario& s, int cav_id, int nct_id);

// Sector of an arbitrary bearing; shared by sensing geometry checks.
int sector_of_bearing(double bearing, int angle_sectors);

}  // namespace iscc
