#include "iscc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace iscc {

using nlohmann::json;

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

double distance(Vec2 a, Vec2 b) { return norm(a - b); }

double bearing_deg(Vec2 from, Vec2 to) {
  const Vec2 d = to - from;
  if (d.x == 0.0 && d.y == 0.0)
    throw GeometryError("bearing undefined for coincident positions");
  double deg = std::atan2(d.y, d.x) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg = 0.0;  // atan2 rounding at the wrap
  return deg;
}

double angular_distance_deg(double a_deg, double b_deg) {
  double d = std::fmod(std::fabs(a_deg - b_deg), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

int sector_of_bearing(double bearing, int angle_sectors) {
  const double width = 360.0 / angle_sectors;
  int sector = static_cast<int>(std::floor(bearing / width));
  if (sector >= angle_sectors) sector = angle_sectors - 1;
  if (sector < 0) sector = 0;
  return sector;
}

namespace {

template <typename T>
const T& find_by_id(const std::vector<T>& v, int id, const char* what) {
  for (const auto& e : v)
    if (e.id == id) return e;
  throw LookupError(std::string("unknown ") + what + " id " + std::to_string(id));
}

template <typename T>
bool has_id(const std::vector<T>& v, int id) {
  return std::any_of(v.begin(), v.end(), [&](const T& e) { return e.id == id; });
}

template <typename T>
void check_unique_ids(const std::vector<T>& v, const char* what) {
  std::unordered_set<int> seen;
  for (const auto& e : v)
    if (!seen.insert(e.id).second)
      throw ValidationError(std::string("duplicate ") + what + " id " + std::to_string(e.id));
}

}  // namespace

const CavState& Scenario::cav(int id) const { return find_by_id(cavs, id, "cav"); }
const RsuState& Scenario::rsu(int id) const { return find_by_id(rsus, id, "rsu"); }
const NctState& Scenario::nct(int id) const { return find_by_id(ncts, id, "nct"); }
bool Scenario::has_cav(int id) const { return has_id(cavs, id); }
bool Scenario::has_rsu(int id) const { return has_id(rsus, id); }
bool Scenario::has_nct(int id) const { return has_id(ncts, id); }

void Scenario::validate() const {
  if (twin_domain_radius <= 0.0) throw ValidationError("twin_domain_radius must be > 0");
  if (time_horizon < 1) throw ValidationError("time_horizon must be >= 1");
  if (angle_sectors < 1) throw ValidationError("angle_sectors must be >= 1");
  if (subcarriers < 1) throw ValidationError("subcarriers must be >= 1");
  check_unique_ids(cavs, "cav");
  check_unique_ids(rsus, "rsu");
  check_unique_ids(ncts, "nct");

  int max_local = 0;
  for (const auto& c : cavs) {
    if (norm(c.position) > twin_domain_radius)
      throw ValidationError("cav " + std::to_string(c.id) + " outside twin domain");
    if (c.security_radius <= 0.0)
      throw ValidationError("cav " + std::to_string(c.id) + " security_radius must be > 0");
    if (c.local_compute_units < 0)
      throw ValidationError("cav " + std::to_string(c.id) + " local_compute_units must be >= 0");
    max_local = std::max(max_local, c.local_compute_units);
  }
  for (const auto& r : rsus) {
    if (norm(r.position) > twin_domain_radius)
      throw ValidationError("rsu " + std::to_string(r.id) + " outside twin domain");
    if (r.edge_compute_units < max_local)
      throw ValidationError("rsu " + std::to_string(r.id) +
                            " edge_compute_units below the richest cav LSCU");
  }
  for (const auto& n : ncts) {
    if (norm(n.position) > twin_domain_radius)
      throw ValidationError("nct " + std::to_string(n.id) + " outside twin domain");
    if (n.info_value < 0.0)
      throw ValidationError("nct " + std::to_string(n.id) + " info_value must be >= 0");
  }
  process.validate();
  market.validate();
}

namespace {

// Wrappers so schema errors name the offending field.
double get_num(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ParseError("missing field " + ctx + key);
  if (!j[key].is_number()) throw ParseError("field " + ctx + key + " must be a number");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ParseError("missing field " + ctx + key);
  if (!j[key].is_number_integer()) throw ParseError("field " + ctx + key + " must be an integer");
  return j[key].get<int>();
}

Vec2 get_vec2(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ParseError("missing field " + ctx + key);
  const auto& a = j[key];
  if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
    throw ParseError("field " + ctx + key + " must be [x, y]");
  return {a[0].get<double>(), a[1].get<double>()};
}

ProcessParams parse_process(const json& j) {
  ProcessParams p;
  if (j.contains("p_aws")) p.p_aws = get_num(j, "p_aws", "process.");
  if (j.contains("p_pws")) p.p_pws = get_num(j, "p_pws", "process.");
  if (j.contains("p_fa")) p.p_fa = get_num(j, "p_fa", "process.");
  if (j.contains("d0")) p.d0 = get_num(j, "d0", "process.");
  if (j.contains("r0")) p.r0 = get_num(j, "r0", "process.");
  if (j.contains("c_per_unit")) p.c_per_unit = get_num(j, "c_per_unit", "process.");
  if (j.contains("theta_tol_deg")) p.theta_tol_deg = get_num(j, "theta_tol_deg", "process.");
  if (j.contains("mode")) {
    const std::string m = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
    if (m == "expected")
      p.mode = ProcessMode::Expected;
    else if (m == "sampled")
      p.mode = ProcessMode::Sampled;
    else
      throw ParseError("field process.mode must be \"expected\" or \"sampled\"");
  }
  return p;
}

MarketConfig parse_market(const json& j) {
  MarketConfig m;
  if (j.contains("unit_price")) m.unit_price = get_num(j, "unit_price", "market.");
  if (j.contains("q_min")) m.q_min = get_num(j, "q_min", "market.");
  if (j.contains("quality_ladder")) {
    const auto& a = j["quality_ladder"];
    if (!a.is_array()) throw ParseError("field market.quality_ladder must be an array");
    m.quality_ladder.clear();
    for (const auto& v : a) {
      if (!v.is_number()) throw ParseError("field market.quality_ladder must hold numbers");
      m.quality_ladder.push_back(v.get<double>());
    }
  }
  if (j.contains("cost_weights")) {
    const auto& w = j["cost_weights"];
    if (w.contains("space")) m.weights.space = get_num(w, "space", "market.cost_weights.");
    if (w.contains("freq")) m.weights.freq = get_num(w, "freq", "market.cost_weights.");
    if (w.contains("compute")) m.weights.compute = get_num(w, "compute", "market.cost_weights.");
  }
  return m;
}

}  // namespace

Scenario load_scenario_string(const std::string& config_text) {
  json j;
  try {
    j = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("top level must be an object");

  Scenario s;
  s.twin_domain_radius = get_num(j, "twin_domain_radius", "");
  s.time_horizon = get_int(j, "time_horizon", "");
  s.angle_sectors = get_int(j, "angle_sectors", "");
  s.subcarriers = get_int(j, "subcarriers", "");
  if (!j.contains("rng_seed") || !j["rng_seed"].is_number())
    throw ParseError("missing field rng_seed");
  s.rng_seed = j["rng_seed"].get<std::uint64_t>();

  for (const char* key : {"cavs", "rsus", "ncts"})
    if (!j.contains(key) || !j[key].is_array())
      throw ParseError(std::string("missing array field ") + key);

  for (const auto& c : j["cavs"]) {
    CavState cs;
    cs.id = get_int(c, "id", "cavs[].");
    cs.position = get_vec2(c, "position", "cavs[].");
    cs.heading_deg = get_num(c, "heading", "cavs[].");
    cs.speed = get_num(c, "speed", "cavs[].");
    cs.security_radius = get_num(c, "security_radius", "cavs[].");
    cs.local_compute_units = get_int(c, "local_compute_units", "cavs[].");
    if (c.contains("boundary_clamped")) cs.boundary_clamped = c["boundary_clamped"].get<bool>();
    s.cavs.push_back(cs);
  }
  for (const auto& r : j["rsus"]) {
    RsuState rs;
    rs.id = get_int(r, "id", "rsus[].");
    rs.position = get_vec2(r, "position", "rsus[].");
    rs.edge_compute_units = get_int(r, "edge_compute_units", "rsus[].");
    s.rsus.push_back(rs);
  }
  for (const auto& n : j["ncts"]) {
    NctState ns;
    ns.id = get_int(n, "id", "ncts[].");
    ns.position = get_vec2(n, "position", "ncts[].");
    ns.velocity = get_vec2(n, "velocity", "ncts[].");
    ns.info_value = get_num(n, "info_value", "ncts[].");
    if (n.contains("boundary_clamped")) ns.boundary_clamped = n["boundary_clamped"].get<bool>();
    s.ncts.push_back(ns);
  }
  if (j.contains("process")) s.process = parse_process(j["process"]);
  if (j.contains("market")) s.market = parse_market(j["market"]);

  s.validate();
  return s;
}

Scenario load_scenario(std::istream& config_text) {
  std::ostringstream buf;
  buf << config_text.rdbuf();
  return load_scenario_string(buf.str());
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path);
  return load_scenario(in);
}

std::string save_scenario(const Scenario& s) {
  json j;
  j["twin_domain_radius"] = s.twin_domain_radius;
  j["time_horizon"] = s.time_horizon;
  j["angle_sectors"] = s.angle_sectors;
  j["subcarriers"] = s.subcarriers;
  j["rng_seed"] = s.rng_seed;
  j["cavs"] = json::array();
  for (const auto& c : s.cavs) {
    json e;
    e["id"] = c.id;
    e["position"] = {c.position.x, c.position.y};
    e["heading"] = c.heading_deg;
    e["speed"] = c.speed;
    e["security_radius"] = c.security_radius;
    e["local_compute_units"] = c.local_compute_units;
    if (c.boundary_clamped) e["boundary_clamped"] = true;
    j["cavs"].push_back(e);
  }
  j["rsus"] = json::array();
  for (const auto& r : s.rsus) {
    json e;
    e["id"] = r.id;
    e["position"] = {r.position.x, r.position.y};
    e["edge_compute_units"] = r.edge_compute_units;
    j["rsus"].push_back(e);
  }
  j["ncts"] = json::array();
  for (const auto& n : s.ncts) {
    json e;
    e["id"] = n.id;
    e["position"] = {n.position.x, n.position.y};
    e["velocity"] = {n.velocity.x, n.velocity.y};
    e["info_value"] = n.info_value;
    if (n.boundary_clamped) e["boundary_clamped"] = true;
    j["ncts"].push_back(e);
  }
  j["process"] = {
      {"p_aws", s.process.p_aws},
      {"p_pws", s.process.p_pws},
      {"p_fa", s.process.p_fa},
      {"d0", s.process.d0},
      {"r0", s.process.r0},
      {"c_per_unit", s.process.c_per_unit},
      {"theta_tol_deg", s.process.theta_tol_deg},
      {"mode", s.process.mode == ProcessMode::Expected ? "expected" : "sampled"},
  };
  j["market"] = {
      {"unit_price", s.market.unit_price},
      {"q_min", s.market.q_min},
      {"quality_ladder", s.market.quality_ladder},
      {"cost_weights",
       {{"space", s.market.weights.space},
        {"freq", s.market.weights.freq},
        {"compute", s.market.weights.compute}}},
  };
  return j.dump(2) + "\n";
}

namespace {

// Moves p along unit-ish direction d for dt; stops at the twin-domain circle.
// Returns the new position and whether it was clamped.
std::pair<Vec2, bool> advance_clamped(Vec2 p, Vec2 d, double dt, double radius) {
  Vec2 q = p + d * dt;
  if (norm(q) <= radius) return {q, false};
  // First boundary crossing of the segment p + s*d, s in [0, dt]:
  // solve |p + s d|^2 = R^2 for the largest s <= dt on the segment.
  const double a = d.x * d.x + d.y * d.y;
  const double b = 2.0 * (p.x * d.x + p.y * d.y);
  const double c = p.x * p.x + p.y * p.y - radius * radius;
  if (a == 0.0) return {p, true};  // stationary yet outside: keep (validated inside)
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {p, true};
  const double s = (-b + std::sqrt(disc)) / (2.0 * a);
  const double s_clamped = std::clamp(s, 0.0, dt);
  return {p + d * s_clamped, true};
}

}  // namespace

Scenario step_mobility(const Scenario& s, double dt) {
  if (dt < 0.0) throw ValidationError("dt must be >= 0");
  Scenario out = s;
  if (dt == 0.0) return out;
  const double rad = s.twin_domain_radius;
  for (auto& c : out.cavs) {
    const double h = c.heading_deg * std::numbers::pi / 180.0;
    const Vec2 dir{std::cos(h) * c.speed, std::sin(h) * c.speed};
    auto [p, clamped] = advance_clamped(c.position, dir, dt, rad);
    c.position = p;
    if (clamped) c.boundary_clamped = true;
  }
  for (auto& n : out.ncts) {
    auto [p, clamped] = advance_clamped(n.position, n.velocity, dt, rad);
    n.position = p;
    if (clamped) n.boundary_clamped = true;
  }
  return out;
}

std::set<int> visible_targets(const Scenario& s, int cav_id) {
  const CavState& c = s.cav(cav_id);
  std::set<int> out;
  for (const auto& n : s.ncts)
    if (distance(c.position, n.position) <= c.security_radius) out.insert(n.id);
  return out;
}

int bearing_sector(const Scenario& s, int cav_id, int nct_id) {
  const CavState& c = s.cav(cav_id);
  const NctState& n = s.nct(nct_id);
  return sector_of_bearing(bearing_deg(c.position, n.position), s.angle_sectors);
}

}  // namespace iscc
