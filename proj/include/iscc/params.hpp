#pragma once
// Tunable model parameters embedded in the scenario config. Defaults are the
// artifact's desk-scale choices; every field is config-overridable.

#include <vector>

#include "iscc/errors.hpp"

namespace iscc {

enum class ProcessMode { Expected, Sampled };

// Parameters of the sensing / communication / computing process models.
struct ProcessParams {
  double p_aws = 0.5;         // per-slot detection probability, active sensing
  double p_pws = 0.2;         // per-slot detection probability, passive sensing
  double p_fa = 0.05;         // per-slot false-alarm probability
  double d0 = 5.0;            // data units produced per sensing slot
  double r0 = 10.0;           // data units carried per communication block
  double c_per_unit = 1.0;    // compute cells needed per data unit
  double theta_tol_deg = 15.0;  // passive sensing angular tolerance
  ProcessMode mode = ProcessMode::Expected;

  void validate() const {
    if (!(p_aws > 0.0 && p_aws <= 1.0)) throw ValidationError("p_aws out of (0,1]");
    if (!(p_pws > 0.0 && p_pws <= 1.0)) throw ValidationError("p_pws out of (0,1]");
    if (!(p_pws < p_aws)) throw ValidationError("p_pws must be < p_aws");
    if (!(p_fa >= 0.0 && p_fa < 1.0)) throw ValidationError("p_fa out of [0,1)");
    if (d0 < 0.0) throw ValidationError("d0 must be >= 0");
    if (r0 <= 0.0) throw ValidationError("r0 must be > 0");
    if (c_per_unit < 0.0) throw ValidationError("c_per_unit must be >= 0");
    if (theta_tol_deg < 0.0) throw ValidationError("theta_tol_deg must be >= 0");
  }
};

// Per-grid-kind weights of the resource cost charged for newly allocated
// cells. Shared cells are charged once, to their first owner.
struct CostWeights {
  double space = 1.0;
  double freq = 1.0;
  double compute = 1.0;

  void validate() const {
    if (space < 0 || freq < 0 || compute < 0)
      throw ValidationError("cost weights must be >= 0");
  }
};

// Market-side configuration: linear pricing, buyer quality threshold and the
// discrete quality ladder the distributor orders from.
struct MarketConfig {
  double unit_price = 1.0;  // cost units per information unit, every buyer
  double q_min = 0.25;      // buyer accepts info amounting to >= q_min * I_t
  std::vector<double> quality_ladder = {0.0, 0.5, 0.75};
  CostWeights weights;

  void validate() const {
    if (unit_price < 0) throw ValidationError("unit_price must be >= 0");
    if (q_min < 0 || q_min > 1) throw ValidationError("q_min out of [0,1]");
    if (quality_ladder.empty() || quality_ladder.front() != 0.0)
      throw ValidationError("quality_ladder must start at 0");
    for (std::size_t i = 1; i < quality_ladder.size(); ++i) {
      if (quality_ladder[i] <= quality_ladder[i - 1] || quality_ladder[i] > 1.0)
        throw ValidationError("quality_ladder must be strictly increasing within (0,1]");
    }
    weights.validate();
  }
};

}  // namespace iscc
