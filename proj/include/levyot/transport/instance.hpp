#pragma once

#include <string>

#include "levyot/error.hpp"
#include "levyot/limit_lab.hpp"
#include "levyot/theta_family.hpp"
#include "levyot/transport/cost.hpp"
#include "levyot/transport/marginal.hpp"

namespace levyot {

/// Data of the transport problem on [0, 1] in dimension 1.
struct TransportInstance {
  Marginal mu0;
  Marginal mu1;
  ThetaFamily fam;
  CostFunction L;

  /// Family must be one-dimensional with Conditions (B) and (J) holding on the grid.
  void validate(std::size_t resolution = 5) const {
    fam.validate();
    require(fam.dim() == 1, "transport instances are one-dimensional");
    const ConditionBReport b = family_condition_b(fam, resolution);
    require(b.finite, "transport family violates Condition (B) on the parameter grid");
    const ConditionJReport j = family_condition_j(fam, default_delta_schedule(), resolution);
    require(j.verdict == JumpVerdict::Holds,
            std::string("transport family needs Condition (J); grid verdict is ") + to_string(j.verdict));
    const CostReport c = validate_cost(L, fam, 64);
    require(c.pass, "transport cost failed validation: " + c.failure);
  }
};

}  // namespace levyot
