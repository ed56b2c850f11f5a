#pragma once

#include "bmd/likelihood.hpp"
#include "bmd/models.hpp"

#include <stdexcept>
#include <vector>

namespace bmd {

enum class Criterion { AIC, BIC };

struct SelectionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Smallest criterion value wins; exact ties resolved by canonical model order.
// Requires at least one fit.
ModelSpec select_ic(const std::vector<FittedModel>& fits, Criterion crit);

// exp(-(IC - IC_min)/2) normalized to sum 1. Subtracting the minimum first
// keeps the exponentials in range; weights are invariant to any common shift
// of the criterion values.
std::vector<std::pair<ModelSpec, double>> ic_weights(
    const std::vector<FittedModel>& fits, Criterion crit);

// BMD of the criterion-selected model.
BmdEstimate two_step_bmd(const std::vector<FittedModel>& fits, Criterion crit,
                         double q, double max_design_dose = 1.0);

// Weighted average of the per-model BMDs under the criterion weights.
BmdEstimate model_averaged_bmd(const std::vector<FittedModel>& fits, Criterion crit,
                               double q, double max_design_dose = 1.0);

}  // namespace bmd
