#pragma once

#include "bmd/data.hpp"
#include "bmd/models.hpp"

#include <stdexcept>
#include <vector>

namespace bmd {

struct OutsideDesignRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Isotonic (monotone nondecreasing) probability estimate on the design doses.
struct PavaFit {
    std::vector<double> doses;
    std::vector<double> probs;     // nondecreasing
};

// events[j] / subjects[j] per dose.
std::vector<double> empirical_probs(const QuantalDataset& data);

// Weighted pool-adjacent-violators: minimizes sum w_j (v_j - x_j)^2 over
// nondecreasing x. Weights must be positive.
std::vector<double> pava(const std::vector<double>& values,
                         const std::vector<double>& weights);

PavaFit pava_fit(const QuantalDataset& data);

// Piecewise-linear interpolation of the isotonic probs between design doses.
// Throws OutsideDesignRange outside [doses.front(), doses.back()].
double piecewise_pi(const PavaFit& fit, double dose);

// Invert the interpolated extra-risk curve at level q; background is the
// isotonic prob at the lowest dose. Throws BmrUnattainable when the curve
// never reaches q within the design range.
BmdEstimate nonpar_bmd(const PavaFit& fit, double q);

}  // namespace bmd
