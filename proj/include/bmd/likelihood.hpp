#pragma once

#include "bmd/data.hpp"
#include "bmd/models.hpp"

#include <stdexcept>
#include <vector>

namespace bmd {

struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SeparationDetected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FittedModel {
    ModelSpec spec;
    ParamVector beta;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Binomial log likelihood; probabilities clamped to [1e-10, 1-1e-10] and
// zero-count terms contribute exactly 0.
double log_likelihood(const QuantalDataset& data, const ModelSpec& spec,
                      const ParamVector& beta);

// Maximum likelihood fit. Multistage fits respect the polynomial-nonnegativity
// constraints at the design doses (log-barrier continuation; the active
// boundary is reached exactly, coefficients below 1e-9 are snapped to 0).
// Default starts: weighted least squares on the link-transformed isotonized
// empirical probabilities, the zero vector, and for order >= 2 the fitted
// next-lower-order model padded with a zero. Extra starts may be supplied.
// Throws SeparationDetected when |beta| exceeds 1e3 along the way and
// NonConvergence when the score residual cannot be pushed below tolerance.
FittedModel fit_mle(const QuantalDataset& data, const ModelSpec& spec,
                    const std::vector<ParamVector>& extra_starts = {});

// AIC = -2 loglik + 2 (order+1); BIC = -2 loglik + (order+1) log n_total.
void information_criteria(FittedModel& fit, long n_total);

// Fit every spec in canonical order; non-converged / separated fits are
// dropped (a diagnostic line per drop appended to *dropped if given).
std::vector<FittedModel> fit_all(const QuantalDataset& data,
                                 const std::vector<ModelSpec>& specs,
                                 std::vector<std::string>* dropped = nullptr);

}  // namespace bmd
