#pragma once

// Shared weighted-binomial likelihood core. Both the maximum-likelihood fits
// (y = events/subjects) and the information projections (y = target probs)
// maximize the same objective, so they share one optimizer.

#include "bmd/models.hpp"

#include <vector>

namespace bmd::detail {

struct WeightedFit {
    ParamVector beta;
    double value = 0.0;          // achieved objective
    double residual = 0.0;       // final score residual, projected for multistage
    bool converged = false;
    bool separated = false;      // |beta| exceeded 1e3
    int iterations = 0;
};

double weighted_ll(const ModelSpec& spec, const std::vector<double>& doses,
                   const std::vector<double>& w, const std::vector<double>& y,
                   const ParamVector& beta);

Eigen::VectorXd weighted_score(const ModelSpec& spec, const std::vector<double>& doses,
                               const std::vector<double>& w, const std::vector<double>& y,
                               const ParamVector& beta, double floor = 1e-10);

// Exact negated Hessian of weighted_ll; positive semidefinite for both
// families (the objective is concave), which is what makes the Newton
// polish below globally stable. The probability floor guards denominators.
Eigen::MatrixXd weighted_neg_hess(const ModelSpec& spec, const std::vector<double>& doses,
                                  const std::vector<double>& w, const std::vector<double>& y,
                                  const ParamVector& beta, double floor = 1e-10);

// Score residual projected onto the feasible cone: the full score norm for
// logistic; for multistage the norm after removing the best nonnegative
// combination of active constraint gradients.
double projected_residual(const ModelSpec& spec, const std::vector<double>& doses,
                          const ParamVector& beta, const Eigen::VectorXd& score);

// Simplex localization plus damped Newton polish; multistage runs a
// log-barrier continuation and lands on the active boundary exactly.
// Starts: link-transform weighted least squares on the isotonized y, the
// zero vector (shifted into the multistage interior), and extra_starts.
WeightedFit maximize_weighted_ll(const ModelSpec& spec, const std::vector<double>& doses,
                                 const std::vector<double>& w, const std::vector<double>& y,
                                 const std::vector<ParamVector>& extra_starts = {},
                                 int max_iter = 500);

}  // namespace bmd::detail
