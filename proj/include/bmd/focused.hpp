#pragma once

#include "bmd/data.hpp"
#include "bmd/likelihood.hpp"
#include "bmd/models.hpp"
#include "bmd/nonparametric.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmd {

struct ProjectionFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularInformation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A candidate description of the data-generating process on the design:
// per-dose response probabilities plus the benchmark-dose curve they imply.
struct TargetDistribution {
    enum class Source { ModelBased, Empirical };
    Source source = Source::Empirical;
    std::optional<ModelSpec> model;              // set iff ModelBased
    std::vector<double> probs;                   // one per design dose
    std::function<double(double)> bmd_fn;        // q -> benchmark dose
    std::string name;                            // "LG1".."MS2" or "EMP"
};

// Weighted cross-entropy of the target against the model curve:
//   sum_j N_j [ ptilde_j log pi_j + (1 - ptilde_j) log(1 - pi_j) ],
// model probabilities clamped to [1e-10, 1-1e-10], zero-mass terms drop.
double kl_objective(const QuantalDataset& data, const std::vector<double>& target_probs,
                    const ModelSpec& spec, const ParamVector& beta);

// Gradient of kl_objective: sum_j N_j (ptilde_j - pi_j)/(pi_j pibar_j) grad_pi_j.
Eigen::VectorXd kl_score(const QuantalDataset& data, const std::vector<double>& target_probs,
                         const ModelSpec& spec, const ParamVector& beta);

// Negated Hessian of kl_objective. Closed forms:
//   logistic:   sum_j N_j pi_j pibar_j D_j            (target-free)
//   multistage: sum_j N_j ptilde_j pibar_j / pi_j^2 D_j
// with D_j the outer product of the dose vector. Model probs clamped as above.
Eigen::MatrixXd kl_info(const QuantalDataset& data, const std::vector<double>& target_probs,
                        const ModelSpec& spec, const ParamVector& beta);

// Same matrix assembled from grad_pi / hess_pi without per-family shortcuts.
Eigen::MatrixXd kl_info_generic(const QuantalDataset& data,
                                const std::vector<double>& target_probs,
                                const ModelSpec& spec, const ParamVector& beta);

// Covariance of the per-subject score under the target:
//   sum_j N_j ptilde_j (1 - ptilde_j) / (pi_j pibar_j)^2 grad_pi_j grad_pi_j'.
Eigen::MatrixXd score_covariance(const QuantalDataset& data,
                                 const std::vector<double>& target_probs,
                                 const ModelSpec& spec, const ParamVector& beta);
Eigen::MatrixXd score_covariance_generic(const QuantalDataset& data,
                                         const std::vector<double>& target_probs,
                                         const ModelSpec& spec, const ParamVector& beta);

// Parameters of the model curve closest to the target in weighted
// cross-entropy (the information projection). Multistage projections respect
// the design-dose constraints; convergence is measured by the score residual
// projected onto the feasible cone. Throws ProjectionFailed when the residual
// stays above 1e-6 after 500 iterations.
ParamVector kl_project(const QuantalDataset& data, const std::vector<double>& target_probs,
                       const ModelSpec& spec);

// BMD-gradient form entering the risk quadratic forms below. Logistic rows use
// bmd_gradient. Multistage rows use
//   tau_dot = [ qbar pibar(0) e0 - pi(tau) dvec(tau) ] / ( s qbar pibar(0) ),
// s = sum_{k>=1} k beta_k tau^(k-1), qbar = 1-q: the background slot carries
// the mass qbar pibar(0) - pi(tau) and the dose slots are scaled by pi(tau).
// The selectors below are defined in terms of this form.
Eigen::VectorXd risk_bmd_gradient(const ModelSpec& spec, const ParamVector& beta,
                                  double q, double max_design_dose = 1.0);

// Sandwich variance of the q-BMD of the projected model under the target:
//   Gamma = tau_dot' Ahat^{-1} Sigmahat Ahat^{-1} tau_dot,
// Ahat = kl_info/n, Sigmahat = score_covariance/n, both at the projection.
// Throws SingularInformation when Ahat is not invertible.
double gamma_hat(const QuantalDataset& data, const TargetDistribution& target,
                 const ModelSpec& spec, double q, double max_design_dose = 1.0);

// Gamma plus n times the squared gap between the projected model's BMD and
// anchor_bmd (the model-free benchmark dose for the same q).
double risk_estimate(const QuantalDataset& data, const TargetDistribution& target,
                     const ModelSpec& spec, double q, double anchor_bmd,
                     double max_design_dose = 1.0);

struct RiskCell {
    double risk = std::numeric_limits<double>::infinity();
    double gamma = std::numeric_limits<double>::infinity();
    double bias = 0.0;                 // projected-model BMD minus anchor
    double projected_bmd = 0.0;
    bool ok = false;
    std::string failure;               // set when !ok
};

// Rows: candidate model classes (fits). Columns: targets (one per candidate
// class, model-based, plus the empirical column). anchor is the isotonic BMD.
struct RiskMatrix {
    double q = 0.0;
    double anchor = 0.0;
    std::vector<ModelSpec> rows;
    std::vector<TargetDistribution> targets;
    std::vector<std::vector<RiskCell>> cells;      // [row][target]

    const RiskCell& at(const ModelSpec& row, const std::string& target_name) const;
};

// Model-based target probabilities are clamped to [1e-8, 1-1e-8]; the
// empirical column keeps the isotonic probabilities as they are (a zero stays
// a zero and the corresponding dose drops from the quadratic forms).
// Projections always run on clamped probabilities. Cells whose projection,
// inversion, or BMD fails carry +infinity risk and a failure note.
RiskMatrix build_risk_matrix(const QuantalDataset& data,
                             const std::vector<FittedModel>& fits,
                             const PavaFit& isotonic, double q,
                             double max_design_dose = 1.0);

// Same matrix for several q at once; the projections and sandwich matrices
// are q-free and get computed once.
std::vector<RiskMatrix> build_risk_matrices(const QuantalDataset& data,
                                            const std::vector<FittedModel>& fits,
                                            const PavaFit& isotonic,
                                            const std::vector<double>& q_values,
                                            double max_design_dose = 1.0);

// FE: row of the smallest entry over the model-based columns.
// FM: column of that same smallest entry.
// EMP: row minimizing the empirical column.
// Ties resolve to the earlier row/column in canonical order.
enum class FicVariant { FE, FM, EMP };

ModelSpec fic_select(const RiskMatrix& matrix, FicVariant variant);

// BMD of the selected class at its own maximum-likelihood fit.
BmdEstimate fic_bmd(const RiskMatrix& matrix, const std::vector<FittedModel>& fits,
                    FicVariant variant, double max_design_dose = 1.0);

const char* fic_name(FicVariant variant);      // "FIC1", "FIC2", "FIC3"

}  // namespace bmd
