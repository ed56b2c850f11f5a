#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmd {

enum class Family { Logistic, Multistage };

// Dose-response curve class: logistic pi = sigma(b0 + b1 d + ... + bp d^p),
// multistage pi = 1 - exp(-(b0 + b1 d + ... + bp d^p)) with the polynomial
// required nonnegative at the design doses.
struct ModelSpec {
    Family family = Family::Logistic;
    int order = 1;                    // polynomial degree p >= 1

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Canonical ordering: LG1 < LG2 < ... < MS1 < MS2 < ... Used for tie-breaks.
bool operator<(const ModelSpec& a, const ModelSpec& b);

std::string label(const ModelSpec& spec);                      // "LG1", "MS2", ...
std::optional<ModelSpec> spec_from_label(const std::string&);  // inverse of label

using ParamVector = Eigen::VectorXd;

struct BmrUnattainable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateCurve : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FlatDoseResponseAtBmd : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (1, d, d^2, ..., d^p)
Eigen::VectorXd dose_vector(int order, double dose);

double eval_pi(const ModelSpec& spec, const ParamVector& beta, double dose);
std::vector<double> eval_pi(const ModelSpec& spec, const ParamVector& beta,
                            const std::vector<double>& doses);

// dpi/dbeta. Logistic: pi(1-pi) d-vec; multistage: (1-pi) d-vec.
Eigen::VectorXd grad_pi(const ModelSpec& spec, const ParamVector& beta, double dose);

// d^2 pi / dbeta^2.
Eigen::MatrixXd hess_pi(const ModelSpec& spec, const ParamVector& beta, double dose);

// (pi(d) - pi(0)) / (1 - pi(0)). Throws DegenerateCurve when pi(0) == 1.
double extra_risk(const ModelSpec& spec, const ParamVector& beta, double dose);

// Smallest dose with extra risk q, found by bisection after geometric bracket
// expansion from [0, max_design_dose] capped at 10 * max_design_dose.
// Throws DegenerateCurve when the curve is constant in dose and
// BmrUnattainable when extra risk stays below q up to the cap.
double bmd(const ModelSpec& spec, const ParamVector& beta, double q,
           double max_design_dose = 1.0);

// Gradient of the q-BMD with respect to beta (implicit differentiation of the
// extra-risk equation). Throws FlatDoseResponseAtBmd when the dose-slope of
// the curve vanishes at the BMD.
Eigen::VectorXd bmd_gradient(const ModelSpec& spec, const ParamVector& beta,
                             double q, double max_design_dose = 1.0);

// Multistage feasibility: d-vec(d_j)' beta >= -tol at every design dose.
bool multistage_feasible(const ParamVector& beta, const std::vector<double>& doses,
                         double tol = 0.0);

// A benchmark-dose estimate together with how it was produced.
struct BmdEstimate {
    double q = 0.0;
    double dose = 0.0;
    std::string estimator;                                   // "AIC", "FIC1", ...
    std::optional<ModelSpec> selected;                       // single-model estimators
    std::vector<std::pair<ModelSpec, double>> weights;       // model-averaged ones
};

}  // namespace bmd
