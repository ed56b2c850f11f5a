#include "bmd/models.hpp"

#include <cmath>
#include <limits>

namespace bmd {

bool operator<(const ModelSpec& a, const ModelSpec& b) {
    if (a.family != b.family) return a.family == Family::Logistic;
    return a.order < b.order;
}

std::string label(const ModelSpec& spec) {
    return (spec.family == Family::Logistic ? "LG" : "MS") + std::to_string(spec.order);
}

std::optional<ModelSpec> spec_from_label(const std::string& s) {
    if (s.size() < 3) return std::nullopt;
    Family fam;
    if (s.rfind("LG", 0) == 0) fam = Family::Logistic;
    else if (s.rfind("MS", 0) == 0) fam = Family::Multistage;
    else return std::nullopt;
    try {
        std::size_t used = 0;
        int p = std::stoi(s.substr(2), &used);
        if (used != s.size() - 2 || p < 1) return std::nullopt;
        return ModelSpec{fam, p};
    } catch (...) {
        return std::nullopt;
    }
}

Eigen::VectorXd dose_vector(int order, double dose) {
    Eigen::VectorXd v(order + 1);
    v[0] = 1.0;
    for (int k = 1; k <= order; ++k) v[k] = v[k - 1] * dose;
    return v;
}

namespace {

double poly_eval(const ParamVector& beta, double dose) {
    double eta = 0.0;
    for (int k = int(beta.size()) - 1; k >= 0; --k) eta = eta * dose + beta[k];
    return eta;
}

// stable logistic
double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

void check_spec(const ModelSpec& spec, const ParamVector& beta) {
    if (spec.order < 1) throw std::invalid_argument("model order must be >= 1");
    if (beta.size() != spec.order + 1)
        throw std::invalid_argument("parameter length does not match order");
}

}  // namespace

double eval_pi(const ModelSpec& spec, const ParamVector& beta, double dose) {
    check_spec(spec, beta);
    double eta = poly_eval(beta, dose);
    if (spec.family == Family::Logistic) return sigmoid(eta);
    return -std::expm1(-eta);
}

std::vector<double> eval_pi(const ModelSpec& spec, const ParamVector& beta,
                            const std::vector<double>& doses) {
    std::vector<double> out(doses.size());
    for (std::size_t j = 0; j < doses.size(); ++j) out[j] = eval_pi(spec, beta, doses[j]);
    return out;
}

Eigen::VectorXd grad_pi(const ModelSpec& spec, const ParamVector& beta, double dose) {
    check_spec(spec, beta);
    Eigen::VectorXd d = dose_vector(spec.order, dose);
    double pi = eval_pi(spec, beta, dose);
    if (spec.family == Family::Logistic) return pi * (1.0 - pi) * d;
    return (1.0 - pi) * d;
}

Eigen::MatrixXd hess_pi(const ModelSpec& spec, const ParamVector& beta, double dose) {
    check_spec(spec, beta);
    Eigen::VectorXd d = dose_vector(spec.order, dose);
    double pi = eval_pi(spec, beta, dose);
    double w = spec.family == Family::Logistic ? pi * (1.0 - pi) * (1.0 - 2.0 * pi)
                                               : -(1.0 - pi);
    return w * (d * d.transpose());
}

double extra_risk(const ModelSpec& spec, const ParamVector& beta, double dose) {
    double p0 = eval_pi(spec, beta, 0.0);
    if (p0 >= 1.0) throw DegenerateCurve("background probability is 1");
    double pd = eval_pi(spec, beta, dose);
    return (pd - p0) / (1.0 - p0);
}

double bmd(const ModelSpec& spec, const ParamVector& beta, double q,
           double max_design_dose) {
    check_spec(spec, beta);
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must lie in (0,1)");
    bool constant = true;
    for (int k = 1; k <= spec.order; ++k)
        if (beta[k] != 0.0) { constant = false; break; }
    if (constant) throw DegenerateCurve("curve does not depend on dose");

    const double cap = 10.0 * max_design_dose;
    double hi = max_design_dose;
    double fhi = extra_risk(spec, beta, hi) - q;
    while (fhi < 0.0 && hi < cap) {
        hi = std::min(2.0 * hi, cap);
        fhi = extra_risk(spec, beta, hi) - q;
    }
    if (fhi < 0.0)
        throw BmrUnattainable("extra risk stays below q up to " + std::to_string(cap));

    double lo = 0.0;                           // extra risk at 0 is 0 < q
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        double mid = 0.5 * (lo + hi);
        if (extra_risk(spec, beta, mid) - q >= 0.0) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

Eigen::VectorXd bmd_gradient(const ModelSpec& spec, const ParamVector& beta,
                             double q, double max_design_dose) {
    double tau = bmd(spec, beta, q, max_design_dose);
    double s = 0.0;                            // d eta / d dose at tau
    for (int k = 1; k <= spec.order; ++k) s += k * beta[k] * std::pow(tau, k - 1);
    if (s == 0.0) throw FlatDoseResponseAtBmd("dose-slope vanishes at the BMD");

    Eigen::VectorXd dtau = dose_vector(spec.order, tau);
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(spec.order + 1);
    e0[0] = 1.0;
    if (spec.family == Family::Multistage)
        return (e0 - dtau) / s;                // background slot cancels exactly

    double p0 = eval_pi(spec, beta, 0.0);
    double pt = eval_pi(spec, beta, tau);
    double wt = pt * (1.0 - pt);
    if (wt == 0.0) throw FlatDoseResponseAtBmd("response saturated at the BMD");
    return ((1.0 - q) * p0 * (1.0 - p0) * e0 - wt * dtau) / (s * wt);
}

bool multistage_feasible(const ParamVector& beta, const std::vector<double>& doses,
                         double tol) {
    for (double d : doses)
        if (poly_eval(beta, d) < -tol) return false;
    return true;
}

}  // namespace bmd
