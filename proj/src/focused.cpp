#include "bmd/focused.hpp"

#include "bmd/selection.hpp"
#include "optim.hpp"

#include <cmath>

namespace bmd {

namespace {

constexpr double kContractFloor = 1e-10;    // kl_* public operations
constexpr double kPolicyFloor = 1e-8;       // risk-matrix probability clamp

std::vector<double> clamp_probs(const std::vector<double>& probs, double floor) {
    std::vector<double> out = probs;
    for (double& p : out) p = std::min(std::max(p, floor), 1.0 - floor);
    return out;
}

std::vector<double> subject_weights(const QuantalDataset& data) {
    std::vector<double> w(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) w[j] = double(data.subjects[j]);
    return w;
}

void check_target(const QuantalDataset& data, const std::vector<double>& target_probs) {
    if (target_probs.size() != data.size())
        throw std::invalid_argument("target probabilities do not match the design");
}

Eigen::MatrixXd score_cov_impl(const QuantalDataset& data,
                               const std::vector<double>& target_probs,
                               const ModelSpec& spec, const ParamVector& beta,
                               double floor) {
    const int g = spec.order + 1;
    std::vector<double> w = subject_weights(data);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g, g);
    for (std::size_t j = 0; j < data.size(); ++j) {
        double pi = std::min(std::max(eval_pi(spec, beta, data.doses[j]), floor), 1.0 - floor);
        double pt = target_probs[j];
        Eigen::VectorXd d = dose_vector(spec.order, data.doses[j]);
        double wj = spec.family == Family::Logistic
                        ? w[j] * pt * (1.0 - pt)
                        : w[j] * pt * (1.0 - pt) * (1.0 - pi) * (1.0 - pi) /
                              ((pi * (1.0 - pi)) * (pi * (1.0 - pi)));
        out.noalias() += wj * (d * d.transpose());
    }
    return out;
}

}  // namespace

double kl_objective(const QuantalDataset& data, const std::vector<double>& target_probs,
                    const ModelSpec& spec, const ParamVector& beta) {
    check_target(data, target_probs);
    return detail::weighted_ll(spec, data.doses, subject_weights(data), target_probs, beta);
}

Eigen::VectorXd kl_score(const QuantalDataset& data, const std::vector<double>& target_probs,
                         const ModelSpec& spec, const ParamVector& beta) {
    check_target(data, target_probs);
    return detail::weighted_score(spec, data.doses, subject_weights(data), target_probs,
                                  beta, kContractFloor);
}

Eigen::MatrixXd kl_info(const QuantalDataset& data, const std::vector<double>& target_probs,
                        const ModelSpec& spec, const ParamVector& beta) {
    check_target(data, target_probs);
    return detail::weighted_neg_hess(spec, data.doses, subject_weights(data), target_probs,
                                     beta, kContractFloor);
}

Eigen::MatrixXd kl_info_generic(const QuantalDataset& data,
                                const std::vector<double>& target_probs,
                                const ModelSpec& spec, const ParamVector& beta) {
    check_target(data, target_probs);
    const int g = spec.order + 1;
    std::vector<double> w = subject_weights(data);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g, g);
    for (std::size_t j = 0; j < data.size(); ++j) {
        double pi = std::min(std::max(eval_pi(spec, beta, data.doses[j]), kContractFloor),
                             1.0 - kContractFloor);
        double pt = target_probs[j];
        double v = pi * (1.0 - pi);
        Eigen::VectorXd gp = grad_pi(spec, beta, data.doses[j]);
        Eigen::MatrixXd hp = hess_pi(spec, beta, data.doses[j]);
        out.noalias() += w[j] * ((v + (pt - pi) * (1.0 - 2.0 * pi)) / (v * v)) *
                         (gp * gp.transpose());
        out.noalias() -= w[j] * ((pt - pi) / v) * hp;
    }
    return out;
}

Eigen::MatrixXd score_covariance(const QuantalDataset& data,
                                 const std::vector<double>& target_probs,
                                 const ModelSpec& spec, const ParamVector& beta) {
    check_target(data, target_probs);
    return score_cov_impl(data, target_probs, spec, beta, kContractFloor);
}

Eigen::MatrixXd score_covariance_generic(const QuantalDataset& data,
                                         const std::vector<double>& target_probs,
                                         const ModelSpec& spec, const ParamVector& beta) {
    check_target(data, target_probs);
    const int g = spec.order + 1;
    std::vector<double> w = subject_weights(data);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g, g);
    for (std::size_t j = 0; j < data.size(); ++j) {
        double pi = std::min(std::max(eval_pi(spec, beta, data.doses[j]), kContractFloor),
                             1.0 - kContractFloor);
        double pt = target_probs[j];
        double v = pi * (1.0 - pi);
        Eigen::VectorXd gp = grad_pi(spec, beta, data.doses[j]);
        out.noalias() += w[j] * (pt * (1.0 - pt) / (v * v)) * (gp * gp.transpose());
    }
    return out;
}

ParamVector kl_project(const QuantalDataset& data, const std::vector<double>& target_probs,
                       const ModelSpec& spec) {
    check_target(data, target_probs);
    std::vector<double> clamped = clamp_probs(target_probs, kPolicyFloor);
    detail::WeightedFit fit =
        detail::maximize_weighted_ll(spec, data.doses, subject_weights(data), clamped);
    if (fit.separated)
        throw ProjectionFailed(label(spec) + " projection: parameter norm exceeded 1e3");
    if (!fit.converged)
        throw ProjectionFailed(label(spec) + " projection: score residual " +
                               std::to_string(fit.residual) + " above 1e-6");
    return fit.beta;
}

Eigen::VectorXd risk_bmd_gradient(const ModelSpec& spec, const ParamVector& beta,
                                  double q, double max_design_dose) {
    if (spec.family == Family::Logistic)
        return bmd_gradient(spec, beta, q, max_design_dose);

    double tau = bmd(spec, beta, q, max_design_dose);
    double s = 0.0;
    for (int k = 1; k <= spec.order; ++k) s += k * beta[k] * std::pow(tau, k - 1);
    if (s == 0.0) throw FlatDoseResponseAtBmd("dose-slope vanishes at the BMD");
    double qbar = 1.0 - q;
    double pibar0 = std::exp(-beta[0]);
    double pit = 1.0 - qbar * pibar0;           // pi at the BMD
    Eigen::VectorXd dtau = dose_vector(spec.order, tau);
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(spec.order + 1);
    e0[0] = 1.0;
    return (qbar * pibar0 * e0 - pit * dtau) / (s * qbar * pibar0);
}

namespace {

// q-independent part of a risk cell: the projection and its sandwich matrix.
struct ProjectedCell {
    ParamVector theta;
    Eigen::MatrixXd xi;          // Ahat^{-1} Sigmahat Ahat^{-1}
    bool ok = false;
    std::string failure;
};

ProjectedCell project_cell(const QuantalDataset& data, const TargetDistribution& target,
                           const ModelSpec& spec) {
    ProjectedCell out;
    try {
        out.theta = kl_project(data, target.probs, spec);
        const double n = double(data.n_total);
        Eigen::MatrixXd ahat =
            detail::weighted_neg_hess(spec, data.doses, subject_weights(data),
                                      target.probs, out.theta, kPolicyFloor) / n;
        Eigen::MatrixXd shat =
            score_cov_impl(data, target.probs, spec, out.theta, kPolicyFloor) / n;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(ahat);
        if (!lu.isInvertible())
            throw SingularInformation(label(spec) + ": information matrix singular");
        Eigen::MatrixXd ainv = lu.inverse();
        out.xi = ainv * shat * ainv;
        out.ok = true;
    } catch (const std::exception& e) {
        out.failure = e.what();
    }
    return out;
}

RiskCell finish_cell(const QuantalDataset& data, const ProjectedCell& proj,
                     const ModelSpec& spec, double q, double anchor,
                     double max_design_dose) {
    RiskCell cell;
    if (!proj.ok) {
        cell.failure = proj.failure;
        return cell;
    }
    try {
        Eigen::VectorXd td = risk_bmd_gradient(spec, proj.theta, q, max_design_dose);
        cell.gamma = td.dot(proj.xi * td);
        cell.projected_bmd = bmd(spec, proj.theta, q, max_design_dose);
        cell.bias = cell.projected_bmd - anchor;
        cell.risk = cell.gamma + double(data.n_total) * cell.bias * cell.bias;
        cell.ok = std::isfinite(cell.risk);
        if (!cell.ok) cell.failure = "risk not finite";
    } catch (const std::exception& e) {
        cell.failure = e.what();
    }
    return cell;
}

RiskCell compute_cell(const QuantalDataset& data, const TargetDistribution& target,
                      const ModelSpec& spec, double q, double anchor,
                      double max_design_dose) {
    return finish_cell(data, project_cell(data, target, spec), spec, q, anchor,
                       max_design_dose);
}

}  // namespace

double gamma_hat(const QuantalDataset& data, const TargetDistribution& target,
                 const ModelSpec& spec, double q, double max_design_dose) {
    check_target(data, target.probs);
    ParamVector theta = kl_project(data, target.probs, spec);
    const double n = double(data.n_total);
    Eigen::MatrixXd ahat =
        detail::weighted_neg_hess(spec, data.doses, subject_weights(data), target.probs,
                                  theta, kPolicyFloor) / n;
    Eigen::MatrixXd shat = score_cov_impl(data, target.probs, spec, theta, kPolicyFloor) / n;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ahat);
    if (!lu.isInvertible())
        throw SingularInformation(label(spec) + ": information matrix singular");
    Eigen::MatrixXd ainv = lu.inverse();
    Eigen::VectorXd td = risk_bmd_gradient(spec, theta, q, max_design_dose);
    return td.dot(ainv * shat * ainv * td);
}

double risk_estimate(const QuantalDataset& data, const TargetDistribution& target,
                     const ModelSpec& spec, double q, double anchor_bmd,
                     double max_design_dose) {
    check_target(data, target.probs);
    RiskCell cell = compute_cell(data, target, spec, q, anchor_bmd, max_design_dose);
    if (!cell.ok) throw ProjectionFailed(label(spec) + " risk cell: " + cell.failure);
    return cell.risk;
}

const RiskCell& RiskMatrix::at(const ModelSpec& row, const std::string& target_name) const {
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!(rows[r] == row)) continue;
        for (std::size_t t = 0; t < targets.size(); ++t)
            if (targets[t].name == target_name) return cells[r][t];
    }
    throw std::out_of_range("no risk cell (" + label(row) + ", " + target_name + ")");
}

std::vector<RiskMatrix> build_risk_matrices(const QuantalDataset& data,
                                            const std::vector<FittedModel>& fits,
                                            const PavaFit& isotonic,
                                            const std::vector<double>& q_values,
                                            double max_design_dose) {
    data.validate();
    if (fits.empty()) throw SelectionError("no fitted models for the risk matrix");

    std::vector<ModelSpec> rows;
    std::vector<TargetDistribution> targets;
    for (const FittedModel& f : fits) {
        TargetDistribution t;
        t.source = TargetDistribution::Source::ModelBased;
        t.model = f.spec;
        t.name = label(f.spec);
        t.probs = clamp_probs(eval_pi(f.spec, f.beta, data.doses), kPolicyFloor);
        ModelSpec spec = f.spec;
        ParamVector beta = f.beta;
        t.bmd_fn = [spec, beta, max_design_dose](double qq) {
            return bmd(spec, beta, qq, max_design_dose);
        };
        targets.push_back(std::move(t));
        rows.push_back(f.spec);
    }
    {
        TargetDistribution t;
        t.source = TargetDistribution::Source::Empirical;
        t.name = "EMP";
        t.probs = isotonic.probs;                  // kept raw by design
        PavaFit iso = isotonic;
        t.bmd_fn = [iso](double qq) { return nonpar_bmd(iso, qq).dose; };
        targets.push_back(std::move(t));
    }

    // projections and sandwich matrices do not depend on q; share them
    std::vector<std::vector<ProjectedCell>> projected(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (const TargetDistribution& t : targets)
            projected[r].push_back(project_cell(data, t, rows[r]));

    std::vector<RiskMatrix> out;
    for (double q : q_values) {
        RiskMatrix m;
        m.q = q;
        m.anchor = nonpar_bmd(isotonic, q).dose;
        m.rows = rows;
        m.targets = targets;
        m.cells.resize(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t t = 0; t < targets.size(); ++t)
                m.cells[r].push_back(finish_cell(data, projected[r][t], rows[r], q,
                                                 m.anchor, max_design_dose));
        out.push_back(std::move(m));
    }
    return out;
}

RiskMatrix build_risk_matrix(const QuantalDataset& data,
                             const std::vector<FittedModel>& fits,
                             const PavaFit& isotonic, double q,
                             double max_design_dose) {
    return build_risk_matrices(data, fits, isotonic, {q}, max_design_dose).front();
}

ModelSpec fic_select(const RiskMatrix& matrix, FicVariant variant) {
    const std::size_t nrow = matrix.rows.size();
    if (nrow == 0) throw SelectionError("empty risk matrix");
    const std::size_t ncol = matrix.targets.size();

    if (variant == FicVariant::EMP) {
        std::size_t emp = ncol;
        for (std::size_t t = 0; t < ncol; ++t)
            if (matrix.targets[t].source == TargetDistribution::Source::Empirical) emp = t;
        if (emp == ncol) throw SelectionError("risk matrix has no empirical column");
        std::size_t best = nrow;
        for (std::size_t r = 0; r < nrow; ++r) {
            const RiskCell& c = matrix.cells[r][emp];
            if (!c.ok) continue;
            if (best == nrow || c.risk < matrix.cells[best][emp].risk) best = r;
        }
        if (best == nrow) throw SelectionError("every empirical risk cell failed");
        return matrix.rows[best];
    }

    std::size_t br = nrow, bt = ncol;
    for (std::size_t r = 0; r < nrow; ++r) {
        for (std::size_t t = 0; t < ncol; ++t) {
            if (matrix.targets[t].source != TargetDistribution::Source::ModelBased) continue;
            const RiskCell& c = matrix.cells[r][t];
            if (!c.ok) continue;
            if (br == nrow || c.risk < matrix.cells[br][bt].risk) { br = r; bt = t; }
        }
    }
    if (br == nrow) throw SelectionError("every model-based risk cell failed");
    return variant == FicVariant::FE ? matrix.rows[br] : *matrix.targets[bt].model;
}

BmdEstimate fic_bmd(const RiskMatrix& matrix, const std::vector<FittedModel>& fits,
                    FicVariant variant, double max_design_dose) {
    ModelSpec chosen = fic_select(matrix, variant);
    for (const FittedModel& f : fits) {
        if (f.spec == chosen) {
            BmdEstimate out;
            out.q = matrix.q;
            out.dose = bmd(f.spec, f.beta, matrix.q, max_design_dose);
            out.estimator = fic_name(variant);
            out.selected = chosen;
            return out;
        }
    }
    throw SelectionError("selected class " + label(chosen) + " has no fit");
}

const char* fic_name(FicVariant variant) {
    switch (variant) {
        case FicVariant::FE: return "FIC1";
        case FicVariant::FM: return "FIC2";
        default: return "FIC3";
    }
}

}  // namespace bmd
