#include "optim.hpp"

#include "bmd/nonparametric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace bmd::detail {

namespace {

constexpr double kProbFloor = 1e-10;
constexpr double kResidualTol = 1e-6;
constexpr double kSeparationBound = 1e3;
constexpr double kInfeasible = -1e300;

double clampp(double p, double floor) {
    return std::min(std::max(p, floor), 1.0 - floor);
}

std::vector<double> slacks(const std::vector<double>& doses, const ParamVector& beta) {
    std::vector<double> s(doses.size());
    for (std::size_t j = 0; j < doses.size(); ++j) {
        double eta = 0.0;
        for (int k = int(beta.size()) - 1; k >= 0; --k) eta = eta * doses[j] + beta[k];
        s[j] = eta;
    }
    return s;
}

double min_slack(const std::vector<double>& doses, const ParamVector& beta) {
    double m = std::numeric_limits<double>::infinity();
    for (double s : slacks(doses, beta)) m = std::min(m, s);
    return m;
}

}  // namespace

double weighted_ll(const ModelSpec& spec, const std::vector<double>& doses,
                   const std::vector<double>& w, const std::vector<double>& y,
                   const ParamVector& beta) {
    double ll = 0.0;
    for (std::size_t j = 0; j < doses.size(); ++j) {
        double pi = clampp(eval_pi(spec, beta, doses[j]), kProbFloor);
        double a = w[j] * y[j], b = w[j] * (1.0 - y[j]);
        if (a > 0.0) ll += a * std::log(pi);
        if (b > 0.0) ll += b * std::log1p(-pi);
    }
    return ll;
}

Eigen::VectorXd weighted_score(const ModelSpec& spec, const std::vector<double>& doses,
                               const std::vector<double>& w, const std::vector<double>& y,
                               const ParamVector& beta, double floor) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(beta.size());
    for (std::size_t j = 0; j < doses.size(); ++j) {
        double pi = clampp(eval_pi(spec, beta, doses[j]), floor);
        Eigen::VectorXd d = dose_vector(spec.order, doses[j]);
        if (spec.family == Family::Logistic)
            u += w[j] * (y[j] - pi) * d;
        else
            u += w[j] * (y[j] - pi) / pi * d;
    }
    return u;
}

Eigen::MatrixXd weighted_neg_hess(const ModelSpec& spec, const std::vector<double>& doses,
                                  const std::vector<double>& w, const std::vector<double>& y,
                                  const ParamVector& beta, double floor) {
    const int g = int(beta.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(g, g);
    for (std::size_t j = 0; j < doses.size(); ++j) {
        double pi = clampp(eval_pi(spec, beta, doses[j]), floor);
        Eigen::VectorXd d = dose_vector(spec.order, doses[j]);
        double wj = spec.family == Family::Logistic ? w[j] * pi * (1.0 - pi)
                                                    : w[j] * y[j] * (1.0 - pi) / (pi * pi);
        h.noalias() += wj * (d * d.transpose());
    }
    return h;
}

double projected_residual(const ModelSpec& spec, const std::vector<double>& doses,
                          const ParamVector& beta, const Eigen::VectorXd& score) {
    if (spec.family == Family::Logistic) return score.cwiseAbs().maxCoeff();

    std::vector<Eigen::VectorXd> active;
    std::vector<double> s = slacks(doses, beta);
    for (std::size_t j = 0; j < doses.size(); ++j)
        if (s[j] <= 1e-7) active.push_back(dose_vector(spec.order, doses[j]));
    if (active.empty()) return score.cwiseAbs().maxCoeff();

    // KKT: score = -sum lambda_j d_j with lambda >= 0; residual after the best
    // such fit, by cyclic nonnegative coordinate descent.
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(active.size());
    Eigen::VectorXd r = score;
    for (int sweep = 0; sweep < 200; ++sweep) {
        double change = 0.0;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const Eigen::VectorXd& d = active[i];
            double step = -r.dot(d) / d.squaredNorm();
            double nl = std::max(0.0, lam[i] + step);
            double delta = nl - lam[i];
            if (delta != 0.0) {
                r += delta * d;
                lam[i] = nl;
                change = std::max(change, std::abs(delta));
            }
        }
        if (change < 1e-14) break;
    }
    return r.cwiseAbs().maxCoeff();
}

namespace {

// Nelder-Mead maximization, dimension <= 3 in practice.
ParamVector nelder_mead(const std::function<double(const ParamVector&)>& f,
                        const ParamVector& x0, int max_evals) {
    const int n = int(x0.size());
    std::vector<ParamVector> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (int k = 0; k < n; ++k) xs[k + 1][k] += std::max(0.25, 0.25 * std::abs(x0[k]));
    int evals = 0;
    for (int i = 0; i <= n; ++i) { fs[i] = f(xs[i]); ++evals; }

    auto order = [&] {
        for (int i = 1; i <= n; ++i)
            for (int j = i; j > 0 && fs[j] > fs[j - 1]; --j) {
                std::swap(fs[j], fs[j - 1]);
                std::swap(xs[j], xs[j - 1]);
            }
    };
    order();
    while (evals < max_evals) {
        ParamVector centroid = ParamVector::Zero(n);
        for (int i = 0; i < n; ++i) centroid += xs[i];
        centroid /= n;
        ParamVector xr = centroid + (centroid - xs[n]);
        double fr = f(xr); ++evals;
        if (fr > fs[0]) {
            ParamVector xe = centroid + 2.0 * (centroid - xs[n]);
            double fe = f(xe); ++evals;
            if (fe > fr) { xs[n] = xe; fs[n] = fe; }
            else { xs[n] = xr; fs[n] = fr; }
        } else if (fr > fs[n - 1]) {
            xs[n] = xr; fs[n] = fr;
        } else {
            ParamVector xc = centroid + 0.5 * (xs[n] - centroid);
            double fc = f(xc); ++evals;
            if (fc > fs[n]) { xs[n] = xc; fs[n] = fc; }
            else {
                for (int i = 1; i <= n; ++i) {
                    xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                    fs[i] = f(xs[i]); ++evals;
                }
            }
        }
        order();
        double spread = 0.0;
        for (int i = 1; i <= n; ++i) spread = std::max(spread, std::abs(fs[0] - fs[i]));
        if (spread < 1e-12 && (xs[0] - xs[n]).cwiseAbs().maxCoeff() < 1e-10) break;
    }
    return xs[0];
}

struct PolishResult {
    ParamVector beta;
    bool separated = false;
    int iterations = 0;
};

// Damped Newton ascent for the unconstrained (logistic) objective.
PolishResult polish_logistic(const ModelSpec& spec, const std::vector<double>& doses,
                             const std::vector<double>& w, const std::vector<double>& y,
                             ParamVector beta, int max_iter) {
    PolishResult out;
    double cur = weighted_ll(spec, doses, w, y, beta);
    for (int it = 0; it < max_iter; ++it) {
        ++out.iterations;
        if (beta.cwiseAbs().maxCoeff() > kSeparationBound) {
            out.separated = true;
            break;
        }
        Eigen::VectorXd u = weighted_score(spec, doses, w, y, beta);
        if (u.cwiseAbs().maxCoeff() <= 0.1 * kResidualTol) break;
        Eigen::MatrixXd h = weighted_neg_hess(spec, doses, w, y, beta);
        double ridge = 0.0;
        Eigen::VectorXd step;
        for (;;) {
            Eigen::MatrixXd hr = h;
            if (ridge > 0.0) hr.diagonal().array() += ridge;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(hr);
            step = ldlt.solve(u);
            if (ldlt.info() == Eigen::Success && step.dot(u) > 0.0) break;
            ridge = ridge == 0.0 ? 1e-8 * (1.0 + h.trace()) : 10.0 * ridge;
            if (ridge > 1e12) { step = u; break; }     // gradient fallback
        }
        const double unorm = u.cwiseAbs().maxCoeff();
        double t = 1.0;
        bool moved = false;
        for (int half = 0; half < 50; ++half, t *= 0.5) {
            ParamVector cand = beta + t * step;
            double val = weighted_ll(spec, doses, w, y, cand);
            bool accept = val > cur;
            if (!accept && half == 0) {
                // near the optimum the objective increment drops below the fp
                // noise floor; let the quadratic phase finish on the gradient
                Eigen::VectorXd uc = weighted_score(spec, doses, w, y, cand);
                accept = uc.cwiseAbs().maxCoeff() < 0.5 * unorm;
            }
            if (accept) {
                beta = cand;
                cur = std::max(cur, val);
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    out.beta = beta;
    return out;
}

// Log-barrier continuation for the multistage constraints. The objective is
// concave and each barrier subproblem strictly so; decreasing the barrier
// weight walks the central path to the (possibly boundary) optimum.
PolishResult polish_multistage(const ModelSpec& spec, const std::vector<double>& doses,
                               const std::vector<double>& w, const std::vector<double>& y,
                               ParamVector beta, int max_iter) {
    PolishResult out;
    if (min_slack(doses, beta) <= 0.0)
        beta[0] += 1e-4 - min_slack(doses, beta);

    auto barrier_value = [&](const ParamVector& b, double mu) {
        double v = weighted_ll(spec, doses, w, y, b);
        for (double s : slacks(doses, b)) {
            if (s <= 0.0) return kInfeasible;
            v += mu * std::log(s);
        }
        return v;
    };

    auto barrier_grad_norm = [&](const ParamVector& b, double mu) -> double {
        std::vector<double> sb = slacks(doses, b);
        Eigen::VectorXd gb = weighted_score(spec, doses, w, y, b);
        for (std::size_t j = 0; j < doses.size(); ++j) {
            if (sb[j] <= 0.0) return std::numeric_limits<double>::infinity();
            gb += mu / sb[j] * dose_vector(spec.order, doses[j]);
        }
        return gb.cwiseAbs().maxCoeff();
    };

    const double mus[] = {1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
    for (double mu : mus) {
        double cur = barrier_value(beta, mu);
        for (int it = 0; it < max_iter / 5; ++it) {
            ++out.iterations;
            if (beta.cwiseAbs().maxCoeff() > kSeparationBound) {
                out.separated = true;
                return out;
            }
            std::vector<double> s = slacks(doses, beta);
            Eigen::VectorXd g = weighted_score(spec, doses, w, y, beta);
            Eigen::MatrixXd h = weighted_neg_hess(spec, doses, w, y, beta);
            for (std::size_t j = 0; j < doses.size(); ++j) {
                Eigen::VectorXd d = dose_vector(spec.order, doses[j]);
                g += mu / s[j] * d;
                h.noalias() += mu / (s[j] * s[j]) * (d * d.transpose());
            }
            if (g.cwiseAbs().maxCoeff() <= std::max(1e-10, 1e-4 * mu)) break;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            Eigen::VectorXd step = ldlt.solve(g);
            if (ldlt.info() != Eigen::Success || !(step.dot(g) > 0.0)) {
                Eigen::MatrixXd hr = h;
                hr.diagonal().array() += 1e-10 * (1.0 + h.trace());
                step = hr.ldlt().solve(g);
            }
            // fraction-to-boundary cap: no slack may lose more than half its
            // value in one step, which keeps the barrier term in Newton's basin
            double tcap = 1.0;
            for (std::size_t j = 0; j < doses.size(); ++j) {
                double a = dose_vector(spec.order, doses[j]).dot(step);
                if (a < 0.0) tcap = std::min(tcap, 0.5 * s[j] / (-a));
            }
            const double gnorm = g.cwiseAbs().maxCoeff();
            double t = tcap;
            bool moved = false;
            for (int half = 0; half < 60; ++half, t *= 0.5) {
                ParamVector cand = beta + t * step;
                double val = barrier_value(cand, mu);
                bool accept = val > cur;
                if (!accept && half == 0 && val > kInfeasible)
                    accept = barrier_grad_norm(cand, mu) < 0.5 * gnorm;
                if (accept) {
                    beta = cand;
                    cur = std::max(cur, val);
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
    }

    // The barrier path has identified the active boundary face but cannot
    // center tightly once objective increments fall below the fp noise
    // floor. Land exactly on the face and finish with Newton restricted to
    // its tangent space, where convergence is clean and quadratic.
    {
        // Active means the barrier path drove the slack to its floor
        // (~mu/lambda, 1e-12 scale). Pseudo-data with probabilities near 1e-8
        // put genuine interior optima at slack 1e-8, so the cut sits below.
        std::vector<double> s = slacks(doses, beta);
        std::vector<int> act;
        for (std::size_t j = 0; j < doses.size(); ++j)
            if (s[j] <= 1e-9) act.push_back(int(j));
        const int g = int(beta.size());
        Eigen::MatrixXd z;
        if (act.empty()) {
            z = Eigen::MatrixXd::Identity(g, g);
        } else {
            Eigen::MatrixXd c(act.size(), g);
            Eigen::VectorXd sv(act.size());
            for (std::size_t i = 0; i < act.size(); ++i) {
                c.row(i) = dose_vector(spec.order, doses[act[i]]).transpose();
                sv[i] = s[act[i]];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(c);
            z = lu.kernel();
            beta -= c.transpose() * (c * c.transpose()).ldlt().solve(sv);
        }
        double cur = weighted_ll(spec, doses, w, y, beta);
        for (int it = 0; z.cols() > 0 && it < 50; ++it) {
            ++out.iterations;
            if (beta.cwiseAbs().maxCoeff() > kSeparationBound) {
                out.separated = true;
                return out;
            }
            Eigen::VectorXd gz =
                z.transpose() * weighted_score(spec, doses, w, y, beta);
            if (gz.cwiseAbs().maxCoeff() <= 0.01 * kResidualTol) break;
            Eigen::MatrixXd hz =
                z.transpose() * weighted_neg_hess(spec, doses, w, y, beta) * z;
            hz.diagonal().array() += 1e-12 * (1.0 + hz.trace());
            Eigen::VectorXd dv = hz.ldlt().solve(gz);
            ParamVector dir = z * dv;
            const double gn = gz.cwiseAbs().maxCoeff();
            double t = 1.0;
            bool moved = false;
            for (int half = 0; half < 60; ++half, t *= 0.5) {
                ParamVector cand = beta + t * dir;
                if (min_slack(doses, cand) < -1e-12) continue;
                double val = weighted_ll(spec, doses, w, y, cand);
                bool accept = val > cur;
                if (!accept && half == 0) {
                    Eigen::VectorXd uc =
                        z.transpose() * weighted_score(spec, doses, w, y, cand);
                    accept = uc.cwiseAbs().maxCoeff() < 0.5 * gn;
                }
                if (accept) {
                    beta = cand;
                    cur = std::max(cur, val);
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
    }
    out.beta = beta;
    return out;
}

ParamVector wls_start(const ModelSpec& spec, const std::vector<double>& doses,
                      const std::vector<double>& w, const std::vector<double>& y) {
    std::vector<double> smooth = pava(y, w);
    const int g = spec.order + 1;
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(g, g);
    Eigen::VectorXd xtz = Eigen::VectorXd::Zero(g);
    for (std::size_t j = 0; j < doses.size(); ++j) {
        double p = std::min(std::max(smooth[j], 1e-3), 1.0 - 1e-3);
        double z = spec.family == Family::Logistic ? std::log(p / (1.0 - p))
                                                   : -std::log1p(-p);
        Eigen::VectorXd d = dose_vector(spec.order, doses[j]);
        xtx.noalias() += w[j] * (d * d.transpose());
        xtz.noalias() += w[j] * z * d;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    ParamVector b = ldlt.solve(xtz);
    if (ldlt.info() != Eigen::Success || !b.allFinite()) b = ParamVector::Zero(g);
    return b;
}

}  // namespace

WeightedFit maximize_weighted_ll(const ModelSpec& spec, const std::vector<double>& doses,
                                 const std::vector<double>& w, const std::vector<double>& y,
                                 const std::vector<ParamVector>& extra_starts,
                                 int max_iter) {
    const int g = spec.order + 1;
    std::vector<ParamVector> starts;
    starts.push_back(wls_start(spec, doses, w, y));
    starts.push_back(ParamVector::Zero(g));
    for (const ParamVector& b : extra_starts)
        if (b.size() == g && b.allFinite()) starts.push_back(b);

    const bool ms = spec.family == Family::Multistage;
    WeightedFit best;
    bool have = false;
    for (ParamVector start : starts) {
        if (ms && min_slack(doses, start) < 1e-4)
            start[0] += 1e-4 - min_slack(doses, start);

        auto nm_obj = [&](const ParamVector& b) -> double {
            double v = weighted_ll(spec, doses, w, y, b);
            if (!ms) return v;
            for (double s : slacks(doses, b)) {
                if (s <= 0.0) return kInfeasible;
                v += 1e-4 * std::log(s);
            }
            return v;
        };
        ParamVector localized = nelder_mead(nm_obj, start, 200 * g);
        if (ms && min_slack(doses, localized) <= 0.0) localized = start;

        PolishResult pol = ms ? polish_multistage(spec, doses, w, y, localized, max_iter)
                              : polish_logistic(spec, doses, w, y, localized, max_iter);

        WeightedFit cand;
        cand.separated = pol.separated;
        cand.iterations = pol.iterations;
        if (pol.separated) {
            cand.beta = pol.beta.size() ? pol.beta : localized;
            cand.value = kInfeasible;
        } else {
            ParamVector b = pol.beta;
            if (ms) {
                double m = min_slack(doses, b);
                if (m < 0.0 && m >= -1e-12) b[0] -= m;       // clip to the boundary
                for (int k = 0; k < g; ++k) {
                    if (b[k] != 0.0 && std::abs(b[k]) < 1e-9) {
                        ParamVector trial = b;
                        trial[k] = 0.0;
                        if (min_slack(doses, trial) >= 0.0) b = trial;
                    }
                }
            }
            cand.beta = b;
            cand.value = weighted_ll(spec, doses, w, y, b);
            Eigen::VectorXd u = weighted_score(spec, doses, w, y, b);
            cand.residual = projected_residual(spec, doses, b, u);
            cand.converged = cand.residual <= kResidualTol;
        }
        if (!have || (cand.converged && !best.converged) ||
            (cand.converged == best.converged && cand.value > best.value)) {
            best = cand;
            have = true;
        }
    }
    return best;
}

}  // namespace bmd::detail
