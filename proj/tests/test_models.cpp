#include <doctest.h>

#include "bmd/models.hpp"

#include <cmath>
#include <random>

using namespace bmd;

namespace {

// central differences; step scaled per coordinate
Eigen::VectorXd fd_grad_pi(const ModelSpec& spec, const ParamVector& beta, double dose) {
    Eigen::VectorXd g(beta.size());
    for (int k = 0; k < beta.size(); ++k) {
        double h = 1e-6 * (1.0 + std::abs(beta[k]));
        ParamVector up = beta, dn = beta;
        up[k] += h;
        dn[k] -= h;
        g[k] = (eval_pi(spec, up, dose) - eval_pi(spec, dn, dose)) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd fd_hess_pi(const ModelSpec& spec, const ParamVector& beta, double dose) {
    Eigen::MatrixXd hmat(beta.size(), beta.size());
    for (int k = 0; k < beta.size(); ++k) {
        double h = 1e-5 * (1.0 + std::abs(beta[k]));
        ParamVector up = beta, dn = beta;
        up[k] += h;
        dn[k] -= h;
        hmat.col(k) = (grad_pi(spec, up, dose) - grad_pi(spec, dn, dose)) / (2.0 * h);
    }
    return 0.5 * (hmat + hmat.transpose());
}

Eigen::VectorXd fd_bmd_gradient(const ModelSpec& spec, const ParamVector& beta, double q) {
    Eigen::VectorXd g(beta.size());
    for (int k = 0; k < beta.size(); ++k) {
        double h = 1e-4 * (1.0 + std::abs(beta[k]));
        ParamVector up = beta, dn = beta;
        up[k] += h;
        dn[k] -= h;
        g[k] = (bmd::bmd(spec, up, q) - bmd::bmd(spec, dn, q)) / (2.0 * h);
    }
    return g;
}

ParamVector random_beta(const ModelSpec& spec, std::mt19937& gen) {
    ParamVector beta(spec.order + 1);
    if (spec.family == Family::Logistic) {
        std::uniform_real_distribution<double> b0(-3.0, 0.0), bk(-1.0, 2.5);
        beta[0] = b0(gen);
        for (int k = 1; k <= spec.order; ++k) beta[k] = bk(gen);
    } else {
        // nonnegative coefficients keep every design dose feasible
        std::uniform_real_distribution<double> bk(0.05, 2.0);
        for (int k = 0; k <= spec.order; ++k) beta[k] = bk(gen);
    }
    return beta;
}

}  // namespace

TEST_CASE("labels round-trip and order canonically") {
    CHECK(label(ModelSpec{Family::Logistic, 1}) == "LG1");
    CHECK(label(ModelSpec{Family::Multistage, 2}) == "MS2");
    for (const char* s : {"LG1", "LG2", "LG3", "MS1", "MS2", "MS10"}) {
        auto spec = spec_from_label(s);
        REQUIRE(spec.has_value());
        CHECK(label(*spec) == s);
    }
    for (const char* s : {"", "LG", "LG0", "LG-1", "lg1", "XX1", "LG1x", "MS"}) {
        CHECK_FALSE(spec_from_label(s).has_value());
    }
    ModelSpec lg1{Family::Logistic, 1}, lg2{Family::Logistic, 2};
    ModelSpec ms1{Family::Multistage, 1}, ms2{Family::Multistage, 2};
    CHECK(lg1 < lg2);
    CHECK(lg2 < ms1);
    CHECK(ms1 < ms2);
    CHECK_FALSE(ms1 < lg2);
    CHECK_FALSE(lg1 < lg1);
}

TEST_CASE("dose_vector stacks monomials") {
    Eigen::VectorXd v = dose_vector(3, 2.0);
    REQUIRE(v.size() == 4);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 2.0);
    CHECK(v[2] == 4.0);
    CHECK(v[3] == 8.0);
}

TEST_CASE("curve evaluation matches the closed forms") {
    ModelSpec lg{Family::Logistic, 1};
    ParamVector b(2);
    b << -1.0, 2.0;
    CHECK(eval_pi(lg, b, 0.5) == doctest::Approx(1.0 / (1.0 + std::exp(0.0))));
    CHECK(eval_pi(lg, b, 0.0) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))));

    ModelSpec ms{Family::Multistage, 2};
    ParamVector c(3);
    c << 0.1, 0.3, 0.5;
    CHECK(eval_pi(ms, c, 0.5) == doctest::Approx(1.0 - std::exp(-(0.1 + 0.15 + 0.125))));
    CHECK(eval_pi(ms, c, 0.0) == doctest::Approx(1.0 - std::exp(-0.1)));

    // extreme linear predictors stay inside [0,1]
    ParamVector big(2);
    big << -800.0, 1600.0;
    CHECK(eval_pi(lg, big, 0.0) == 0.0);
    CHECK(eval_pi(lg, big, 1.0) == 1.0);
}

TEST_CASE("curve derivatives match finite differences") {
    std::mt19937 gen(42);
    std::uniform_real_distribution<double> du(0.0, 1.0);
    for (Family fam : {Family::Logistic, Family::Multistage}) {
        for (int order : {1, 2}) {
            ModelSpec spec{fam, order};
            for (int rep = 0; rep < 100; ++rep) {
                ParamVector beta = random_beta(spec, gen);
                double dose = du(gen);
                Eigen::VectorXd g = grad_pi(spec, beta, dose);
                Eigen::VectorXd gfd = fd_grad_pi(spec, beta, dose);
                CHECK((g - gfd).cwiseAbs().maxCoeff() < 1e-5 * (1.0 + g.cwiseAbs().maxCoeff()));
                Eigen::MatrixXd hmat = hess_pi(spec, beta, dose);
                Eigen::MatrixXd hfd = fd_hess_pi(spec, beta, dose);
                CHECK((hmat - hfd).cwiseAbs().maxCoeff() <
                      1e-4 * (1.0 + hmat.cwiseAbs().maxCoeff()));
            }
        }
    }
}

TEST_CASE("extra risk is zero at dose zero and increases along increasing curves") {
    ModelSpec ms{Family::Multistage, 2};
    ParamVector c(3);
    c << 0.2, 0.4, 0.6;
    CHECK(extra_risk(ms, c, 0.0) == doctest::Approx(0.0));
    double prev = 0.0;
    for (double d : {0.1, 0.3, 0.5, 0.9, 1.3}) {
        double r = extra_risk(ms, c, d);
        CHECK(r > prev);
        prev = r;
    }
}

TEST_CASE("benchmark dose inverts the extra-risk curve") {
    std::mt19937 gen(7);
    for (Family fam : {Family::Logistic, Family::Multistage}) {
        for (int order : {1, 2}) {
            ModelSpec spec{fam, order};
            int accepted = 0;
            while (accepted < 100) {
                ParamVector beta = random_beta(spec, gen);
                for (double q : {0.01, 0.05, 0.10}) {
                    double tau;
                    try {
                        tau = bmd::bmd(spec, beta, q);
                    } catch (const BmrUnattainable&) {
                        goto next_draw;
                    }
                    CHECK(std::abs(extra_risk(spec, beta, tau) - q) < 1e-8);
                }
                ++accepted;
            next_draw:;
            }
        }
    }
}

TEST_CASE("quadratic multistage benchmark dose matches the root formula") {
    // extra risk q solves b1 t + b2 t^2 = -log(1-q); background cancels
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> bk(0.05, 2.0);
    ModelSpec ms2{Family::Multistage, 2};
    for (int rep = 0; rep < 200; ++rep) {
        ParamVector beta(3);
        beta << bk(gen), bk(gen), bk(gen);
        for (double q : {0.01, 0.05, 0.10}) {
            double L = -std::log1p(-q);
            double b1 = beta[1], b2 = beta[2];
            double root = (-b1 + std::sqrt(b1 * b1 + 4.0 * b2 * L)) / (2.0 * b2);
            CHECK(std::abs(bmd::bmd(ms2, beta, q) - root) < 1e-8);
        }
    }
}

TEST_CASE("benchmark dose is increasing in the benchmark level") {
    ModelSpec lg{Family::Logistic, 2};
    ParamVector b(3);
    b << -3.0, 1.5, 2.0;
    double t1 = bmd::bmd(lg, b, 0.01), t5 = bmd::bmd(lg, b, 0.05), t10 = bmd::bmd(lg, b, 0.10);
    CHECK(t1 < t5);
    CHECK(t5 < t10);
}

TEST_CASE("degenerate and unattainable curves throw") {
    ModelSpec lg{Family::Logistic, 1};
    ParamVector flat(2);
    flat << 0.5, 0.0;
    CHECK_THROWS_AS(bmd::bmd(lg, flat, 0.1), DegenerateCurve);

    ParamVector falling(2);
    falling << 0.0, -1.0;
    CHECK_THROWS_AS(bmd::bmd(lg, falling, 0.1), BmrUnattainable);

    // slope too shallow to reach the level inside the search cap
    ParamVector shallow(2);
    shallow << -5.0, 0.001;
    CHECK_THROWS_AS(bmd::bmd(lg, shallow, 0.1), BmrUnattainable);

    ParamVector bad(2);
    bad << 0.0, 1.0;
    CHECK_THROWS_AS(bmd::bmd(lg, bad, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(bmd::bmd(lg, bad, 1.0), std::invalid_argument);

    ModelSpec ms{Family::Multistage, 1};
    ParamVector sat(2);
    sat << 800.0, 1.0;                        // background probability rounds to 1
    CHECK_THROWS_AS(extra_risk(ms, sat, 0.5), DegenerateCurve);
}

TEST_CASE("benchmark-dose gradient matches finite differences") {
    std::mt19937 gen(99);
    for (Family fam : {Family::Logistic, Family::Multistage}) {
        for (int order : {1, 2}) {
            ModelSpec spec{fam, order};
            int accepted = 0;
            while (accepted < 100) {
                ParamVector beta = random_beta(spec, gen);
                for (double q : {0.01, 0.10}) {
                    Eigen::VectorXd g, gfd;
                    try {
                        g = bmd_gradient(spec, beta, q);
                        gfd = fd_bmd_gradient(spec, beta, q);
                    } catch (const BmrUnattainable&) {
                        goto next_draw;
                    }
                    CHECK((g - gfd).cwiseAbs().maxCoeff() <
                          1e-4 * (1.0 + g.cwiseAbs().maxCoeff()));
                }
                ++accepted;
            next_draw:;
            }
        }
    }
}

TEST_CASE("multistage gradient zeroes the background slot") {
    // the background coefficient shifts all probabilities but not extra risk
    ModelSpec ms{Family::Multistage, 2};
    ParamVector beta(3);
    beta << 0.3, 0.5, 0.7;
    Eigen::VectorXd g = bmd_gradient(ms, beta, 0.05);
    ParamVector shifted = beta;
    shifted[0] += 0.4;
    CHECK(bmd::bmd(ms, shifted, 0.05) == doctest::Approx(bmd::bmd(ms, beta, 0.05)));
    CHECK(std::abs(g[0]) < 1e-12);
}

TEST_CASE("multistage feasibility checks the polynomial at the design doses") {
    std::vector<double> doses{0.0, 0.5, 1.0};
    ParamVector ok(3);
    ok << 0.0, 1.0, -0.5;                      // dips but stays nonnegative on the design
    CHECK(multistage_feasible(ok, doses));
    ParamVector bad(3);
    bad << 0.0, -1.0, 0.5;
    CHECK_FALSE(multistage_feasible(bad, doses));
    CHECK(multistage_feasible(bad, {0.0}));
    ParamVector margin(2);
    margin << -1e-9, 1.0;
    CHECK_FALSE(multistage_feasible(margin, doses));
    CHECK(multistage_feasible(margin, doses, 1e-8));
}
