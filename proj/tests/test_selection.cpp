#include <doctest.h>

#include "bmd/selection.hpp"

#include <algorithm>
#include <cmath>

using namespace bmd;

namespace {

FittedModel make_fit(const ModelSpec& spec, std::initializer_list<double> beta,
                     double aic, double bic) {
    FittedModel f;
    f.spec = spec;
    f.beta = ParamVector(int(beta.size()));
    int k = 0;
    for (double b : beta) f.beta[k++] = b;
    f.aic = aic;
    f.bic = bic;
    f.converged = true;
    return f;
}

std::vector<FittedModel> bench() {
    return {
        make_fit({Family::Logistic, 1}, {-2.0, 3.0}, 150.0, 158.0),
        make_fit({Family::Logistic, 2}, {-3.0, 2.0, 1.0}, 149.0, 161.0),
        make_fit({Family::Multistage, 1}, {0.05, 0.8}, 147.5, 155.5),
        make_fit({Family::Multistage, 2}, {0.0, 0.3, 0.5}, 147.0, 159.0),
    };
}

}  // namespace

TEST_CASE("criterion weights follow the exponential formula and sum to one") {
    std::vector<FittedModel> fits = bench();
    auto weights = ic_weights(fits, Criterion::AIC);
    REQUIRE(weights.size() == fits.size());
    double vmin = 147.0;
    double total = 0.0;
    for (const FittedModel& f : fits) total += std::exp(-0.5 * (f.aic - vmin));
    double sum = 0.0;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        CHECK(weights[i].first == fits[i].spec);
        double expect = std::exp(-0.5 * (fits[i].aic - vmin)) / total;
        CHECK(weights[i].second == doctest::Approx(expect).epsilon(1e-12));
        sum += weights[i].second;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("criterion weights are invariant to a common shift") {
    std::vector<FittedModel> fits = bench();
    auto base = ic_weights(fits, Criterion::BIC);
    for (FittedModel& f : fits) f.bic += 1234.5;
    auto shifted = ic_weights(fits, Criterion::BIC);
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(shifted[i].second == doctest::Approx(base[i].second).epsilon(1e-12));

    // huge spreads stay finite because the minimum is subtracted first
    fits[0].bic = 1e6;
    auto extreme = ic_weights(fits, Criterion::BIC);
    CHECK(std::isfinite(extreme[0].second));
    CHECK(extreme[0].second == 0.0);
}

TEST_CASE("selection takes the smallest criterion value") {
    std::vector<FittedModel> fits = bench();
    CHECK(select_ic(fits, Criterion::AIC) == ModelSpec{Family::Multistage, 2});
    CHECK(select_ic(fits, Criterion::BIC) == ModelSpec{Family::Multistage, 1});
}

TEST_CASE("exact criterion ties resolve to the canonical earlier model") {
    std::vector<FittedModel> fits = bench();
    fits[1].aic = 147.0;                        // LG2 ties MS2
    CHECK(select_ic(fits, Criterion::AIC) == ModelSpec{Family::Logistic, 2});

    // the resolution must not depend on the order the fits arrive in
    std::reverse(fits.begin(), fits.end());
    CHECK(select_ic(fits, Criterion::AIC) == ModelSpec{Family::Logistic, 2});
}

TEST_CASE("two-step estimate reports the winner and its benchmark dose") {
    std::vector<FittedModel> fits = bench();
    BmdEstimate est = two_step_bmd(fits, Criterion::AIC, 0.05);
    CHECK(est.estimator == "AIC");
    REQUIRE(est.selected.has_value());
    CHECK(*est.selected == ModelSpec{Family::Multistage, 2});
    CHECK(est.dose == doctest::Approx(bmd::bmd(fits[3].spec, fits[3].beta, 0.05)));

    BmdEstimate bst = two_step_bmd(fits, Criterion::BIC, 0.05);
    CHECK(bst.estimator == "BIC");
    CHECK(*bst.selected == ModelSpec{Family::Multistage, 1});
}

TEST_CASE("model-averaged estimate is the weighted mean of per-model doses") {
    std::vector<FittedModel> fits = bench();
    for (Criterion crit : {Criterion::AIC, Criterion::BIC}) {
        BmdEstimate est = model_averaged_bmd(fits, crit, 0.05);
        CHECK(est.estimator == (crit == Criterion::AIC ? "AICModAve" : "BICModAve"));
        CHECK_FALSE(est.selected.has_value());
        REQUIRE(est.weights.size() == fits.size());

        auto weights = ic_weights(fits, crit);
        double expect = 0.0, lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < fits.size(); ++i) {
            double tau = bmd::bmd(fits[i].spec, fits[i].beta, 0.05);
            expect += weights[i].second * tau;
            lo = std::min(lo, tau);
            hi = std::max(hi, tau);
        }
        CHECK(est.dose == doctest::Approx(expect).epsilon(1e-12));
        CHECK(est.dose >= lo);                  // convex combination stays in the hull
        CHECK(est.dose <= hi);
    }
}

TEST_CASE("selection requires at least one fit") {
    std::vector<FittedModel> none;
    CHECK_THROWS_AS(select_ic(none, Criterion::AIC), SelectionError);
    CHECK_THROWS_AS(ic_weights(none, Criterion::BIC), SelectionError);
    CHECK_THROWS_AS(two_step_bmd(none, Criterion::AIC, 0.05), SelectionError);
    CHECK_THROWS_AS(model_averaged_bmd(none, Criterion::BIC, 0.05), SelectionError);
}
