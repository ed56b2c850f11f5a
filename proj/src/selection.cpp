#include "bmd/selection.hpp"

#include <algorithm>
#include <cmath>

namespace bmd {

namespace {

double criterion_value(const FittedModel& fit, Criterion crit) {
    return crit == Criterion::AIC ? fit.aic : fit.bic;
}

const FittedModel* best_fit(const std::vector<FittedModel>& fits, Criterion crit) {
    if (fits.empty()) throw SelectionError("no fitted models to select from");
    const FittedModel* best = &fits[0];
    for (const FittedModel& f : fits) {
        double v = criterion_value(f, crit), b = criterion_value(*best, crit);
        if (v < b || (v == b && f.spec < best->spec)) best = &f;
    }
    return best;
}

}  // namespace

ModelSpec select_ic(const std::vector<FittedModel>& fits, Criterion crit) {
    return best_fit(fits, crit)->spec;
}

std::vector<std::pair<ModelSpec, double>> ic_weights(
    const std::vector<FittedModel>& fits, Criterion crit) {
    if (fits.empty()) throw SelectionError("no fitted models to weight");
    double vmin = criterion_value(fits[0], crit);
    for (const FittedModel& f : fits) vmin = std::min(vmin, criterion_value(f, crit));
    std::vector<std::pair<ModelSpec, double>> out;
    double total = 0.0;
    for (const FittedModel& f : fits) {
        double e = std::exp(-0.5 * (criterion_value(f, crit) - vmin));
        out.emplace_back(f.spec, e);
        total += e;
    }
    for (auto& [spec, wgt] : out) wgt /= total;
    return out;
}

BmdEstimate two_step_bmd(const std::vector<FittedModel>& fits, Criterion crit,
                         double q, double max_design_dose) {
    const FittedModel* best = best_fit(fits, crit);
    BmdEstimate out;
    out.q = q;
    out.dose = bmd(best->spec, best->beta, q, max_design_dose);
    out.estimator = crit == Criterion::AIC ? "AIC" : "BIC";
    out.selected = best->spec;
    return out;
}

BmdEstimate model_averaged_bmd(const std::vector<FittedModel>& fits, Criterion crit,
                               double q, double max_design_dose) {
    auto weights = ic_weights(fits, crit);
    double avg = 0.0;
    for (std::size_t i = 0; i < fits.size(); ++i)
        avg += weights[i].second * bmd(fits[i].spec, fits[i].beta, q, max_design_dose);
    BmdEstimate out;
    out.q = q;
    out.dose = avg;
    out.estimator = crit == Criterion::AIC ? "AICModAve" : "BICModAve";
    out.weights = std::move(weights);
    return out;
}

}  // namespace bmd
