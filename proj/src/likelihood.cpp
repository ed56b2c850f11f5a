#include "bmd/likelihood.hpp"

#include "optim.hpp"

#include <cmath>

namespace bmd {

namespace {

struct Working {
    std::vector<double> w;     // subjects
    std::vector<double> y;     // events / subjects
};

Working working_data(const QuantalDataset& data) {
    Working out;
    out.w.reserve(data.size());
    out.y.reserve(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        out.w.push_back(double(data.subjects[j]));
        out.y.push_back(double(data.events[j]) / double(data.subjects[j]));
    }
    return out;
}

}  // namespace

double log_likelihood(const QuantalDataset& data, const ModelSpec& spec,
                      const ParamVector& beta) {
    Working wd = working_data(data);
    return detail::weighted_ll(spec, data.doses, wd.w, wd.y, beta);
}

FittedModel fit_mle(const QuantalDataset& data, const ModelSpec& spec,
                    const std::vector<ParamVector>& extra_starts) {
    data.validate();
    if (data.size() < std::size_t(spec.order + 1))
        throw std::invalid_argument("need at least order+1 dose groups");
    Working wd = working_data(data);

    std::vector<ParamVector> starts = extra_starts;
    if (spec.order >= 2) {
        // the next-lower-order fit padded with a zero; guards the constrained
        // search against poor localizations and guarantees nesting
        try {
            FittedModel lower = fit_mle(data, ModelSpec{spec.family, spec.order - 1});
            ParamVector padded(spec.order + 1);
            padded << lower.beta, 0.0;
            starts.push_back(padded);
        } catch (const std::exception&) {
        }
    }

    detail::WeightedFit best =
        detail::maximize_weighted_ll(spec, data.doses, wd.w, wd.y, starts);
    if (best.separated)
        throw SeparationDetected(label(spec) + ": parameter norm exceeded 1e3");
    if (!best.converged)
        throw NonConvergence(label(spec) + ": score residual " +
                             std::to_string(best.residual) + " above tolerance");

    FittedModel out;
    out.spec = spec;
    out.beta = best.beta;
    out.loglik = best.value;
    out.converged = true;
    out.iterations = best.iterations;
    information_criteria(out, data.n_total);
    return out;
}

void information_criteria(FittedModel& fit, long n_total) {
    double g = fit.spec.order + 1;
    fit.aic = -2.0 * fit.loglik + 2.0 * g;
    fit.bic = -2.0 * fit.loglik + g * std::log(double(n_total));
}

std::vector<FittedModel> fit_all(const QuantalDataset& data,
                                 const std::vector<ModelSpec>& specs,
                                 std::vector<std::string>* dropped) {
    std::vector<ModelSpec> ordered = specs;
    std::sort(ordered.begin(), ordered.end());
    std::vector<FittedModel> out;
    for (const ModelSpec& spec : ordered) {
        try {
            out.push_back(fit_mle(data, spec));
        } catch (const std::exception& e) {
            if (dropped) dropped->push_back(label(spec) + " dropped: " + e.what());
        }
    }
    return out;
}

}  // namespace bmd
