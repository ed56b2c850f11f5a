#include "bmd/nonparametric.hpp"

#include <cmath>
#include <stdexcept>

namespace bmd {

std::vector<double> empirical_probs(const QuantalDataset& data) {
    std::vector<double> out(data.size());
    for (std::size_t j = 0; j < data.size(); ++j)
        out[j] = double(data.events[j]) / double(data.subjects[j]);
    return out;
}

// Stack-based pool-adjacent-violators. Each block carries the weighted mean
// of the values it absorbed; merging preserves the total weight and mean.
std::vector<double> pava(const std::vector<double>& values,
                         const std::vector<double>& weights) {
    if (values.size() != weights.size())
        throw std::invalid_argument("values and weights differ in length");
    struct Block { double mean, weight; std::size_t count; };
    std::vector<Block> stack;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (!(weights[j] > 0.0)) throw std::invalid_argument("weights must be positive");
        Block b{values[j], weights[j], 1};
        while (!stack.empty() && stack.back().mean >= b.mean) {
            const Block& prev = stack.back();
            b.mean = (prev.mean * prev.weight + b.mean * b.weight) / (prev.weight + b.weight);
            b.weight += prev.weight;
            b.count += prev.count;
            stack.pop_back();
        }
        stack.push_back(b);
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const Block& b : stack)
        out.insert(out.end(), b.count, b.mean);
    return out;
}

PavaFit pava_fit(const QuantalDataset& data) {
    data.validate();
    std::vector<double> w(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) w[j] = double(data.subjects[j]);
    PavaFit out;
    out.doses = data.doses;
    out.probs = pava(empirical_probs(data), w);
    return out;
}

double piecewise_pi(const PavaFit& fit, double dose) {
    if (fit.doses.empty()) throw std::invalid_argument("empty isotonic fit");
    if (dose < fit.doses.front() || dose > fit.doses.back())
        throw OutsideDesignRange("dose " + std::to_string(dose) + " outside design range");
    for (std::size_t j = 1; j < fit.doses.size(); ++j) {
        if (dose <= fit.doses[j]) {
            double t = (dose - fit.doses[j - 1]) / (fit.doses[j] - fit.doses[j - 1]);
            return fit.probs[j - 1] + t * (fit.probs[j] - fit.probs[j - 1]);
        }
    }
    return fit.probs.back();
}

BmdEstimate nonpar_bmd(const PavaFit& fit, double q) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must lie in (0,1)");
    double p0 = fit.probs.front();
    if (p0 >= 1.0) throw BmrUnattainable("background probability is 1");
    double threshold = p0 + q * (1.0 - p0);       // extra risk q in probability units
    BmdEstimate out;
    out.q = q;
    out.estimator = "NONPAR";
    for (std::size_t j = 1; j < fit.doses.size(); ++j) {
        if (fit.probs[j] >= threshold) {
            double lo = fit.probs[j - 1], hi = fit.probs[j];
            double t = hi > lo ? (threshold - lo) / (hi - lo) : 0.0;
            out.dose = fit.doses[j - 1] + t * (fit.doses[j] - fit.doses[j - 1]);
            return out;
        }
    }
    throw BmrUnattainable("isotonic curve never reaches extra risk q in range");
}

}  // namespace bmd
