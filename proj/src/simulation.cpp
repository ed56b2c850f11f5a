#include "bmd/simulation.hpp"

#include "bmd/focused.hpp"
#include "bmd/likelihood.hpp"
#include "bmd/nonparametric.hpp"
#include "bmd/rng.hpp"
#include "bmd/selection.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace bmd {

namespace {

const std::vector<ModelSpec> kCandidates = {
    {Family::Logistic, 1}, {Family::Logistic, 2},
    {Family::Multistage, 1}, {Family::Multistage, 2}};

const std::vector<std::string> kEstimators = {
    "AIC", "BIC", "AICModAve", "BICModAve", "FIC1", "FIC2", "FIC3", "NONPAR"};

const std::vector<std::string> kSelectors = {"AIC", "BIC", "FIC1", "FIC2", "FIC3"};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int model_index(const ModelSpec& spec) {
    for (std::size_t i = 0; i < kCandidates.size(); ++i)
        if (kCandidates[i] == spec) return int(i);
    return -1;
}

// one replicate's outcomes: estimates[qi][estimator], selections[qi][selector]
struct RepRecord {
    std::vector<std::array<double, 8>> estimates;
    std::vector<std::array<int, 5>> selections;      // candidate index or -1
};

RepRecord run_replicate(const ExperimentConfig& config, int rep) {
    const std::size_t nq = config.q_values.size();
    RepRecord rec;
    rec.estimates.assign(nq, {kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN});
    rec.selections.assign(nq, {-1, -1, -1, -1, -1});

    QuantalDataset data = generate_replicate(config, rep);
    const double dmax = data.doses.back();

    std::vector<FittedModel> fits = fit_all(data, kCandidates);

    PavaFit iso;
    try {
        iso = pava_fit(data);
    } catch (const std::exception&) {
        return rec;
    }
    for (std::size_t qi = 0; qi < nq; ++qi) {
        try {
            rec.estimates[qi][7] = nonpar_bmd(iso, config.q_values[qi]).dose;
        } catch (const std::exception&) {
        }
    }
    if (fits.empty()) return rec;

    for (int c = 0; c < 2; ++c) {
        Criterion crit = c == 0 ? Criterion::AIC : Criterion::BIC;
        int sel = -1;
        try {
            sel = model_index(select_ic(fits, crit));
        } catch (const std::exception&) {
        }
        for (std::size_t qi = 0; qi < nq; ++qi) {
            rec.selections[qi][c] = sel;
            try {
                rec.estimates[qi][c] = two_step_bmd(fits, crit, config.q_values[qi], dmax).dose;
            } catch (const std::exception&) {
            }
            try {
                rec.estimates[qi][2 + c] =
                    model_averaged_bmd(fits, crit, config.q_values[qi], dmax).dose;
            } catch (const std::exception&) {
            }
        }
    }

    try {
        std::vector<RiskMatrix> matrices =
            build_risk_matrices(data, fits, iso, config.q_values, dmax);
        for (std::size_t qi = 0; qi < nq; ++qi) {
            const FicVariant variants[] = {FicVariant::FE, FicVariant::FM, FicVariant::EMP};
            for (int v = 0; v < 3; ++v) {
                try {
                    BmdEstimate est = fic_bmd(matrices[qi], fits, variants[v], dmax);
                    rec.selections[qi][2 + v] = model_index(*est.selected);
                    rec.estimates[qi][4 + v] = est.dose;
                } catch (const std::exception&) {
                }
            }
        }
    } catch (const std::exception&) {
    }
    return rec;
}

}  // namespace

ParamVector solve_curve_constraints(const ModelSpec& spec,
                                    const std::vector<std::pair<double, double>>& pins) {
    const int g = spec.order + 1;
    if (int(pins.size()) != g)
        throw std::invalid_argument("need exactly order+1 (dose, probability) pairs");
    Eigen::MatrixXd x(g, g);
    Eigen::VectorXd z(g);
    for (int i = 0; i < g; ++i) {
        double d = pins[i].first, p = pins[i].second;
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("pinned probabilities must lie in (0,1)");
        x.row(i) = dose_vector(spec.order, d).transpose();
        z[i] = spec.family == Family::Logistic ? std::log(p / (1.0 - p)) : -std::log1p(-p);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(x);
    if (!lu.isInvertible())
        throw std::invalid_argument("constraint doses are degenerate");
    return lu.solve(z);
}

ExperimentConfig experiment_preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.name = name;
    if (name == "expt1") {
        cfg.true_model = ModelSpec{Family::Multistage, 2};
        cfg.true_beta = ParamVector(3);
        cfg.true_beta << 0.0, 0.32, 0.52;
        cfg.doses = {0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
        cfg.subjects = {240, 41, 46, 18, 18, 34, 20};
        return cfg;
    }
    int idx = 0;
    if (name.size() == 5 && name.rfind("expt", 0) == 0 && name[4] >= '2' && name[4] <= '9')
        idx = name[4] - '0';
    if (idx == 0) throw std::invalid_argument("unknown experiment preset " + name);

    const ModelSpec spec = kCandidates[(idx - 2) % 4];
    const bool high_background = idx >= 6;
    std::vector<std::pair<double, double>> pins;
    if (high_background) {
        pins = {{0.0, 0.30}, {1.0, 0.75}};
        if (spec.order == 2) pins.insert(pins.begin() + 1, {0.5, 0.52});
    } else {
        pins = {{0.0, 0.05}, {1.0, 0.50}};
        if (spec.order == 2) pins.insert(pins.begin() + 1, {0.5, 0.30});
    }
    cfg.true_model = spec;
    cfg.true_beta = solve_curve_constraints(spec, pins);
    cfg.doses = {0.0, 0.25, 0.5, 1.0};
    cfg.subjects = std::vector<long>(4, 100);
    return cfg;
}

QuantalDataset generate_replicate(const ExperimentConfig& config, int replicate) {
    std::vector<double> probs =
        config.true_model ? eval_pi(*config.true_model, config.true_beta, config.doses)
                          : config.true_probs;
    if (probs.size() != config.doses.size())
        throw std::invalid_argument("truth does not match the design");
    QuantalDataset data;
    data.doses = config.doses;
    data.subjects = config.subjects;
    for (std::size_t j = 0; j < config.doses.size(); ++j) {
        SplitRng rng(config.seed, std::uint64_t(replicate), std::uint64_t(j));
        data.events.push_back(rng.binomial(config.subjects[j], probs[j]));
        data.n_total += config.subjects[j];
    }
    data.validate();
    return data;
}

ExperimentSummary run_experiment(const ExperimentConfig& config, int jobs) {
    const std::size_t nq = config.q_values.size();
    ExperimentSummary out;
    out.name = config.name;
    out.mreps = config.mreps;
    out.per_q.resize(nq);

    std::vector<double> true_bmd(nq);
    for (std::size_t qi = 0; qi < nq; ++qi) {
        if (config.true_model) {
            true_bmd[qi] = bmd(*config.true_model, config.true_beta, config.q_values[qi],
                               config.doses.back());
        } else {
            PavaFit truth{config.doses, config.true_probs};
            true_bmd[qi] = nonpar_bmd(truth, config.q_values[qi]).dose;
        }
    }

    std::vector<RepRecord> records(config.mreps);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            int rep = next.fetch_add(1);
            if (rep >= config.mreps) return;
            records[rep] = run_replicate(config, rep);
        }
    };
    int nthreads = std::max(1, jobs);
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    for (std::size_t qi = 0; qi < nq; ++qi) {
        QSummary& qs = out.per_q[qi];
        qs.q = config.q_values[qi];
        qs.true_bmd = true_bmd[qi];

        for (std::size_t e = 0; e < kEstimators.size(); ++e) {
            EstimatorStats st;
            long double sum = 0.0L;
            for (const RepRecord& r : records) {
                double v = r.estimates[qi][e];
                if (std::isnan(v)) { ++st.failures; continue; }
                ++st.count;
                sum += v;
            }
            if (st.count > 0) {
                st.mean = double(sum / st.count);
                long double ss_mean = 0.0L, ss_true = 0.0L;
                for (const RepRecord& r : records) {
                    double v = r.estimates[qi][e];
                    if (std::isnan(v)) continue;
                    long double dm = v - st.mean, dt = v - true_bmd[qi];
                    ss_mean += dm * dm;
                    ss_true += dt * dt;
                }
                st.bias = st.mean - true_bmd[qi];
                st.se = double(std::sqrt(ss_mean / st.count));
                st.rmse = double(std::sqrt(ss_true / st.count));
            }
            qs.estimators[kEstimators[e]] = st;
        }

        for (std::size_t s = 0; s < kSelectors.size(); ++s) {
            SelectionTally tally;
            for (const ModelSpec& spec : kCandidates) tally.counts[label(spec)] = 0;
            for (const RepRecord& r : records) {
                int sel = r.selections[qi][s];
                if (sel < 0) ++tally.failures;
                else ++tally.counts[label(kCandidates[sel])];
            }
            qs.selections[kSelectors[s]] = tally;
        }
    }
    return out;
}

}  // namespace bmd
