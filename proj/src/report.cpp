#include "bmd/report.hpp"

#include <json.hpp>

#include <iomanip>
#include <sstream>

namespace bmd {

namespace {

using nlohmann::json;

std::vector<ModelSpec> default_models() {
    return {{Family::Logistic, 1}, {Family::Logistic, 2},
            {Family::Multistage, 1}, {Family::Multistage, 2}};
}

bool wanted(const std::vector<std::string>& filter, const std::string& name) {
    if (filter.empty()) return true;
    for (const std::string& f : filter)
        if (f == name) return true;
    return false;
}

json spec_json(const ModelSpec& spec) {
    return {{"family", spec.family == Family::Logistic ? "logistic" : "multistage"},
            {"order", spec.order},
            {"label", label(spec)}};
}

json estimate_json(const BmdEstimate& est, double dose_scale) {
    json j{{"estimator", est.estimator},
           {"q", est.q},
           {"dose", est.dose},
           {"dose_original", est.dose * dose_scale}};
    if (est.selected) j["selected"] = label(*est.selected);
    if (!est.weights.empty()) {
        json w = json::object();
        for (const auto& [spec, wgt] : est.weights) w[label(spec)] = wgt;
        j["weights"] = w;
    }
    return j;
}

struct Core {
    QuantalDataset data;          // standardized when requested
    std::vector<FittedModel> fits;
    PavaFit iso;
    std::vector<std::string> diagnostics;
};

Core prepare(const QuantalDataset& raw, const AnalysisOptions& opt) {
    Core core;
    core.data = opt.standardize ? standardize_doses(raw) : raw;
    for (const std::string& w : core.data.warnings)
        core.diagnostics.push_back("warning: " + w);
    std::vector<ModelSpec> models = opt.models.empty() ? default_models() : opt.models;
    core.fits = fit_all(core.data, models, &core.diagnostics);
    core.iso = pava_fit(core.data);
    return core;
}

}  // namespace

std::string RunReport::to_text() const {
    std::ostringstream os;
    os << std::fixed;
    os << "command: " << command << "\n";
    if (data.size() > 0) {
        os << "groups: " << data.size() << "  subjects: " << data.n_total;
        if (dose_scale != 1.0) os << "  dose scale: " << std::setprecision(6) << dose_scale;
        os << "\n";
    }
    for (const std::string& d : diagnostics) os << d << "\n";

    if (!fits.empty()) {
        os << "\nmodel      loglik        aic        bic  parameters\n";
        for (const FittedModel& f : fits) {
            os << std::left << std::setw(6) << label(f.spec) << std::right
               << std::setw(11) << std::setprecision(4) << f.loglik
               << std::setw(11) << f.aic << std::setw(11) << f.bic << "  ";
            for (int k = 0; k < f.beta.size(); ++k)
                os << std::setprecision(6) << f.beta[k] << (k + 1 < f.beta.size() ? " " : "");
            os << "\n";
        }
    }
    for (const auto& [crit, weights] : weight_sets) {
        os << "\n" << crit << " weights:";
        for (const auto& [spec, w] : weights)
            os << "  " << label(spec) << " " << std::setprecision(4) << w;
        os << "\n";
    }
    if (!estimates.empty()) {
        os << "\nestimator      q        bmd";
        if (dose_scale != 1.0) os << "   bmd(original)";
        os << "  selected\n";
        for (const BmdEstimate& e : estimates) {
            os << std::left << std::setw(11) << e.estimator << std::right
               << std::setw(6) << std::setprecision(2) << e.q
               << std::setw(11) << std::setprecision(4) << e.dose;
            if (dose_scale != 1.0) os << std::setw(16) << e.dose * dose_scale;
            os << "  " << (e.selected ? label(*e.selected) : std::string("-")) << "\n";
        }
    }
    for (const RiskMatrix& m : matrices) {
        os << "\nrisk matrix q=" << std::setprecision(2) << m.q
           << "  anchor=" << std::setprecision(4) << m.anchor << "\n";
        os << "          ";
        for (const TargetDistribution& t : m.targets)
            os << std::setw(11) << t.name;
        os << "\n";
        for (std::size_t r = 0; r < m.rows.size(); ++r) {
            os << std::left << std::setw(10) << label(m.rows[r]) << std::right;
            for (std::size_t t = 0; t < m.targets.size(); ++t) {
                const RiskCell& c = m.cells[r][t];
                if (c.ok) os << std::setw(11) << std::setprecision(4) << c.risk;
                else os << std::setw(11) << "fail";
            }
            os << "\n";
        }
    }
    if (simulation) {
        os << "\nexperiment " << simulation->name << "  replicates " << simulation->mreps
           << "\n";
        for (const QSummary& qs : simulation->per_q) {
            os << "q=" << std::setprecision(2) << qs.q
               << "  true bmd " << std::setprecision(5) << qs.true_bmd << "\n";
            os << "  estimator      count  fail       mean       bias         se       rmse\n";
            for (const auto& [name, st] : qs.estimators) {
                os << "  " << std::left << std::setw(12) << name << std::right
                   << std::setw(8) << st.count << std::setw(6) << st.failures
                   << std::setw(11) << std::setprecision(5) << st.mean
                   << std::setw(11) << st.bias << std::setw(11) << st.se
                   << std::setw(11) << st.rmse << "\n";
            }
            for (const auto& [name, tally] : qs.selections) {
                os << "  " << std::left << std::setw(6) << name << std::right << " picks:";
                for (const auto& [lab, cnt] : tally.counts)
                    os << "  " << lab << " " << std::setprecision(2)
                       << 100.0 * cnt / simulation->mreps << "%";
                if (tally.failures > 0) os << "  failed " << tally.failures;
                os << "\n";
            }
        }
    }
    return os.str();
}

std::string RunReport::to_json() const {
    json j;
    j["command"] = command;
    j["dose_scale"] = dose_scale;
    j["data"] = {{"doses", data.doses},
                 {"subjects", data.subjects},
                 {"events", data.events},
                 {"n_total", data.n_total}};
    j["diagnostics"] = diagnostics;
    j["fits"] = json::array();
    for (const FittedModel& f : fits) {
        std::vector<double> beta(f.beta.data(), f.beta.data() + f.beta.size());
        j["fits"].push_back({{"model", spec_json(f.spec)},
                             {"beta", beta},
                             {"loglik", f.loglik},
                             {"aic", f.aic},
                             {"bic", f.bic},
                             {"converged", f.converged},
                             {"iterations", f.iterations}});
    }
    j["weights"] = json::object();
    for (const auto& [crit, weights] : weight_sets) {
        json w = json::object();
        for (const auto& [spec, wgt] : weights) w[label(spec)] = wgt;
        j["weights"][crit] = w;
    }
    j["estimates"] = json::array();
    for (const BmdEstimate& e : estimates) j["estimates"].push_back(estimate_json(e, dose_scale));
    j["risk_matrices"] = json::array();
    for (const RiskMatrix& m : matrices) {
        json cells = json::array();
        for (std::size_t r = 0; r < m.rows.size(); ++r)
            for (std::size_t t = 0; t < m.targets.size(); ++t) {
                const RiskCell& c = m.cells[r][t];
                json cj{{"row", label(m.rows[r])},
                        {"target", m.targets[t].name},
                        {"ok", c.ok}};
                if (c.ok) {
                    cj["risk"] = c.risk;
                    cj["gamma"] = c.gamma;
                    cj["bias"] = c.bias;
                    cj["projected_bmd"] = c.projected_bmd;
                } else {
                    cj["failure"] = c.failure;
                }
                cells.push_back(cj);
            }
        j["risk_matrices"].push_back({{"q", m.q}, {"anchor", m.anchor}, {"cells", cells}});
    }
    if (simulation) {
        json sim{{"name", simulation->name}, {"mreps", simulation->mreps}};
        sim["per_q"] = json::array();
        for (const QSummary& qs : simulation->per_q) {
            json qj{{"q", qs.q}, {"true_bmd", qs.true_bmd}};
            qj["estimators"] = json::object();
            for (const auto& [name, st] : qs.estimators)
                qj["estimators"][name] = {{"count", st.count},
                                          {"failures", st.failures},
                                          {"mean", st.mean},
                                          {"bias", st.bias},
                                          {"se", st.se},
                                          {"rmse", st.rmse}};
            qj["selections"] = json::object();
            for (const auto& [name, tally] : qs.selections) {
                json sj{{"failures", tally.failures}};
                for (const auto& [lab, cnt] : tally.counts)
                    sj["percent"][lab] = 100.0 * cnt / simulation->mreps;
                qj["selections"][name] = sj;
            }
            sim["per_q"].push_back(qj);
        }
        j["simulation"] = sim;
    }
    return j.dump(2);
}

std::string RunReport::to_csv() const {
    std::ostringstream os;
    os.precision(10);
    if (!fits.empty()) {
        os << "section,model,loglik,aic,bic,beta\n";
        for (const FittedModel& f : fits) {
            os << "fit," << label(f.spec) << "," << f.loglik << "," << f.aic << ","
               << f.bic << ",";
            for (int k = 0; k < f.beta.size(); ++k)
                os << f.beta[k] << (k + 1 < f.beta.size() ? ";" : "");
            os << "\n";
        }
    }
    if (!estimates.empty()) {
        os << "section,estimator,q,bmd,bmd_original,selected\n";
        for (const BmdEstimate& e : estimates)
            os << "bmd," << e.estimator << "," << e.q << "," << e.dose << ","
               << e.dose * dose_scale << ","
               << (e.selected ? label(*e.selected) : std::string("")) << "\n";
    }
    if (!matrices.empty()) {
        os << "section,q,row,target,risk,gamma,bias\n";
        for (const RiskMatrix& m : matrices)
            for (std::size_t r = 0; r < m.rows.size(); ++r)
                for (std::size_t t = 0; t < m.targets.size(); ++t) {
                    const RiskCell& c = m.cells[r][t];
                    os << "risk," << m.q << "," << label(m.rows[r]) << ","
                       << m.targets[t].name << ",";
                    if (c.ok) os << c.risk << "," << c.gamma << "," << c.bias;
                    else os << "fail,,";
                    os << "\n";
                }
    }
    if (simulation) {
        os << "section,q,estimator,count,failures,mean,bias,se,rmse\n";
        for (const QSummary& qs : simulation->per_q)
            for (const auto& [name, st] : qs.estimators)
                os << "sim_estimator," << qs.q << "," << name << "," << st.count << ","
                   << st.failures << "," << st.mean << "," << st.bias << "," << st.se
                   << "," << st.rmse << "\n";
        os << "section,q,selector,model,percent\n";
        for (const QSummary& qs : simulation->per_q)
            for (const auto& [name, tally] : qs.selections)
                for (const auto& [lab, cnt] : tally.counts)
                    os << "sim_selection," << qs.q << "," << name << "," << lab << ","
                       << 100.0 * cnt / simulation->mreps << "\n";
    }
    return os.str();
}

RunReport report_fit(const QuantalDataset& raw, const AnalysisOptions& opt) {
    Core core = prepare(raw, opt);
    RunReport rep;
    rep.command = "fit";
    rep.data = core.data;
    rep.fits = core.fits;
    rep.diagnostics = core.diagnostics;
    rep.dose_scale = core.data.dose_scale;
    return rep;
}

RunReport report_select(const QuantalDataset& raw, const AnalysisOptions& opt) {
    Core core = prepare(raw, opt);
    RunReport rep;
    rep.command = "select";
    rep.data = core.data;
    rep.fits = core.fits;
    rep.diagnostics = core.diagnostics;
    rep.dose_scale = core.data.dose_scale;
    if (!core.fits.empty()) {
        rep.weight_sets.emplace_back("AIC", ic_weights(core.fits, Criterion::AIC));
        rep.weight_sets.emplace_back("BIC", ic_weights(core.fits, Criterion::BIC));
        rep.diagnostics.push_back("AIC selects " + label(select_ic(core.fits, Criterion::AIC)));
        rep.diagnostics.push_back("BIC selects " + label(select_ic(core.fits, Criterion::BIC)));
    }
    return rep;
}

RunReport report_bmd(const QuantalDataset& raw, const AnalysisOptions& opt) {
    Core core = prepare(raw, opt);
    RunReport rep;
    rep.command = "bmd";
    rep.data = core.data;
    rep.fits = core.fits;
    rep.diagnostics = core.diagnostics;
    rep.dose_scale = core.data.dose_scale;
    if (core.fits.empty()) return rep;
    const double dmax = core.data.doses.back();

    rep.weight_sets.emplace_back("AIC", ic_weights(core.fits, Criterion::AIC));
    rep.weight_sets.emplace_back("BIC", ic_weights(core.fits, Criterion::BIC));

    std::vector<RiskMatrix> matrices;
    bool need_fic = wanted(opt.estimators, "FIC1") || wanted(opt.estimators, "FIC2") ||
                    wanted(opt.estimators, "FIC3");
    if (need_fic)
        matrices = build_risk_matrices(core.data, core.fits, core.iso, opt.q_values, dmax);

    for (std::size_t qi = 0; qi < opt.q_values.size(); ++qi) {
        double q = opt.q_values[qi];
        auto add = [&](const char* name, auto&& make) {
            if (!wanted(opt.estimators, name)) return;
            try {
                rep.estimates.push_back(make());
            } catch (const std::exception& e) {
                rep.diagnostics.push_back(std::string(name) + " at q=" + std::to_string(q) +
                                          " failed: " + e.what());
            }
        };
        add("AIC", [&] { return two_step_bmd(core.fits, Criterion::AIC, q, dmax); });
        add("BIC", [&] { return two_step_bmd(core.fits, Criterion::BIC, q, dmax); });
        add("AICModAve", [&] { return model_averaged_bmd(core.fits, Criterion::AIC, q, dmax); });
        add("BICModAve", [&] { return model_averaged_bmd(core.fits, Criterion::BIC, q, dmax); });
        if (need_fic) {
            add("FIC1", [&] { return fic_bmd(matrices[qi], core.fits, FicVariant::FE, dmax); });
            add("FIC2", [&] { return fic_bmd(matrices[qi], core.fits, FicVariant::FM, dmax); });
            add("FIC3", [&] { return fic_bmd(matrices[qi], core.fits, FicVariant::EMP, dmax); });
        }
        add("NONPAR", [&] { return nonpar_bmd(core.iso, q); });
    }
    if (need_fic) rep.matrices = std::move(matrices);
    return rep;
}

RunReport report_risk_matrix(const QuantalDataset& raw, const AnalysisOptions& opt) {
    Core core = prepare(raw, opt);
    RunReport rep;
    rep.command = "risk-matrix";
    rep.data = core.data;
    rep.fits = core.fits;
    rep.diagnostics = core.diagnostics;
    rep.dose_scale = core.data.dose_scale;
    if (core.fits.empty()) return rep;
    const double dmax = core.data.doses.back();
    rep.matrices = build_risk_matrices(core.data, core.fits, core.iso, opt.q_values, dmax);
    for (const RiskMatrix& m : rep.matrices) {
        for (FicVariant v : {FicVariant::FE, FicVariant::FM, FicVariant::EMP}) {
            try {
                rep.diagnostics.push_back(std::string(fic_name(v)) + " at q=" +
                                          std::to_string(m.q) + " selects " +
                                          label(fic_select(m, v)));
            } catch (const std::exception& e) {
                rep.diagnostics.push_back(std::string(fic_name(v)) + " at q=" +
                                          std::to_string(m.q) + " failed: " + e.what());
            }
        }
    }
    return rep;
}

RunReport report_simulate(const ExperimentConfig& config, int jobs) {
    RunReport rep;
    rep.command = "simulate";
    rep.simulation = run_experiment(config, jobs);
    return rep;
}

}  // namespace bmd
