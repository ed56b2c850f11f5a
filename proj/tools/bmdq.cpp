#include <CLI11.hpp>

#include "bmd/report.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

bmd::QuantalDataset read_data(const std::string& path) {
    if (path == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        return bmd::load_dataset(buf.str());
    }
    std::ifstream in(path);
    if (!in) throw bmd::DatasetError("cannot open " + path);
    return bmd::load_dataset(in);
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    for (const std::string& s : split_list(csv)) out.push_back(std::stod(s));
    return out;
}

struct CommonOpts {
    std::string data_path;
    std::vector<double> bmr{0.01, 0.05, 0.10};
    std::string models;
    std::string estimators;
    bool json = false;
    bool csv = false;
    bool no_standardize = false;
};

void add_common(CLI::App* sub, CommonOpts& o, bool needs_data) {
    if (needs_data)
        sub->add_option("data", o.data_path, "quantal dataset csv (dose,n,y); - for stdin")
            ->required();
    sub->add_option("--bmr", o.bmr, "benchmark response levels")->expected(-1);
    sub->add_option("--models", o.models, "model classes, e.g. LG1,LG2,MS1,MS2");
    sub->add_option("--estimators", o.estimators, "estimators to report");
    sub->add_flag("--json", o.json, "emit json");
    sub->add_flag("--csv", o.csv, "emit csv");
    sub->add_flag("--no-standardize", o.no_standardize, "keep original dose units");
}

bmd::AnalysisOptions to_options(const CommonOpts& o) {
    bmd::AnalysisOptions opt;
    opt.q_values = o.bmr;
    opt.standardize = !o.no_standardize;
    for (const std::string& m : split_list(o.models)) {
        auto spec = bmd::spec_from_label(m);
        if (!spec) throw std::runtime_error("unknown model label: " + m);
        opt.models.push_back(*spec);
    }
    opt.estimators = split_list(o.estimators);
    return opt;
}

void emit(const bmd::RunReport& rep, const CommonOpts& o) {
    if (o.json) std::cout << rep.to_json() << "\n";
    else if (o.csv) std::cout << rep.to_csv();
    else std::cout << rep.to_text();
}

bmd::ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    bmd::ExperimentConfig cfg;
    cfg.name = path;
    std::string line;
    std::string family;
    int order = 1;
    std::vector<double> beta;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key == "name") cfg.name = val;
        else if (key == "family") family = val;
        else if (key == "order") order = std::stoi(val);
        else if (key == "beta") beta = parse_doubles(val);
        else if (key == "probs") cfg.true_probs = parse_doubles(val);
        else if (key == "doses") cfg.doses = parse_doubles(val);
        else if (key == "subjects") {
            cfg.subjects.clear();
            for (double v : parse_doubles(val)) cfg.subjects.push_back(static_cast<long>(v));
        } else if (key == "bmr") cfg.q_values = parse_doubles(val);
        else if (key == "mreps") cfg.mreps = std::stol(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else throw std::runtime_error("unknown config key: " + key);
    }
    if (!family.empty()) {
        bmd::ModelSpec spec{bmd::Family::Logistic, order};
        if (family == "logistic") spec = {bmd::Family::Logistic, order};
        else if (family == "multistage") spec = {bmd::Family::Multistage, order};
        else {
            auto parsed = bmd::spec_from_label(family);  // label form, e.g. MS2
            if (!parsed) throw std::runtime_error("unknown family: " + family);
            spec = *parsed;
        }
        cfg.true_model = spec;
        if (beta.empty()) throw std::runtime_error("config with family= needs beta=");
        cfg.true_beta = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<long>(beta.size()));
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"benchmark dose estimation for quantal dose-response data"};
    app.require_subcommand(1);

    CommonOpts fit_o, sel_o, bmd_o, risk_o;
    CLI::App* fit = app.add_subcommand("fit", "fit model classes by maximum likelihood");
    add_common(fit, fit_o, true);
    CLI::App* sel = app.add_subcommand("select", "information-criterion model selection");
    add_common(sel, sel_o, true);
    CLI::App* bmdc = app.add_subcommand("bmd", "benchmark dose estimates");
    add_common(bmdc, bmd_o, true);
    CLI::App* risk = app.add_subcommand("risk-matrix", "focused risk matrices");
    add_common(risk, risk_o, true);

    CommonOpts sim_o;
    std::string preset, config_path;
    long mreps = -1;
    unsigned long long seed = 0;
    bool seed_set = false;
    int jobs = 1;
    CLI::App* sim = app.add_subcommand("simulate", "monte carlo estimator comparison");
    sim->add_option("--preset", preset, "built-in experiment (expt1..expt9)");
    sim->add_option("--config", config_path, "experiment config file (key=value)");
    sim->add_option("--mreps", mreps, "replicates");
    sim->add_option("--seed", seed, "rng seed")->each([&](const std::string&) { seed_set = true; });
    sim->add_option("--jobs", jobs, "worker threads");
    sim->add_option("--bmr", sim_o.bmr, "benchmark response levels")->expected(-1);
    sim->add_flag("--json", sim_o.json, "emit json");
    sim->add_flag("--csv", sim_o.csv, "emit csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit) {
            emit(bmd::report_fit(read_data(fit_o.data_path), to_options(fit_o)), fit_o);
        } else if (*sel) {
            emit(bmd::report_select(read_data(sel_o.data_path), to_options(sel_o)), sel_o);
        } else if (*bmdc) {
            emit(bmd::report_bmd(read_data(bmd_o.data_path), to_options(bmd_o)), bmd_o);
        } else if (*risk) {
            emit(bmd::report_risk_matrix(read_data(risk_o.data_path), to_options(risk_o)), risk_o);
        } else if (*sim) {
            bmd::ExperimentConfig cfg;
            if (!config_path.empty()) cfg = config_from_file(config_path);
            else if (!preset.empty()) cfg = bmd::experiment_preset(preset);
            else throw std::runtime_error("simulate needs --preset or --config");
            if (mreps > 0) cfg.mreps = mreps;
            if (seed_set) cfg.seed = seed;
            if (sim->count("--bmr") > 0) cfg.q_values = sim_o.bmr;
            emit(bmd::report_simulate(cfg, jobs), sim_o);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
