#pragma once

#include "bmd/data.hpp"
#include "bmd/focused.hpp"
#include "bmd/likelihood.hpp"
#include "bmd/selection.hpp"
#include "bmd/simulation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bmd {

struct AnalysisOptions {
    std::vector<double> q_values{0.01, 0.05, 0.10};
    std::vector<ModelSpec> models;                 // empty = LG1, LG2, MS1, MS2
    std::vector<std::string> estimators;           // empty = all
    bool standardize = true;
};

// Everything one subcommand run produced, in one serializable bundle.
struct RunReport {
    std::string command;
    QuantalDataset data;
    std::vector<FittedModel> fits;
    std::vector<std::pair<std::string, std::vector<std::pair<ModelSpec, double>>>>
        weight_sets;                               // criterion name -> weights
    std::vector<BmdEstimate> estimates;            // doses in standardized units
    std::vector<RiskMatrix> matrices;              // one per q where computed
    std::optional<ExperimentSummary> simulation;
    std::vector<std::string> diagnostics;
    double dose_scale = 1.0;                       // for reporting original units

    std::string to_text() const;
    std::string to_json() const;
    std::string to_csv() const;
};

RunReport report_fit(const QuantalDataset& raw, const AnalysisOptions& opt);
RunReport report_select(const QuantalDataset& raw, const AnalysisOptions& opt);
RunReport report_bmd(const QuantalDataset& raw, const AnalysisOptions& opt);
RunReport report_risk_matrix(const QuantalDataset& raw, const AnalysisOptions& opt);
RunReport report_simulate(const ExperimentConfig& config, int jobs);

}  // namespace bmd
