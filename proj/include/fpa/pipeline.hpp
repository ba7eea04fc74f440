#pragma once

// End-to-end localization: clean -> fault-proneness -> penalty factors ->
// fit -> rank -> group -> evaluate.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpa/cc_cleaner.hpp"
#include "fpa/enet.hpp"
#include "fpa/fault_proneness.hpp"
#include "fpa/io.hpp"
#include "fpa/kernels.hpp"
#include "fpa/metrics.hpp"
#include "fpa/model.hpp"
#include "fpa/ranker.hpp"

namespace fpa {

struct PipelineOptions {
    bool cleaning = true;
    std::size_t cluster_k = 0;  // 0 selects the default count
    std::uint64_t cleaning_seed = 0;
    bool penalty_factors = true;
    PenaltyTheta theta;
    EnetConfig enet;
    std::size_t top_k = 0;  // 0 selects the top predictor group
    double group_threshold = kDefaultGroupThreshold;

    void validate() const;
};

Json to_json(const PipelineOptions& options);
PipelineOptions pipeline_options_from_json(const Json& json, PipelineOptions base = {});

// Optional inputs are borrowed and may be null. Penalty factors need the
// predicate map, the per-module metrics and either a trained model or a
// labelled training corpus.
struct PipelineInput {
    CoverageMatrix matrix;
    OutcomeVector outcomes;
    const PredicateMap* predicate_map = nullptr;
    const ProgramDependenceGraph* pdg = nullptr;
    const GroundTruth* truth = nullptr;
    const std::vector<ModuleMetricsRecord>* metrics = nullptr;
    const FaultPronenessModel* model = nullptr;
    const std::vector<ModuleMetricsRecord>* training_metrics = nullptr;
    const std::vector<int>* training_labels = nullptr;
};

struct PipelineResult {
    OutcomeVector outcomes;  // after cleaning
    std::optional<CleaningReport> cleaning;
    std::optional<FaultPronenessModel> model;
    std::map<std::string, double> module_fp;
    std::vector<double> predicate_fp;
    std::vector<double> penalty;
    FitResult fit;
    Evaluation evaluation;
    std::vector<std::string> flags;
};

PipelineResult run_pipeline(const PipelineInput& input, const PipelineOptions& options,
                            Execution exec = Execution::Parallel);

// Evaluation report plus cleaning/penalty summaries.
Json pipeline_report_json(const PipelineResult& result);

}  // namespace fpa
