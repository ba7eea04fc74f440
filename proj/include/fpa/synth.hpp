#pragma once

// Synthetic localization instances with known ground truth, and A/B
// experiments over them.
//
// Generative model, per run:
//   - each fault f has a region indicator r_f ~ Bernoulli(density); the fault
//     predicate is covered iff r_f
//   - the fault's context predicates (the ones following it in predicate
//     order, i.e. the rest of its execution path) are covered with
//     probability context_coverage inside the region and with the base
//     density outside it
//   - every other predicate is covered independently with the base density
//   - a run covering any fault fails with probability 1 - cc_rate, any other
//     run fails with probability noise_fail_rate
// Passing runs that cover a fault are the injected coincidentally correct
// runs. Setting context_size = 0 gives plain independent Bernoulli coverage.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fpa/enet.hpp"
#include "fpa/fault_proneness.hpp"
#include "fpa/io.hpp"
#include "fpa/kernels.hpp"
#include "fpa/metrics.hpp"
#include "fpa/model.hpp"
#include "fpa/pipeline.hpp"

namespace fpa {

struct SynthConfig {
    std::size_t n_predicates = 200;
    std::size_t m_runs = 100;
    std::size_t n_faults = 1;
    double cc_rate = 0.3;
    double noise_fail_rate = 0.0;
    double density = 0.3;
    std::vector<std::size_t> duplicate_groups{3};  // sizes of collinear groups
    std::size_t n_modules = 20;
    std::size_t context_size = 40;
    double context_coverage = 0.9;
    double extra_edge_ratio = 0.2;  // extra PDG edges per node beyond the spanning tree
    bool inflate_metrics = true;
    double metrics_inflation = 2.5;
    std::size_t training_modules = 60;
    double training_fault_rate = 0.3;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

Json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const Json& json, SynthConfig base = {});

struct SynthInstance {
    Dataset dataset;
    OutcomeVector outcomes;
    GroundTruth truth;
    ProgramDependenceGraph pdg;
    PredicateMap predicate_map;
    std::vector<ModuleMetricsRecord> metrics;           // modules hosting the predicates
    std::vector<ModuleMetricsRecord> training_metrics;  // labelled corpus for the FP model
    std::vector<int> training_labels;
    std::vector<std::string> true_cc;                    // injected coincidentally correct runs
    std::uint64_t seed_used = 0;
    std::size_t attempts = 1;
};

inline constexpr std::size_t kMaxGenerationAttempts = 10;

// Regenerates with derived seeds while the outcomes have a single class;
// DegenerateInstance after 10 attempts.
SynthInstance generate_instance(const SynthConfig& config);

// coverage.csv, outcomes.csv, predicate_map.csv, pdg.json, ground_truth.json,
// metrics.csv, training_metrics.csv, training_labels.csv, instance.json
void write_instance(const SynthInstance& instance, const SynthConfig& config, const std::filesystem::path& dir);

PipelineInput pipeline_input(const SynthInstance& instance);

struct Toggles {
    bool cleaning = false;
    bool penalty_factors = false;

    friend bool operator==(const Toggles&, const Toggles&) = default;
};

std::vector<Toggles> all_toggles();

struct ExperimentConfig {
    SynthConfig synth;
    std::size_t repetitions = 100;
    std::vector<Toggles> toggles = all_toggles();
    PipelineOptions options;  // cleaning/penalty switches are overridden per toggle

    void validate() const;
};

Json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const Json& json, ExperimentConfig base = {});

struct SeedOutcome {
    std::uint64_t seed = 0;
    double p_score = 100.0;
    double t_score = 100.0;
    std::size_t fault_rank = 0;  // 1-based, 0 when absent from the ranking
    std::size_t list_size = 0;
    std::size_t cc_true = 0;
    std::size_t cc_found = 0;
    std::size_t cc_hits = 0;
    double alpha = 0.0;
    double lambda = 0.0;
};

struct Summary {
    double mean = 0.0;
    double median = 0.0;
};

Summary summarize(std::vector<double> values);

struct CombinationReport {
    Toggles toggles;
    std::vector<SeedOutcome> seeds;  // in repetition order
    Summary p_score;
    Summary t_score;
    Summary fault_rank;              // over seeds where the fault is ranked
    std::size_t fault_missing = 0;
    std::optional<double> cc_precision;  // pooled over seeds; unset when undefined
    std::optional<double> cc_recall;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<CombinationReport> combinations;

    const CombinationReport& find(Toggles toggles) const;
};

// Instance `rep` of the experiment (seed = mix_seed(master, rep)) run under
// every toggle combination, in toggle order.
std::vector<SeedOutcome> run_repetition(const ExperimentConfig& config, std::size_t rep,
                                        Execution exec = Execution::Parallel);

// Per-combination summaries over the given repetitions (slots[rep][toggle]).
ExperimentReport reduce_experiment(const ExperimentConfig& config, const std::vector<std::vector<SeedOutcome>>& slots);

// One instance per repetition (seed = mix_seed(master, rep)); every toggle
// combination is run on the same instance. Repetitions may run in parallel;
// results are reduced in repetition order.
ExperimentReport run_experiment(const ExperimentConfig& config, Execution exec = Execution::Parallel);

Json to_json(const ExperimentReport& report);

}  // namespace fpa
