#include "fpa/cli.hpp"

#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fpa/cc_cleaner.hpp"
#include "fpa/enet.hpp"
#include "fpa/error.hpp"
#include "fpa/fault_proneness.hpp"
#include "fpa/io.hpp"
#include "fpa/metrics.hpp"
#include "fpa/pipeline.hpp"
#include "fpa/ranker.hpp"
#include "fpa/synth.hpp"

namespace fpa::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool serial = false;

    Execution exec() const { return serial ? Execution::Serial : Execution::Parallel; }
    fs::path out_dir() const { return out.empty() ? fs::path(".") : fs::path(out); }
};

Json load_config(const std::string& path) {
    if (path.empty()) return Json::object();
    try {
        Json j = load_json(path);
        if (!j.is_object()) fail(ErrorCode::ConfigError, path + ": config must be a JSON object");
        return j;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        fail(ErrorCode::ConfigError, path + ": " + e.detail());
    }
}

// Options from the config's "options" block, then seeds from the config and
// --seed (the flag wins).
PipelineOptions resolve_options(const Json& config, const Globals& g) {
    PipelineOptions o = config.contains("options") ? pipeline_options_from_json(config["options"]) : PipelineOptions{};
    std::optional<std::uint64_t> seed = g.seed;
    if (!seed && config.contains("seed")) {
        try {
            seed = config["seed"].get<std::uint64_t>();
        } catch (const nlohmann::json::exception&) {
            fail(ErrorCode::ConfigError, "seed must be a non-negative integer");
        }
    }
    if (seed) {
        o.cleaning_seed = *seed;
        o.enet.seed = *seed;
    }
    return o;
}

Json with_header(Json body, const Json& config) {
    Json out{{"version", FPA_VERSION}, {"config", config}};
    for (auto& [key, value] : body.items()) out[key] = value;
    return out;
}

void emit(const fs::path& path, const std::string& text, std::ostream& out) {
    write_file(path, text);
    out << "wrote " << path.string() << '\n';
}

std::string csv_text(auto&& writer) {
    std::ostringstream s;
    writer(s);
    return s.str();
}

// --- metrics ----------------------------------------------------------------

int cmd_metrics(const std::vector<std::string>& sources, bool derived, const Globals& g, std::ostream& out) {
    std::vector<ModuleMetricsRecord> records;
    std::set<std::string> seen;
    for (const auto& src : sources) {
        std::vector<ModuleMetricsRecord> found;
        try {
            found = extract_metrics(read_file(src));
        } catch (const Error& e) {
            fail(e.code(), src + ": " + e.detail());
        }
        for (auto& r : found) {
            std::string id = r.module_id;
            for (int k = 2; seen.contains(id); ++k) id = r.module_id + "#" + std::to_string(k);
            r.module_id = id;
            seen.insert(id);
            records.push_back(std::move(r));
        }
    }
    const std::string text = csv_text([&](std::ostream& s) { write_metrics_csv(s, records, derived); });
    if (g.out.empty()) {
        out << text;
    } else {
        emit(g.out_dir() / "metrics.csv", text, out);
    }
    return kExitOk;
}

// --- fault-proneness ----------------------------------------------------------

struct FpArgs {
    std::string metrics;
    std::string labels;
    std::string predict;
    std::optional<double> theta_low;
    std::optional<double> theta_high;
};

int cmd_fault_proneness(const FpArgs& a, const Globals& g, std::ostream& out) {
    const Json config = load_config(g.config);
    PipelineOptions o = resolve_options(config, g);
    if (a.theta_low) o.theta.low = *a.theta_low;
    if (a.theta_high) o.theta.high = *a.theta_high;
    o.theta.validate();

    const auto records = load_metrics_csv(a.metrics);
    const auto labels = load_fault_labels(a.labels, records);
    const auto model = train_fault_proneness(records, labels, o.theta);
    emit(g.out_dir() / "fault_proneness_model.json", dump_json(with_header(to_json(model), to_json(o))), out);

    if (!a.predict.empty()) {
        const auto targets = load_metrics_csv(a.predict);
        std::ostringstream s;
        s << "module_id,fault_proneness,penalty_factor\n";
        for (const auto& [module, fp] : predict_module_fp(model, targets)) {
            Json row{fp, penalty_factor(fp, o.theta)};
            s << module << ',' << row[0].dump() << ',' << row[1].dump() << '\n';
        }
        emit(g.out_dir() / "module_fault_proneness.csv", s.str(), out);
    }
    return kExitOk;
}

// --- clean ----------------------------------------------------------------------

int cmd_clean(const std::string& coverage, const std::string& outcomes, std::optional<std::size_t> k,
              const Globals& g, std::ostream& out) {
    const Json config = load_config(g.config);
    PipelineOptions o = resolve_options(config, g);
    if (k) o.cluster_k = *k;
    o.validate();

    const auto matrix = load_coverage(coverage);
    const auto labels = load_outcomes(outcomes);
    validate_dataset(matrix, labels);
    const auto result = clean_outcomes(matrix, labels, o.cluster_k, o.cleaning_seed, g.exec());
    emit(g.out_dir() / "outcomes_clean.csv", csv_text([&](std::ostream& s) { write_outcomes(s, result.outcomes); }), out);
    emit(g.out_dir() / "cleaning_report.json", dump_json(with_header(to_json(result.report), to_json(o))), out);
    return kExitOk;
}

// --- localize / evaluate / pipeline -----------------------------------------------

struct InputPaths {
    std::string coverage;
    std::string outcomes;
    std::string predicate_map;
    std::string pdg;
    std::string ground_truth;
    std::string metrics;
    std::string model;
    std::string training_metrics;
    std::string training_labels;
};

// Everything a pipeline run may need, owned in one place.
struct LoadedInputs {
    CoverageMatrix matrix;
    OutcomeVector outcomes;
    std::optional<PredicateMap> predicate_map;
    std::optional<ProgramDependenceGraph> pdg;
    std::optional<GroundTruth> truth;
    std::optional<std::vector<ModuleMetricsRecord>> metrics;
    std::optional<FaultPronenessModel> model;
    std::optional<std::vector<ModuleMetricsRecord>> training_metrics;
    std::optional<std::vector<int>> training_labels;

    PipelineInput view() const {
        PipelineInput in;
        in.matrix = matrix;
        in.outcomes = outcomes;
        in.predicate_map = predicate_map ? &*predicate_map : nullptr;
        in.pdg = pdg ? &*pdg : nullptr;
        in.truth = truth ? &*truth : nullptr;
        in.metrics = metrics ? &*metrics : nullptr;
        in.model = model ? &*model : nullptr;
        in.training_metrics = training_metrics ? &*training_metrics : nullptr;
        in.training_labels = training_labels ? &*training_labels : nullptr;
        return in;
    }
};

LoadedInputs load_inputs(const InputPaths& p, bool need_outcomes) {
    LoadedInputs in;
    in.matrix = load_coverage(p.coverage);
    if (need_outcomes) in.outcomes = load_outcomes(p.outcomes);
    if (!p.predicate_map.empty()) in.predicate_map = load_predicate_map(p.predicate_map);
    if (!p.pdg.empty()) in.pdg = load_pdg(p.pdg);
    if (!p.ground_truth.empty()) in.truth = load_ground_truth(p.ground_truth);
    if (!p.metrics.empty()) in.metrics = load_metrics_csv(p.metrics);
    if (!p.model.empty()) in.model = fault_proneness_from_json(load_json(p.model));
    if (!p.training_metrics.empty()) {
        in.training_metrics = load_metrics_csv(p.training_metrics);
        if (p.training_labels.empty()) fail(ErrorCode::ConfigError, "training metrics need training labels");
        in.training_labels = load_fault_labels(p.training_labels, *in.training_metrics);
    }
    if (in.predicate_map) in.predicate_map->validate_against(in.matrix, in.pdg ? &*in.pdg : nullptr);
    if (in.truth && in.pdg) in.truth->validate_against(*in.pdg, in.matrix);
    return in;
}

Json inputs_json(const InputPaths& p) {
    Json j = Json::object();
    auto put = [&](const char* key, const std::string& v) {
        if (!v.empty()) j[key] = v;
    };
    put("coverage", p.coverage);
    put("outcomes", p.outcomes);
    put("predicate_map", p.predicate_map);
    put("pdg", p.pdg);
    put("ground_truth", p.ground_truth);
    put("metrics", p.metrics);
    put("model", p.model);
    put("training_metrics", p.training_metrics);
    put("training_labels", p.training_labels);
    return j;
}

void add_input_flags(CLI::App* cmd, InputPaths& p) {
    cmd->add_option("--predicate-map", p.predicate_map, "predicate_id,module_id,node_id,line CSV")->check(CLI::ExistingFile);
    cmd->add_option("--pdg", p.pdg, "program dependence graph JSON")->check(CLI::ExistingFile);
    cmd->add_option("--ground-truth", p.ground_truth, "faulty nodes / fault predicates JSON")->check(CLI::ExistingFile);
}

Json run_report(const PipelineResult& r, const Json& config) {
    return with_header(pipeline_report_json(r), config);
}

int cmd_localize(InputPaths paths, bool no_penalty, const Globals& g, std::ostream& out) {
    const Json config = load_config(g.config);
    PipelineOptions o = resolve_options(config, g);
    o.cleaning = false;
    if (no_penalty || paths.metrics.empty()) o.penalty_factors = false;
    const LoadedInputs in = load_inputs(paths, true);
    const auto result = run_pipeline(in.view(), o, g.exec());
    const Json resolved{{"inputs", inputs_json(paths)}, {"options", to_json(o)}};
    emit(g.out_dir() / "fit.json", dump_json(with_header(to_json(result.fit), resolved)), out);
    emit(g.out_dir() / "ranking.json",
         dump_json(with_header(Json{{"ranking", to_json(result.evaluation.ranking)}}, resolved)), out);
    return kExitOk;
}

int cmd_evaluate(const InputPaths& paths, const std::string& fit_path, std::optional<std::size_t> top_k,
                 std::optional<double> tau, const Globals& g, std::ostream& out) {
    const Json config = load_config(g.config);
    PipelineOptions o = resolve_options(config, g);
    if (top_k) o.top_k = *top_k;
    if (tau) o.group_threshold = *tau;
    o.validate();
    const LoadedInputs in = load_inputs(paths, false);
    FitResult fitted = fit_from_json(load_json(fit_path));
    const Evaluation ev = evaluate(fitted, in.matrix, in.predicate_map ? &*in.predicate_map : nullptr,
                                   in.pdg ? &*in.pdg : nullptr, in.truth ? &*in.truth : nullptr, o.top_k,
                                   o.group_threshold, g.exec());
    Json inputs = inputs_json(paths);
    inputs["fit"] = fit_path;
    const Json resolved{{"inputs", inputs}, {"options", to_json(o)}};
    const Json body = to_json(ev);
    if (ev.t) out << "t_score " << Json(ev.t->score).dump() << '\n';
    if (ev.p) out << "p_score " << Json(ev.p->score).dump() << '\n';
    emit(g.out_dir() / "evaluation.json", dump_json(with_header(body, resolved)), out);
    return kExitOk;
}

std::string config_path(const Json& inputs, const char* key, const fs::path& base) {
    if (!inputs.contains(key)) return {};
    try {
        fs::path p = inputs[key].get<std::string>();
        return (p.is_absolute() ? p : base / p).string();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::ConfigError, std::string("inputs.") + key + " must be a path string");
    }
}

int cmd_pipeline(const Globals& g, std::ostream& out) {
    if (g.config.empty()) fail(ErrorCode::ConfigError, "pipeline needs --config");
    const Json config = load_config(g.config);
    const PipelineOptions o = resolve_options(config, g);
    const fs::path base = fs::path(g.config).parent_path();
    const Json inputs = config.value("inputs", Json::object());
    InputPaths paths{config_path(inputs, "coverage", base),        config_path(inputs, "outcomes", base),
                     config_path(inputs, "predicate_map", base),   config_path(inputs, "pdg", base),
                     config_path(inputs, "ground_truth", base),    config_path(inputs, "metrics", base),
                     config_path(inputs, "model", base),           config_path(inputs, "training_metrics", base),
                     config_path(inputs, "training_labels", base)};
    if (paths.coverage.empty() || paths.outcomes.empty())
        fail(ErrorCode::ConfigError, "inputs.coverage and inputs.outcomes are required");

    fs::path out_dir = g.out_dir();
    if (g.out.empty() && config.contains("out")) {
        const fs::path p = config["out"].get<std::string>();
        out_dir = p.is_absolute() ? p : base / p;
    }

    const LoadedInputs in = load_inputs(paths, true);
    const auto result = run_pipeline(in.view(), o, g.exec());
    // the resolved config records inputs as given so reports do not depend on
    // the working directory
    const Json resolved{{"inputs", inputs}, {"options", to_json(o)}};
    if (result.cleaning)
        emit(out_dir / "outcomes_clean.csv", csv_text([&](std::ostream& s) { write_outcomes(s, result.outcomes); }), out);
    emit(out_dir / "fit.json", dump_json(with_header(to_json(result.fit), resolved)), out);
    emit(out_dir / "ranking.json",
         dump_json(with_header(Json{{"ranking", to_json(result.evaluation.ranking)}}, resolved)), out);
    emit(out_dir / "evaluation.json", dump_json(run_report(result, resolved)), out);
    return kExitOk;
}

// --- synth ------------------------------------------------------------------------

struct SynthArgs {
    bool experiment = false;
    std::optional<std::size_t> repetitions;
    std::optional<std::size_t> predicates;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> faults;
    std::optional<double> cc_rate;
};

int cmd_synth(const SynthArgs& a, const Globals& g, std::ostream& out) {
    const Json config = load_config(g.config);
    ExperimentConfig ec = experiment_config_from_json(config);
    if (g.seed) ec.synth.seed = *g.seed;
    if (a.repetitions) ec.repetitions = *a.repetitions;
    if (a.predicates) ec.synth.n_predicates = *a.predicates;
    if (a.runs) ec.synth.m_runs = *a.runs;
    if (a.faults) ec.synth.n_faults = *a.faults;
    if (a.cc_rate) ec.synth.cc_rate = *a.cc_rate;
    ec.validate();

    const SynthInstance inst = generate_instance(ec.synth);
    write_instance(inst, ec.synth, g.out_dir());
    out << "wrote instance (seed " << inst.seed_used << ", " << inst.dataset.failing() << " failing of "
        << inst.dataset.runs() << " runs) to " << g.out_dir().string() << '\n';
    if (a.experiment) {
        const ExperimentReport report = run_experiment(ec, g.exec());
        emit(g.out_dir() / "experiment_report.json", dump_json(to_json(report)), out);
    }
    return kExitOk;
}

int exit_code_for(const Error& e) { return is_config_error(e.code()) ? kExitConfig : kExitData; }

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fault localization with coincidental-correctness cleaning and fault-proneness penalties", "fpa"};
    app.set_version_flag("--version", FPA_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "seed for clustering, folds and generation");
    app.add_option("--out", g.out, "output directory");
    app.add_flag("--serial", g.serial, "run every stage on the serial reference path");

    auto* metrics = app.add_subcommand("metrics", "extract static metrics from C sources");
    std::vector<std::string> sources;
    bool derived = false;
    metrics->add_option("sources", sources, "C source files")->required()->check(CLI::ExistingFile);
    metrics->add_flag("--derived", derived, "append the Halstead-derived columns");

    auto* fp = app.add_subcommand("fault-proneness", "train the fault-proneness model");
    FpArgs fpa;
    fp->add_option("--metrics", fpa.metrics, "training metrics CSV")->required()->check(CLI::ExistingFile);
    fp->add_option("--labels", fpa.labels, "module_id,faulty CSV")->required()->check(CLI::ExistingFile);
    fp->add_option("--predict", fpa.predict, "metrics CSV to score with the trained model")->check(CLI::ExistingFile);
    fp->add_option("--theta-low", fpa.theta_low, "exponent for FP <= 0.5, in [3, 4]");
    fp->add_option("--theta-high", fpa.theta_high, "multiplier for FP > 0.5, in [0.2, 0.3]");

    auto* clean = app.add_subcommand("clean", "relabel coincidentally correct runs");
    std::string coverage, outcomes;
    std::optional<std::size_t> k;
    clean->add_option("--coverage", coverage, "coverage CSV")->required()->check(CLI::ExistingFile);
    clean->add_option("--outcomes", outcomes, "outcomes CSV")->required()->check(CLI::ExistingFile);
    clean->add_option("-k,--clusters", k, "cluster count (default max(2, round(sqrt(m/2))))");

    auto* localize = app.add_subcommand("localize", "fit the penalized elastic net and rank predicates");
    InputPaths lp;
    bool no_penalty = false;
    localize->add_option("--coverage", lp.coverage, "coverage CSV")->required()->check(CLI::ExistingFile);
    localize->add_option("--outcomes", lp.outcomes, "outcomes CSV")->required()->check(CLI::ExistingFile);
    localize->add_option("--predicate-map", lp.predicate_map, "predicate map CSV")->check(CLI::ExistingFile);
    localize->add_option("--metrics", lp.metrics, "metrics of the modules hosting the predicates")->check(CLI::ExistingFile);
    localize->add_option("--model", lp.model, "fault-proneness model JSON")->check(CLI::ExistingFile);
    localize->add_option("--training-metrics", lp.training_metrics, "labelled metrics CSV")->check(CLI::ExistingFile);
    localize->add_option("--training-labels", lp.training_labels, "module_id,faulty CSV")->check(CLI::ExistingFile);
    localize->add_flag("--no-penalty", no_penalty, "use uniform penalty factors");

    auto* eval = app.add_subcommand("evaluate", "score a fit with T-score and P-score");
    InputPaths ep;
    std::string fit_path;
    std::optional<std::size_t> top_k;
    std::optional<double> tau;
    eval->add_option("--fit", fit_path, "fit JSON from localize")->required()->check(CLI::ExistingFile);
    eval->add_option("--coverage", ep.coverage, "coverage CSV (for predictor groups)")->required()->check(CLI::ExistingFile);
    add_input_flags(eval, ep);
    eval->add_option("--top-k", top_k, "ranked predicates mapped to statements (default: top group)");
    eval->add_option("--tau", tau, "correlation threshold for predictor groups");

    auto* synth = app.add_subcommand("synth", "generate a synthetic instance and optionally run experiments");
    SynthArgs sa;
    synth->add_flag("--experiment", sa.experiment, "run the cleaning/penalty A/B experiment");
    synth->add_option("--repetitions", sa.repetitions, "experiment repetitions");
    synth->add_option("--predicates", sa.predicates, "number of predicates");
    synth->add_option("--runs", sa.runs, "number of runs");
    synth->add_option("--faults", sa.faults, "number of injected faults");
    synth->add_option("--cc-rate", sa.cc_rate, "probability a fault-covering run passes");

    auto* pipeline = app.add_subcommand("pipeline", "run every stage from a config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (metrics->parsed()) return cmd_metrics(sources, derived, g, out);
        if (fp->parsed()) return cmd_fault_proneness(fpa, g, out);
        if (clean->parsed()) return cmd_clean(coverage, outcomes, k, g, out);
        if (localize->parsed()) return cmd_localize(lp, no_penalty, g, out);
        if (eval->parsed()) return cmd_evaluate(ep, fit_path, top_k, tau, g, out);
        if (synth->parsed()) return cmd_synth(sa, g, out);
        if (pipeline->parsed()) return cmd_pipeline(g, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitConfig;
}

}  // namespace fpa::cli
