#include "fpa/pipeline.hpp"

#include "fpa/error.hpp"

namespace fpa {

void PipelineOptions::validate() const {
    theta.validate();
    enet.validate();
    if (cluster_k == 1) fail(ErrorCode::ConfigError, "cluster_k must be 0 (default) or >= 2");
    if (!(group_threshold >= 0.0 && group_threshold <= 1.0))
        fail(ErrorCode::ConfigError, "group_threshold must lie in [0, 1]");
}

Json to_json(const PipelineOptions& o) {
    return Json{{"cleaning", o.cleaning},
                {"cluster_k", o.cluster_k},
                {"cleaning_seed", o.cleaning_seed},
                {"penalty_factors", o.penalty_factors},
                {"theta_low", o.theta.low},
                {"theta_high", o.theta.high},
                {"enet", to_json(o.enet)},
                {"top_k", o.top_k},
                {"group_threshold", o.group_threshold}};
}

PipelineOptions pipeline_options_from_json(const Json& j, PipelineOptions o) {
    try {
        if (j.contains("cleaning")) o.cleaning = j["cleaning"].get<bool>();
        if (j.contains("cluster_k")) o.cluster_k = j["cluster_k"].get<std::size_t>();
        if (j.contains("cleaning_seed")) o.cleaning_seed = j["cleaning_seed"].get<std::uint64_t>();
        if (j.contains("penalty_factors")) o.penalty_factors = j["penalty_factors"].get<bool>();
        if (j.contains("theta_low")) o.theta.low = j["theta_low"].get<double>();
        if (j.contains("theta_high")) o.theta.high = j["theta_high"].get<double>();
        if (j.contains("top_k")) o.top_k = j["top_k"].get<std::size_t>();
        if (j.contains("group_threshold")) o.group_threshold = j["group_threshold"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("pipeline options: ") + e.what());
    }
    if (j.contains("enet")) o.enet = enet_config_from_json(j["enet"], o.enet);
    o.validate();
    return o;
}

PipelineResult run_pipeline(const PipelineInput& in, const PipelineOptions& options, Execution exec) {
    options.validate();
    PipelineResult out;
    out.outcomes = in.outcomes;

    if (options.cleaning) {
        auto cleaned = clean_outcomes(in.matrix, in.outcomes, options.cluster_k, options.cleaning_seed, exec);
        out.outcomes = std::move(cleaned.outcomes);
        out.cleaning = std::move(cleaned.report);
    }
    const Dataset dataset = validate_dataset(in.matrix, out.outcomes);

    const std::size_t n = in.matrix.predicates();
    out.penalty.assign(n, 1.0);
    if (options.penalty_factors) {
        if (in.predicate_map == nullptr || in.metrics == nullptr)
            fail(ErrorCode::ConfigError, "penalty factors need a predicate map and module metrics");
        if (in.model != nullptr) {
            out.model = *in.model;
            out.model->theta = options.theta;
        } else if (in.training_metrics != nullptr && in.training_labels != nullptr) {
            out.model = train_fault_proneness(*in.training_metrics, *in.training_labels, options.theta);
        } else {
            fail(ErrorCode::ConfigError, "penalty factors need a fault-proneness model or training data");
        }
        out.module_fp = predict_module_fp(*out.model, *in.metrics);
        out.predicate_fp = predicate_fault_proneness(in.matrix.predicate_ids(), *in.predicate_map, out.module_fp);
        out.penalty = penalty_factors(out.predicate_fp, options.theta).values;
    }

    out.fit = fit(dataset, out.penalty, options.enet, exec);
    if (!out.fit.diagnostics.converged) out.flags.push_back("NonConvergence");

    out.evaluation = evaluate(out.fit, in.matrix, in.predicate_map, in.pdg, in.truth, options.top_k,
                              options.group_threshold, exec);
    for (const auto& f : out.evaluation.flags) out.flags.push_back(f);
    return out;
}

Json pipeline_report_json(const PipelineResult& r) {
    Json report = to_json(r.evaluation);
    report["flags"] = r.flags;
    const std::size_t relabeled = r.cleaning ? r.cleaning->cc_runs.size() : 0;
    report["cleaning"] = r.cleaning ? to_json(*r.cleaning) : Json(nullptr);
    report["relabeled_runs"] = relabeled;
    report["selected"] = {{"alpha", r.fit.alpha},
                          {"lambda", r.fit.lambda},
                          {"cv_error", r.fit.cv.best_error},
                          {"folds", r.fit.cv.folds}};
    if (!r.module_fp.empty()) {
        Json fp = Json::object();
        for (const auto& [module, value] : r.module_fp) fp[module] = value;
        report["module_fault_proneness"] = std::move(fp);
    }
    return report;
}

}  // namespace fpa
