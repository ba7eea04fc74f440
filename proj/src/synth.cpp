#include "fpa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <sstream>

#include "fpa/error.hpp"
#include "fpa/random.hpp"

namespace fpa {

namespace {

std::string padded(const char* prefix, std::size_t value, std::size_t count) {
    const std::size_t width = std::to_string(std::max<std::size_t>(count, 1)).size();
    std::string digits = std::to_string(value);
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::ConfigError, what);
}

bool in_unit_open(double x) { return x > 0.0 && x < 1.0; }
bool in_unit_half_open(double x) { return x >= 0.0 && x < 1.0; }

struct Layout {
    std::vector<std::size_t> module_of;              // per predicate
    std::vector<std::size_t> faults;                 // fault predicate indices
    std::vector<std::vector<std::size_t>> context;   // per fault
    std::vector<std::vector<std::size_t>> duplicates;  // source first
};

Layout plan_layout(const SynthConfig& c, Rng& rng) {
    const std::size_t n = c.n_predicates;
    Layout lay;
    lay.module_of.resize(n);
    std::vector<std::vector<std::size_t>> members(c.n_modules);
    for (std::size_t j = 0; j < n; ++j) {
        lay.module_of[j] = j * c.n_modules / n;
        members[lay.module_of[j]].push_back(j);
    }

    std::vector<std::size_t> modules(c.n_modules);
    for (std::size_t k = 0; k < modules.size(); ++k) modules[k] = k;
    rng.shuffle(std::span<std::size_t>(modules));

    std::set<std::size_t> taken;
    for (std::size_t f = 0; f < c.n_faults; ++f) {
        const auto& pool = members[modules[f % modules.size()]];
        std::size_t pick = pool[rng.index(pool.size())];
        while (taken.contains(pick)) pick = pool[(std::find(pool.begin(), pool.end(), pick) - pool.begin() + 1) % pool.size()];
        taken.insert(pick);
        lay.faults.push_back(pick);
    }
    std::set<std::size_t> fault_set(lay.faults.begin(), lay.faults.end());
    std::set<std::size_t> reserved = fault_set;
    for (std::size_t fault : lay.faults) {
        // the predicates executed after the fault, wrapping around
        std::vector<std::size_t> ctx;
        for (std::size_t step = 1; step < n && ctx.size() < c.context_size; ++step) {
            const std::size_t j = (fault + step) % n;
            if (!fault_set.contains(j) && !reserved.contains(j)) ctx.push_back(j);
        }
        reserved.insert(ctx.begin(), ctx.end());
        lay.context.push_back(std::move(ctx));
    }

    std::vector<std::size_t> free;
    for (std::size_t j = 0; j < n; ++j) {
        if (!reserved.contains(j)) free.push_back(j);
    }
    rng.shuffle(std::span<std::size_t>(free));
    std::size_t next = 0;
    for (std::size_t size : c.duplicate_groups) {
        if (size < 2) continue;
        std::vector<std::size_t> group(free.begin() + static_cast<std::ptrdiff_t>(next),
                                       free.begin() + static_cast<std::ptrdiff_t>(next + size));
        next += size;
        std::sort(group.begin(), group.end());
        lay.duplicates.push_back(std::move(group));
    }
    return lay;
}

ModuleMetricsRecord draw_metrics(Rng& rng, std::string id, bool faulty, const SynthConfig& c) {
    ModuleMetricsRecord r;
    r.module_id = std::move(id);
    r.loc = rng.between(15, 80);
    r.distinct_operators = rng.between(8, 20);
    r.distinct_operands = rng.between(8, 30);
    r.total_operators = std::lround(static_cast<double>(r.distinct_operators) * rng.uniform(1.5, 4.0));
    r.total_operands = std::lround(static_cast<double>(r.distinct_operands) * rng.uniform(1.5, 4.0));
    r.cyclomatic = rng.between(1, 8);
    if (faulty && c.inflate_metrics) {
        auto inflate = [&](long v) { return std::lround(static_cast<double>(v) * c.metrics_inflation); };
        r.distinct_operators = inflate(r.distinct_operators);
        r.distinct_operands = inflate(r.distinct_operands);
        r.total_operators = inflate(r.total_operators);
        r.total_operands = inflate(r.total_operands);
    }
    return r;
}

ProgramDependenceGraph draw_pdg(Rng& rng, std::size_t n, double extra_ratio) {
    constexpr std::size_t kWindow = 5;
    std::vector<std::string> nodes(n);
    for (std::size_t j = 0; j < n; ++j) nodes[j] = std::to_string(j + 1);
    std::vector<PdgEdge> edges;
    auto kind = [&] { return rng.bernoulli(0.5) ? EdgeKind::Control : EdgeKind::Data; };
    // spanning tree with local parents, so nearby predicates stay close
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t parent = i - 1 - rng.index(std::min(i, kWindow));
        edges.push_back({nodes[parent], nodes[i], kind()});
    }
    const auto extra = static_cast<std::size_t>(std::lround(extra_ratio * static_cast<double>(n)));
    for (std::size_t e = 0; e < extra && n > 1; ++e) {
        const std::size_t a = rng.index(n);
        const std::size_t b = rng.index(n);
        const EdgeKind k = kind();
        if (a != b) edges.push_back({nodes[a], nodes[b], k});
    }
    return ProgramDependenceGraph(std::move(nodes), std::move(edges));
}

SynthInstance generate_once(const SynthConfig& c, std::uint64_t seed) {
    const std::size_t n = c.n_predicates;
    const std::size_t m = c.m_runs;
    Rng layout_rng(mix_seed(seed, 0));
    Rng coverage_rng(mix_seed(seed, 1));
    Rng graph_rng(mix_seed(seed, 2));
    Rng metrics_rng(mix_seed(seed, 3));

    const Layout lay = plan_layout(c, layout_rng);

    std::vector<std::string> predicates(n), runs(m), modules(c.n_modules);
    for (std::size_t j = 0; j < n; ++j) predicates[j] = padded("p", j + 1, n);
    for (std::size_t i = 0; i < m; ++i) runs[i] = padded("t", i + 1, m);
    for (std::size_t k = 0; k < c.n_modules; ++k) modules[k] = padded("m", k + 1, c.n_modules);

    // role per predicate: -1 background, f >= 0 fault f, -(2 + f) context of fault f
    std::vector<long> role(n, -1);
    for (std::size_t f = 0; f < lay.faults.size(); ++f) {
        role[lay.faults[f]] = static_cast<long>(f);
        for (std::size_t j : lay.context[f]) role[j] = -2 - static_cast<long>(f);
    }

    std::vector<std::uint8_t> cells(m * n, 0);
    std::vector<Outcome> labels(m, Outcome::Pass);
    std::vector<std::string> true_cc;
    std::vector<bool> region(c.n_faults);
    for (std::size_t i = 0; i < m; ++i) {
        bool covers = false;
        for (std::size_t f = 0; f < c.n_faults; ++f) {
            region[f] = coverage_rng.bernoulli(c.density);
            covers = covers || region[f];
        }
        std::uint8_t* row = cells.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            if (role[j] >= 0) {
                row[j] = region[static_cast<std::size_t>(role[j])] ? 1 : 0;
            } else if (role[j] == -1) {
                row[j] = coverage_rng.bernoulli(c.density) ? 1 : 0;
            } else {
                const bool inside = region[static_cast<std::size_t>(-2 - role[j])];
                row[j] = coverage_rng.bernoulli(inside ? c.context_coverage : c.density) ? 1 : 0;
            }
        }
        const double u = coverage_rng.uniform();
        const bool failed = covers ? u >= c.cc_rate : u < c.noise_fail_rate;
        labels[i] = failed ? Outcome::Fail : Outcome::Pass;
        if (covers && !failed) true_cc.push_back(runs[i]);
    }
    for (const auto& group : lay.duplicates) {
        for (std::size_t i = 0; i < m; ++i) {
            std::uint8_t* row = cells.data() + i * n;
            for (std::size_t g = 1; g < group.size(); ++g) row[group[g]] = row[group.front()];
        }
    }

    const auto fails = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Outcome::Fail));
    if (fails == 0 || fails == m) fail(ErrorCode::DegenerateInstance, "generated outcomes have a single class");

    SynthInstance inst;
    inst.seed_used = seed;
    CoverageMatrix matrix(runs, predicates, std::move(cells));
    inst.outcomes = OutcomeVector(runs, labels);
    inst.dataset = validate_dataset(matrix, inst.outcomes);
    inst.true_cc = std::move(true_cc);

    inst.pdg = draw_pdg(graph_rng, n, c.extra_edge_ratio);
    for (std::size_t j = 0; j < n; ++j)
        inst.predicate_map.add(predicates[j], {modules[lay.module_of[j]], std::to_string(j + 1), static_cast<long>(j + 1)});
    for (std::size_t fault : lay.faults) {
        inst.truth.fault_predicates.insert(predicates[fault]);
        inst.truth.faulty_nodes.insert(std::to_string(fault + 1));
    }

    std::set<std::size_t> faulty_modules;
    for (std::size_t fault : lay.faults) faulty_modules.insert(lay.module_of[fault]);
    for (std::size_t k = 0; k < c.n_modules; ++k)
        inst.metrics.push_back(draw_metrics(metrics_rng, modules[k], faulty_modules.contains(k), c));
    for (std::size_t t = 0; t < c.training_modules; ++t) {
        // the first two modules pin both classes
        const bool faulty = t == 0 ? true : t == 1 ? false : metrics_rng.bernoulli(c.training_fault_rate);
        inst.training_metrics.push_back(draw_metrics(metrics_rng, padded("train", t + 1, c.training_modules), faulty, c));
        inst.training_labels.push_back(faulty ? 1 : 0);
    }
    return inst;
}

template <typename T>
void read_field(const Json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

Json summary_json(const Summary& s) { return Json{{"mean", s.mean}, {"median", s.median}}; }

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

void SynthConfig::validate() const {
    require(n_predicates >= 1, "n_predicates must be >= 1");
    require(m_runs >= 2, "m_runs must be >= 2");
    require(n_faults >= 1 && n_faults <= n_predicates, "n_faults must lie in [1, n_predicates]");
    require(in_unit_half_open(cc_rate), "cc_rate must lie in [0, 1)");
    require(in_unit_half_open(noise_fail_rate), "noise_fail_rate must lie in [0, 1)");
    require(in_unit_open(density), "density must lie in (0, 1)");
    require(context_coverage >= 0.0 && context_coverage <= 1.0, "context_coverage must lie in [0, 1]");
    require(n_modules >= 1 && n_modules <= n_predicates, "n_modules must lie in [1, n_predicates]");
    require(n_faults <= n_modules, "n_faults must not exceed n_modules");
    require(extra_edge_ratio >= 0.0, "extra_edge_ratio must be >= 0");
    require(metrics_inflation >= 1.0, "metrics_inflation must be >= 1");
    require(training_modules >= 2, "training_modules must be >= 2");
    require(in_unit_open(training_fault_rate), "training_fault_rate must lie in (0, 1)");
    const std::size_t reserved = std::min(n_predicates, n_faults * (context_size + 1));
    std::size_t duplicated = 0;
    for (std::size_t g : duplicate_groups) duplicated += g >= 2 ? g : 0;
    require(reserved + duplicated <= n_predicates,
            "fault predicates, their context predicates and duplicate groups exceed n_predicates");
}

Json to_json(const SynthConfig& c) {
    return Json{{"n_predicates", c.n_predicates},
                {"m_runs", c.m_runs},
                {"n_faults", c.n_faults},
                {"cc_rate", c.cc_rate},
                {"noise_fail_rate", c.noise_fail_rate},
                {"density", c.density},
                {"duplicate_groups", c.duplicate_groups},
                {"n_modules", c.n_modules},
                {"context_size", c.context_size},
                {"context_coverage", c.context_coverage},
                {"extra_edge_ratio", c.extra_edge_ratio},
                {"inflate_metrics", c.inflate_metrics},
                {"metrics_inflation", c.metrics_inflation},
                {"training_modules", c.training_modules},
                {"training_fault_rate", c.training_fault_rate},
                {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const Json& j, SynthConfig c) {
    try {
        read_field(j, "n_predicates", c.n_predicates);
        read_field(j, "m_runs", c.m_runs);
        read_field(j, "n_faults", c.n_faults);
        read_field(j, "cc_rate", c.cc_rate);
        read_field(j, "noise_fail_rate", c.noise_fail_rate);
        read_field(j, "density", c.density);
        read_field(j, "duplicate_groups", c.duplicate_groups);
        read_field(j, "n_modules", c.n_modules);
        read_field(j, "context_size", c.context_size);
        read_field(j, "context_coverage", c.context_coverage);
        read_field(j, "extra_edge_ratio", c.extra_edge_ratio);
        read_field(j, "inflate_metrics", c.inflate_metrics);
        read_field(j, "metrics_inflation", c.metrics_inflation);
        read_field(j, "training_modules", c.training_modules);
        read_field(j, "training_fault_rate", c.training_fault_rate);
        read_field(j, "seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("synth config: ") + e.what());
    }
    c.validate();
    return c;
}

SynthInstance generate_instance(const SynthConfig& config) {
    config.validate();
    for (std::size_t attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
        const std::uint64_t seed = attempt == 0 ? config.seed : mix_seed(config.seed, 1000 + attempt);
        try {
            auto inst = generate_once(config, seed);
            inst.attempts = attempt + 1;
            return inst;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateInstance) throw;
        }
    }
    fail(ErrorCode::DegenerateInstance,
         "single outcome class after " + std::to_string(kMaxGenerationAttempts) + " generation attempts");
}

void write_instance(const SynthInstance& inst, const SynthConfig& config, const std::filesystem::path& dir) {
    std::ostringstream coverage, outcomes, pmap, metrics, training, labels;
    write_coverage(coverage, inst.dataset.matrix);
    write_outcomes(outcomes, inst.outcomes);
    write_predicate_map(pmap, inst.predicate_map);
    write_metrics_csv(metrics, inst.metrics);
    write_metrics_csv(training, inst.training_metrics);
    labels << "module_id,faulty\n";
    for (std::size_t t = 0; t < inst.training_metrics.size(); ++t)
        labels << inst.training_metrics[t].module_id << ',' << inst.training_labels[t] << '\n';

    write_file(dir / "coverage.csv", coverage.str());
    write_file(dir / "outcomes.csv", outcomes.str());
    write_file(dir / "predicate_map.csv", pmap.str());
    write_file(dir / "pdg.json", dump_json(to_json(inst.pdg)));
    write_file(dir / "ground_truth.json", dump_json(to_json(inst.truth)));
    write_file(dir / "metrics.csv", metrics.str());
    write_file(dir / "training_metrics.csv", training.str());
    write_file(dir / "training_labels.csv", labels.str());
    const Json info{{"version", FPA_VERSION},
                    {"config", to_json(config)},
                    {"seed_used", inst.seed_used},
                    {"attempts", inst.attempts},
                    {"true_cc", inst.true_cc}};
    write_file(dir / "instance.json", dump_json(info));
}

PipelineInput pipeline_input(const SynthInstance& inst) {
    PipelineInput in;
    in.matrix = inst.dataset.matrix;
    in.outcomes = inst.outcomes;
    in.predicate_map = &inst.predicate_map;
    in.pdg = &inst.pdg;
    in.truth = &inst.truth;
    in.metrics = &inst.metrics;
    in.training_metrics = &inst.training_metrics;
    in.training_labels = &inst.training_labels;
    return in;
}

std::vector<Toggles> all_toggles() { return {{false, false}, {true, false}, {false, true}, {true, true}}; }

void ExperimentConfig::validate() const {
    synth.validate();
    options.validate();
    require(repetitions >= 1, "repetitions must be >= 1");
    require(!toggles.empty(), "at least one toggle combination is required");
}

Json to_json(const ExperimentConfig& c) {
    Json toggles = Json::array();
    for (const auto& t : c.toggles) toggles.push_back({{"cleaning", t.cleaning}, {"penalty_factors", t.penalty_factors}});
    return Json{{"synth", to_json(c.synth)},
                {"repetitions", c.repetitions},
                {"toggles", std::move(toggles)},
                {"options", to_json(c.options)}};
}

ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig c) {
    if (j.contains("synth")) c.synth = synth_config_from_json(j["synth"], c.synth);
    if (j.contains("options")) c.options = pipeline_options_from_json(j["options"], c.options);
    try {
        read_field(j, "repetitions", c.repetitions);
        if (j.contains("toggles")) {
            c.toggles.clear();
            for (const auto& t : j["toggles"])
                c.toggles.push_back({t.value("cleaning", false), t.value("penalty_factors", false)});
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

Summary summarize(std::vector<double> values) {
    Summary s;
    if (values.empty()) return s;
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    s.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    return s;
}

const CombinationReport& ExperimentReport::find(Toggles toggles) const {
    for (const auto& c : combinations) {
        if (c.toggles == toggles) return c;
    }
    fail(ErrorCode::InvalidArgument, "toggle combination not part of the experiment");
}

std::vector<SeedOutcome> run_repetition(const ExperimentConfig& config, std::size_t rep, Execution exec) {
    SynthConfig sc = config.synth;
    sc.seed = mix_seed(config.synth.seed, rep);
    const SynthInstance inst = generate_instance(sc);
    const PipelineInput input = pipeline_input(inst);
    const std::set<std::string> truth_cc(inst.true_cc.begin(), inst.true_cc.end());
    std::vector<SeedOutcome> out(config.toggles.size());
    for (std::size_t t = 0; t < config.toggles.size(); ++t) {
        PipelineOptions o = config.options;
        o.cleaning = config.toggles[t].cleaning;
        o.penalty_factors = config.toggles[t].penalty_factors;
        o.cleaning_seed = mix_seed(sc.seed, 101);
        o.enet.seed = mix_seed(sc.seed, 102);
        const PipelineResult res = run_pipeline(input, o, exec);

        SeedOutcome& so = out[t];
        so.seed = sc.seed;
        so.p_score = res.evaluation.p->score;
        so.t_score = res.evaluation.t->score;
        so.fault_rank = res.evaluation.p->index;
        so.list_size = res.evaluation.p->list_size;
        so.cc_true = truth_cc.size();
        if (res.cleaning) {
            so.cc_found = res.cleaning->cc_runs.size();
            for (const auto& run : res.cleaning->cc_runs) so.cc_hits += truth_cc.contains(run) ? 1 : 0;
        }
        so.alpha = res.fit.alpha;
        so.lambda = res.fit.lambda;
    }
    return out;
}

ExperimentReport reduce_experiment(const ExperimentConfig& config, const std::vector<std::vector<SeedOutcome>>& slots) {
    ExperimentReport report;
    report.config = config;
    report.config.repetitions = slots.size();
    for (std::size_t t = 0; t < config.toggles.size(); ++t) {
        CombinationReport cr;
        cr.toggles = config.toggles[t];
        std::vector<double> p, ts, ranks;
        std::size_t found = 0, hits = 0, truth = 0;
        for (const auto& rep : slots) {
            const SeedOutcome& so = rep.at(t);
            cr.seeds.push_back(so);
            p.push_back(so.p_score);
            ts.push_back(so.t_score);
            if (so.fault_rank > 0) ranks.push_back(static_cast<double>(so.fault_rank));
            else ++cr.fault_missing;
            found += so.cc_found;
            hits += so.cc_hits;
            truth += so.cc_true;
        }
        cr.p_score = summarize(p);
        cr.t_score = summarize(ts);
        cr.fault_rank = summarize(ranks);
        if (cr.toggles.cleaning) {
            if (found > 0) cr.cc_precision = static_cast<double>(hits) / static_cast<double>(found);
            if (truth > 0) cr.cc_recall = static_cast<double>(hits) / static_cast<double>(truth);
        }
        report.combinations.push_back(std::move(cr));
    }
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config, Execution exec) {
    config.validate();
    const std::size_t reps = config.repetitions;
    std::vector<std::vector<SeedOutcome>> slots(reps);
    // the outer loop owns the threads; stages inside run serially
    const Execution inner = exec == Execution::Parallel ? Execution::Serial : exec;

    if (exec == Execution::Parallel) {
        std::vector<std::exception_ptr> errors(reps);
#pragma omp parallel for schedule(dynamic)
        for (std::size_t rep = 0; rep < reps; ++rep) {
            try {
                slots[rep] = run_repetition(config, rep, inner);
            } catch (...) {
                errors[rep] = std::current_exception();
            }
        }
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    } else {
        for (std::size_t rep = 0; rep < reps; ++rep) slots[rep] = run_repetition(config, rep, inner);
    }
    return reduce_experiment(config, slots);
}

Json to_json(const ExperimentReport& report) {
    Json combos = Json::array();
    for (const auto& c : report.combinations) {
        Json seeds = Json::array();
        for (const auto& s : c.seeds) {
            seeds.push_back({{"seed", s.seed},
                             {"p_score", s.p_score},
                             {"t_score", s.t_score},
                             {"fault_rank", s.fault_rank},
                             {"list_size", s.list_size},
                             {"cc_true", s.cc_true},
                             {"cc_found", s.cc_found},
                             {"cc_hits", s.cc_hits},
                             {"alpha", s.alpha},
                             {"lambda", s.lambda}});
        }
        combos.push_back({{"cleaning", c.toggles.cleaning},
                          {"penalty_factors", c.toggles.penalty_factors},
                          {"p_score", summary_json(c.p_score)},
                          {"t_score", summary_json(c.t_score)},
                          {"fault_rank", {{"mean", c.fault_rank.mean},
                                          {"median", c.fault_rank.median},
                                          {"missing", c.fault_missing}}},
                          {"cc_precision", optional_json(c.cc_precision)},
                          {"cc_recall", optional_json(c.cc_recall)},
                          {"seeds", std::move(seeds)}});
    }
    return Json{{"version", FPA_VERSION}, {"config", to_json(report.config)}, {"combinations", std::move(combos)}};
}

}  // namespace fpa
