// Acceptance checks. Prints one "Criterion N: PASS|FAIL <detail>" line per
// criterion; exit status is the number of failed criteria.
//
//   acceptance [--criterion N]... [--no-time-limit] [--repetitions R]

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpa/cli.hpp"
#include "fpa/enet.hpp"
#include "fpa/fault_proneness.hpp"
#include "fpa/io.hpp"
#include "fpa/metrics.hpp"
#include "fpa/random.hpp"
#include "fpa/ranker.hpp"
#include "fpa/synth.hpp"
#include "oracles/bfs_oracle.hpp"
#include "oracles/enet_oracle.hpp"

using namespace fpa;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

struct Settings {
    bool time_limit = true;
    std::size_t repetitions = 100;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Instance {
    std::size_t m, n;
    std::vector<double> raw;
    std::vector<double> y;
};

Instance random_instance(Rng& rng, std::size_t m, std::size_t n) {
    Instance in{m, n, std::vector<double>(m * n), std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) in.raw[i * n + j] = rng.bernoulli(0.4) ? 1.0 : 0.0;
        in.y[i] = (in.raw[i * n] == 1.0 && rng.bernoulli(0.8)) || rng.bernoulli(0.15) ? 1.0 : 0.0;
    }
    return in;
}

Design design_of(const Instance& in) { return standardize(DenseMatrix{in.m, in.n, in.raw}, in.y); }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

Verdict solver_matches_oracle() {
    const auto t0 = Clock::now();
    Rng rng(1);
    const double tol = CdOptions{}.tol;
    double worst_beta = 0, worst_kkt = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng.index(8);
        const std::size_t m = 10 + rng.index(41);
        const auto in = random_instance(rng, m, n);
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform();
        const auto d = design_of(in);
        const auto p = oracle::standardize(in.raw, m, n, in.y);
        for (double alpha : {0.0, 0.5, 1.0}) {
            std::vector<double> warm;
            for (double lambda : lambda_path(d, alpha, v, 5, 1e-2).lambdas) {
                const auto r = coordinate_descent(d, lambda, alpha, v, warm);
                warm = r.beta;
                worst_beta = std::max(worst_beta, max_abs_diff(r.beta, oracle::minimize(p, lambda, alpha, v)));
                worst_kkt = std::max(worst_kkt, oracle::kkt(p, r.beta, lambda, alpha, v));
            }
        }
    }
    const double t = seconds_since(t0);
    return {worst_beta <= 1e-6 && worst_kkt <= 10 * tol && t < 10.0,
            fmt("max |b - b_oracle| = %.2e, max KKT = %.2e, %.2f s", worst_beta, worst_kkt, t)};
}

Verdict closed_forms() {
    const auto d = standardize(DenseMatrix{4, 1, {0, 0, 1, 1}}, std::vector<double>{0, 0, 1, 1});
    const std::vector<double> v{1.0};
    const double lasso = coordinate_descent(d, 0.1, 1.0, v).beta[0];
    const double ls = coordinate_descent(d, 0.0, 1.0, v).beta[0];

    // lambda = 0 on a multi-column instance against the normal equations
    Rng rng(2);
    const auto in = random_instance(rng, 40, 5);
    const auto p = oracle::standardize(in.raw, in.m, in.n, in.y);
    std::vector<double> a(25), b(5), sol;
    for (std::size_t j = 0; j < 5; ++j) {
        for (std::size_t k = 0; k < 5; ++k)
            for (std::size_t i = 0; i < in.m; ++i) a[j * 5 + k] += p.x[j * in.m + i] * p.x[k * in.m + i];
        for (std::size_t i = 0; i < in.m; ++i) b[j] += p.x[j * in.m + i] * p.y[i];
    }
    oracle::solve(a, b, 5, sol);
    const double ls_multi = max_abs_diff(coordinate_descent(design_of(in), 0.0, 0.5, std::vector<double>(5, 1.0)).beta, sol);
    return {std::abs(lasso - 0.4) <= 1e-12 && std::abs(ls - 0.5) <= 1e-12 && ls_multi <= 1e-6,
            fmt("lasso b = %.15g (0.4), least squares b = %.15g (0.5), 5-column least squares diff %.2e", lasso, ls,
                ls_multi)};
}

Verdict grouping_effect() {
    Rng rng(3);
    double worst = 0;
    for (int rep = 0; rep < 20; ++rep) {
        auto in = random_instance(rng, 20 + rng.index(31), 2 + rng.index(7));
        const std::size_t dup = in.n;
        Instance wide{in.m, in.n + 1, std::vector<double>(in.m * (in.n + 1)), in.y};
        for (std::size_t i = 0; i < in.m; ++i) {
            for (std::size_t j = 0; j < in.n; ++j) wide.raw[i * wide.n + j] = in.raw[i * in.n + j];
            wide.raw[i * wide.n + dup] = in.raw[i * in.n];
        }
        const auto d = design_of(wide);
        const std::vector<double> v(wide.n, 1.0);
        std::vector<double> warm;
        for (double lambda : lambda_path(d, 0.5, v, 10, 1e-2).lambdas) {
            const auto r = coordinate_descent(d, lambda, 0.5, v, warm);
            warm = r.beta;
            worst = std::max(worst, std::abs(r.beta[0] - r.beta[dup]));
        }
    }
    return {worst <= 1e-8, fmt("max |b_j - b_dup| = %.2e over 20 instances", worst)};
}

Verdict unpenalized_predicate() {
    Rng rng(4);
    double worst = 0;
    bool kept = true, zeroed = true;
    for (int rep = 0; rep < 10; ++rep) {
        const auto in = random_instance(rng, 50, 6);
        const auto d = design_of(in);
        const auto p = oracle::standardize(in.raw, in.m, in.n, in.y);
        std::vector<double> v(6, 1.0);
        v[0] = 0.0;
        const double lambda = 1e3;
        const auto r = coordinate_descent(d, lambda, 0.5, v);
        worst = std::max(worst, max_abs_diff(r.beta, oracle::minimize(p, lambda, 0.5, v)));
        kept = kept && r.beta[0] != 0.0;
        for (std::size_t j = 1; j < 6; ++j) zeroed = zeroed && r.beta[j] == 0.0;
    }
    return {kept && zeroed && worst <= 1e-6,
            fmt("v_j = 0 predicate nonzero: %s, noise zeroed: %s, max oracle diff %.2e", kept ? "yes" : "no",
                zeroed ? "yes" : "no", worst)};
}

Verdict evaluation_exact() {
    std::size_t t_mismatch = 0, p_mismatch = 0;
    Rng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 2 + rng.index(99);
        std::vector<std::string> nodes;
        for (std::size_t i = 0; i < n; ++i) nodes.push_back(std::to_string(i));
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        std::vector<PdgEdge> pdg_edges;
        for (std::size_t k = 0, e = rng.index(2 * n); k < e; ++k) {
            const std::size_t a = rng.index(n), b = rng.index(n);
            edges.emplace_back(a, b);
            pdg_edges.push_back({nodes[a], nodes[b], EdgeKind::Control});
        }
        const ProgramDependenceGraph g(nodes, pdg_edges);
        std::set<std::size_t> src, org;
        std::set<std::string> src_s, org_s;
        for (std::size_t k = 0, c = 1 + rng.index(3); k < c; ++k) src.insert(rng.index(n));
        for (std::size_t k = 0, c = 1 + rng.index(2); k < c; ++k) org.insert(rng.index(n));
        for (auto s : src) src_s.insert(nodes[s]);
        for (auto o : org) org_s.insert(nodes[o]);
        t_mismatch += t_score(g, src_s, org_s).examined != oracle::bfs_examined(n, edges, src, org);
    }
    auto list_of = [](std::size_t size) {
        std::vector<std::string> ids;
        std::vector<double> coefs;
        for (std::size_t i = 0; i < size; ++i) {
            ids.push_back("p" + std::to_string(i + 1));
            coefs.push_back(static_cast<double>(size - i));
        }
        return rank_predicates(ids, coefs);
    };
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t size = 1 + rng.index(60), pos = 1 + rng.index(size);
        const double expected = 100.0 * static_cast<double>(pos) / static_cast<double>(size);
        p_mismatch += p_score(list_of(size), {"p" + std::to_string(pos)}).score != expected;
    }
    std::vector<std::string> chain_nodes{"1", "2", "3", "4", "5"};
    const ProgramDependenceGraph chain(chain_nodes, {{"1", "2", EdgeKind::Control},
                                                     {"2", "3", EdgeKind::Control},
                                                     {"3", "4", EdgeKind::Data},
                                                     {"4", "5", EdgeKind::Data}});
    const double h1 = t_score(chain, {"1"}, {"3"}).score;
    const double h2 = t_score(chain, {"2"}, {"2"}).score;
    const double h3 = p_score(list_of(10), {"p1"}).score;
    const double h4 = p_score(list_of(10), {"p5"}).score;
    const bool hand = h1 == 60.0 && h2 == 20.0 && h3 == 10.0 && h4 == 50.0;
    return {t_mismatch == 0 && p_mismatch == 0 && hand,
            fmt("T-score mismatches %zu/30, P-score mismatches %zu/100, hand examples %g%% %g%% %g%% %g%%", t_mismatch,
                p_mismatch, h1, h2, h3, h4)};
}

// Repetitions run until all are done or the budget is spent; the set that
// finished is reported either way.
struct ExperimentRun {
    ExperimentReport report;
    std::size_t completed = 0;
    double seconds = 0;
};

ExperimentRun run_budgeted(const ExperimentConfig& config, double budget) {
    const auto t0 = Clock::now();
    std::vector<std::vector<SeedOutcome>> slots(config.repetitions);
    std::vector<char> done(config.repetitions, 0);
    std::atomic<bool> expired{false};
#pragma omp parallel for schedule(dynamic)
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        if (expired.load()) continue;
        slots[rep] = run_repetition(config, rep, Execution::Serial);
        done[rep] = 1;
        if (seconds_since(t0) > budget) expired = true;
    }
    ExperimentRun out;
    std::vector<std::vector<SeedOutcome>> finished;
    for (std::size_t rep = 0; rep < config.repetitions; ++rep)
        if (done[rep]) finished.push_back(std::move(slots[rep]));
    out.completed = finished.size();
    out.seconds = seconds_since(t0);
    out.report = reduce_experiment(config, finished);
    return out;
}

ExperimentConfig experiment(std::size_t repetitions, std::vector<Toggles> toggles) {
    ExperimentConfig c;
    c.repetitions = repetitions;
    c.toggles = std::move(toggles);
    return c;
}

Verdict cleaning_benefit(const Settings& s) {
    const double budget = s.time_limit ? 60.0 : 1e300;
    const auto run = run_budgeted(experiment(s.repetitions, {{false, false}, {true, false}}), budget);
    const auto& off = run.report.find({false, false});
    const auto& on = run.report.find({true, false});
    const double recall = on.cc_recall.value_or(0.0);
    const bool all = run.completed == s.repetitions;
    const bool quality = on.p_score.median <= off.p_score.median && recall >= 0.9;
    const bool in_time = run.seconds < 60.0;
    return {all && quality && in_time,
            fmt("%zu/%zu seeds in %.1f s%s; median P with cleaning %.3g vs without %.3g; CC recall %.3f",
                run.completed, s.repetitions, run.seconds, all ? "" : " (budget exhausted)", on.p_score.median,
                off.p_score.median, recall)};
}

Verdict fault_proneness_benefit(const Settings& s) {
    const double budget = s.time_limit ? 60.0 : 1e300;
    const auto run = run_budgeted(experiment(s.repetitions, {{false, false}, {false, true}}), budget);
    const auto& uniform = run.report.find({false, false});
    const auto& penal = run.report.find({false, true});
    const bool all = run.completed == s.repetitions;
    const bool quality = penal.p_score.mean <= uniform.p_score.mean;
    const bool in_time = run.seconds < 60.0;
    return {all && quality && in_time,
            fmt("%zu/%zu seeds in %.1f s%s; mean P with penalty factors %.3g vs uniform %.3g", run.completed,
                s.repetitions, run.seconds, all ? "" : " (budget exhausted)", penal.p_score.mean,
                uniform.p_score.mean)};
}

Eigen::MatrixXd hadamard_columns(Eigen::Index cols) {
    Eigen::MatrixXd h(16, 16);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) h(i, j) = (__builtin_popcount(i & j) % 2) ? -1.0 : 1.0;
    return h.middleCols(1, cols) * std::sqrt(15.0 / 16.0);
}

Verdict metrics_and_pca() {
    const std::string dir = FPA_FIXTURES "/metrics/";
    std::map<std::string, ModuleMetricsRecord> expected;
    for (auto& r : load_metrics_csv(dir + "expected.csv")) expected[r.module_id] = r;
    std::size_t matched = 0, total = 0;
    double derived_err = 0;
    for (const char* file : {"straight.c", "branches.c", "mixed.c"}) {
        for (const auto& r : extract_metrics(read_file(dir + file))) {
            ++total;
            const auto it = expected.find(r.module_id);
            if (it == expected.end() || !(it->second == r)) continue;
            ++matched;
            const double N = r.total_operators + r.total_operands, n = r.distinct_operators + r.distinct_operands;
            const double V = N * std::log2(n);
            const double D = r.distinct_operators / 2.0 * r.total_operands / r.distinct_operands;
            const auto h = derive_halstead(r);
            for (double diff : {h.volume - V, h.difficulty - D, h.effort - D * V, h.level - 1 / D, h.time - D * V / 18,
                                h.bugs - V / 3000, h.content - V / D})
                derived_err = std::max(derived_err, std::abs(diff));
        }
    }
    const bool fixtures = matched == expected.size() && total == expected.size() && derived_err <= 1e-9;

    const auto identity = fit_pca(hadamard_columns(11));
    double id_err = 0;
    for (double e : identity.spectrum) id_err = std::max(id_err, std::abs(e - 1.0));
    Eigen::MatrixXd pair(16, 2);
    pair.col(0) = hadamard_columns(1).col(0);
    pair.col(1) = pair.col(0);
    const auto rank1 = fit_pca(pair);
    const double r1_err = std::max(std::abs(rank1.spectrum[0] - 2.0), std::abs(rank1.spectrum[1]));

    bool retention = identity.eigenvalues.size() == 11 && rank1.eigenvalues.size() == 1;
    for (double rho : {0.05, 0.1, 0.15}) {
        Eigen::MatrixXd z(16, 2);
        const auto base = hadamard_columns(2);
        z.col(0) = base.col(0);
        z.col(1) = rho * base.col(0) + std::sqrt(1 - rho * rho) * base.col(1);
        const auto pca = fit_pca(z);
        std::size_t expect = 0;
        for (double e : pca.spectrum) expect += e > 0.9;
        retention = retention && pca.eigenvalues.size() == expect;
    }
    return {fixtures && id_err <= 1e-8 && r1_err <= 1e-8 && retention,
            fmt("fixtures %zu/%zu exact, derived err %.1e; PCA identity err %.1e, rank-1 err %.1e; retention %s",
                matched, expected.size(), derived_err, id_err, r1_err, retention ? "ok" : "violated")};
}

Verdict wide_fit() {
    Rng rng(9);
    const std::size_t m = 30, n = 1000;
    std::vector<std::string> runs, preds;
    for (std::size_t i = 0; i < m; ++i) runs.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) preds.push_back("p" + std::to_string(j));
    std::vector<std::uint8_t> cells(m * n);
    std::vector<fpa::Outcome> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) cells[i * n + j] = rng.bernoulli(0.3);
        out[i] = cells[i * n + 7] && rng.bernoulli(0.8) ? fpa::Outcome::Fail : fpa::Outcome::Pass;
    }
    out[0] = fpa::Outcome::Fail;
    out[1] = fpa::Outcome::Pass;
    const Dataset ds{CoverageMatrix(runs, preds, cells), out};
    const auto t0 = Clock::now();
    const auto f = fit(ds, std::vector<double>(n, 1.0), EnetConfig{});
    const double t = seconds_since(t0);
    const double tol = EnetConfig{}.tol;
    return {f.diagnostics.converged && f.diagnostics.kkt_violation <= 10 * tol && t < 5.0,
            fmt("converged %s, KKT %.2e, %.2f s", f.diagnostics.converged ? "yes" : "no", f.diagnostics.kkt_violation,
                t)};
}

int cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"fpa"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return fpa::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict pipeline_determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fpa_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    if (cli({"--out", (dir / "inst").string(), "--seed", "10", "synth"}) != 0) return {false, "synth failed"};
    write_file(dir / "pipeline.json",
               R"({"inputs": {"coverage": "inst/coverage.csv", "outcomes": "inst/outcomes.csv",
                   "predicate_map": "inst/predicate_map.csv", "pdg": "inst/pdg.json",
                   "ground_truth": "inst/ground_truth.json", "metrics": "inst/metrics.csv",
                   "training_metrics": "inst/training_metrics.csv", "training_labels": "inst/training_labels.csv"},
                   "seed": 7})");
    for (const char* run : {"a", "b"}) {
        if (cli({"--config", (dir / "pipeline.json").string(), "--out", (dir / run).string(), "pipeline"}) != 0)
            return {false, "pipeline run failed"};
    }
    std::size_t same = 0, files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        ++files;
        const fs::path other = dir / "b" / e.path().filename();
        same += fs::exists(other) && read_file(e.path()) == read_file(other);
    }
    fs::remove_all(dir);
    return {files > 0 && same == files, fmt("%zu/%zu report files byte-identical", same, files)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::vector<int> only;
    Settings settings;
    bool no_limit = false;
    app.add_option("--criterion", only, "run only these criteria")->check(CLI::Range(1, 10));
    app.add_flag("--no-time-limit", no_limit, "run the experiments to completion regardless of the budget");
    app.add_option("--repetitions", settings.repetitions, "experiment seeds")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);
    settings.time_limit = !no_limit;

    const std::vector<std::function<Verdict()>> criteria{
        solver_matches_oracle,
        closed_forms,
        grouping_effect,
        unpenalized_predicate,
        evaluation_exact,
        [&] { return cleaning_benefit(settings); },
        [&] { return fault_proneness_benefit(settings); },
        metrics_and_pca,
        wide_fit,
        pipeline_determinism,
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        Verdict r;
        try {
            r = criteria[k]();
        } catch (const std::exception& e) {
            r = {false, std::string("threw: ") + e.what()};
        }
        failed += r.pass ? 0 : 1;
        std::cout << "Criterion " << id << ": " << (r.pass ? "PASS" : "FAIL") << " " << r.detail << std::endl;
    }
    return failed;
}
