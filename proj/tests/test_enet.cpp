#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "fpa/enet.hpp"
#include "fpa/error.hpp"
#include "fpa/random.hpp"
#include "oracles/enet_oracle.hpp"

using namespace fpa;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no fpa::Error thrown";
    return ErrorCode::InvalidArgument;
}

std::vector<std::string> ids(const char* prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
    return out;
}

Dataset dataset(std::size_t m, std::size_t n, const std::vector<std::uint8_t>& cells, const std::vector<double>& y) {
    std::vector<Outcome> out;
    for (double v : y) out.push_back(v == 1.0 ? Outcome::Fail : Outcome::Pass);
    return Dataset{CoverageMatrix(ids("r", m), ids("p", n), cells), out};
}

struct Instance {
    std::size_t m, n;
    std::vector<double> raw;  // row-major
    std::vector<double> y;
};

// Binary predictors with a planted signal on the first column.
Instance random_instance(Rng& rng, std::size_t m, std::size_t n) {
    Instance in{m, n, std::vector<double>(m * n), std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) in.raw[i * n + j] = rng.bernoulli(0.4) ? 1.0 : 0.0;
        in.y[i] = (in.raw[i * n] == 1.0 && rng.bernoulli(0.8)) || rng.bernoulli(0.15) ? 1.0 : 0.0;
    }
    return in;
}

Design design_of(const Instance& in) {
    DenseMatrix x{in.m, in.n, in.raw};
    return standardize(x, in.y);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

EnetConfig small_grid() {
    EnetConfig c;
    c.alpha_grid = {0.5, 1.0};
    c.n_lambda = 30;
    return c;
}

}  // namespace

TEST(Standardize, WorkedColumn) {
    DenseMatrix x{4, 2, {0, 1, 0, 1, 1, 1, 1, 1}};
    const std::vector<double> y{0, 0, 1, 1};
    const auto d = standardize(x, y);
    EXPECT_DOUBLE_EQ(d.mean[0], 0.5);
    EXPECT_DOUBLE_EQ(d.scale[0], 0.5);
    const auto col = d.column(0);
    EXPECT_EQ(std::vector<double>(col.begin(), col.end()), (std::vector<double>{-1, -1, 1, 1}));
    EXPECT_EQ(d.active[1], 0);
    EXPECT_EQ(d.y, (std::vector<double>{-0.5, -0.5, 0.5, 0.5}));

    // the second column is constant: it never enters the fit
    const auto r = coordinate_descent(d, 0.0, 1.0, std::vector<double>{1, 1});
    EXPECT_EQ(r.beta[1], 0.0);
}

TEST(Standardize, IdempotentOnStandardizedData) {
    Rng rng(3);
    const auto in = random_instance(rng, 30, 4);
    const auto d = design_of(in);
    DenseMatrix x{d.rows, d.cols, std::vector<double>(d.rows * d.cols)};
    for (std::size_t i = 0; i < d.rows; ++i)
        for (std::size_t j = 0; j < d.cols; ++j) x(i, j) = d.x[j * d.rows + i];
    const auto again = standardize(x, d.y);
    EXPECT_LT(max_abs_diff(again.x, d.x), 1e-12);
    EXPECT_LT(max_abs_diff(again.y, d.y), 1e-15);
}

TEST(CoordinateDescent, SingleFeatureLasso) {
    DenseMatrix x{4, 1, {0, 0, 1, 1}};
    const std::vector<double> y{0, 0, 1, 1};
    const auto d = standardize(x, y);
    const std::vector<double> v{1.0};
    for (double lambda : {0.1, 0.6}) {
        const auto r = coordinate_descent(d, lambda, 1.0, v);
        const double closed = std::max(0.5 - lambda, 0.0);
        auto f = [&](double b) {
            double rss = 0;
            for (std::size_t i = 0; i < 4; ++i) rss += std::pow(d.y[i] - b * d.x[i], 2);
            return rss / 8.0 + lambda * std::abs(b);
        };
        const double brute = oracle::argmin_1d(f, -2.0, 2.0);
        EXPECT_NEAR(brute, closed, 1e-7);  // golden section resolves to ~sqrt(eps)
        EXPECT_EQ(r.beta[0], closed);
    }
}

TEST(CoordinateDescent, ZeroLambdaIsLeastSquares) {
    Rng rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        const auto in = random_instance(rng, 40, 5);
        const auto p = oracle::standardize(in.raw, in.m, in.n, in.y);
        // normal equations solved independently
        std::vector<double> a(25), b(5), ls;
        for (std::size_t j = 0; j < 5; ++j) {
            for (std::size_t k = 0; k < 5; ++k) {
                double s = 0;
                for (std::size_t i = 0; i < in.m; ++i) s += p.x[j * in.m + i] * p.x[k * in.m + i];
                a[j * 5 + k] = s;
            }
            double s = 0;
            for (std::size_t i = 0; i < in.m; ++i) s += p.x[j * in.m + i] * p.y[i];
            b[j] = s;
        }
        ASSERT_TRUE(oracle::solve(a, b, 5, ls));
        for (double alpha : {0.0, 0.5, 1.0}) {
            const auto r = coordinate_descent(design_of(in), 0.0, alpha, std::vector<double>(5, 1.0));
            EXPECT_LT(max_abs_diff(r.beta, ls), 1e-6) << "alpha " << alpha;
        }
    }
}

TEST(CoordinateDescent, MatchesBruteForceOracle) {
    Rng rng(2024);
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t n = 2 + rng.index(5);
        const std::size_t m = 20 + rng.index(31);
        const auto in = random_instance(rng, m, n);
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform();
        const auto d = design_of(in);
        const auto p = oracle::standardize(in.raw, m, n, in.y);
        for (double alpha : {0.0, 0.5, 1.0}) {
            const auto path = lambda_path(d, alpha, v, 5, 1e-2);
            for (double lambda : path.lambdas) {
                const auto r = coordinate_descent(d, lambda, alpha, v);
                const auto ref = oracle::minimize(p, lambda, alpha, v);
                EXPECT_LT(max_abs_diff(r.beta, ref), 1e-6) << "rep " << rep << " alpha " << alpha;
                EXPECT_LE(oracle::kkt(p, r.beta, lambda, alpha, v), 1e-6);
            }
        }
    }
}

TEST(CoordinateDescent, ObjectiveNeverIncreasesAcrossSweeps) {
    Rng rng(8);
    const auto in = random_instance(rng, 50, 8);
    const auto d = design_of(in);
    const std::vector<double> v(8, 1.0);
    for (bool solve : {false, true}) {
        double prev = enet_objective(d, std::vector<double>(8, 0.0), 0.02, 0.5, v);
        for (std::size_t it = 1; it <= 30; ++it) {
            const auto r = coordinate_descent(d, 0.02, 0.5, v, {}, CdOptions{1e-12, it, solve});
            const double obj = enet_objective(d, r.beta, 0.02, 0.5, v);
            EXPECT_LE(obj, prev + 1e-15) << "sweeps " << it;
            prev = obj;
        }
    }
}

TEST(CoordinateDescent, SupportSolveReachesTheSameFixedPoint) {
    Rng rng(31);
    for (int rep = 0; rep < 6; ++rep) {
        const auto in = random_instance(rng, 60, 40);
        const auto d = design_of(in);
        std::vector<double> v(40);
        for (auto& x : v) x = 0.2 + rng.uniform();
        for (double alpha : {0.05, 0.5, 1.0}) {
            const auto path = lambda_path(d, alpha, v, 20, 1e-3);
            std::vector<double> w1, w2;
            std::size_t solves = 0;
            for (double lambda : path.lambdas) {
                const auto plain = coordinate_descent(d, lambda, alpha, v, w1, CdOptions{1e-10, 1000000, false});
                const auto fast = coordinate_descent(d, lambda, alpha, v, w2, CdOptions{1e-10, 1000000, true});
                EXPECT_TRUE(plain.converged);
                EXPECT_TRUE(fast.converged);
                EXPECT_EQ(plain.support_solves, 0u);
                EXPECT_LT(max_abs_diff(plain.beta, fast.beta), 1e-7);
                solves += fast.support_solves;
                w1 = plain.beta;
                w2 = fast.beta;
            }
            EXPECT_GT(solves, 0u);
        }
    }
}

TEST(CoordinateDescent, WideSupportSolveMatchesPlainDescent) {
    // supports far larger than the row count go through the dual system
    Rng rng(32);
    const auto in = random_instance(rng, 20, 120);
    const auto d = design_of(in);
    std::vector<double> v(120);
    for (auto& x : v) x = 0.2 + rng.uniform();
    for (double alpha : {0.0, 0.001, 0.2}) {
        const auto path = lambda_path(d, alpha, v, 30, 1e-3);
        std::vector<double> w1, w2;
        std::size_t wide = 0;
        for (double lambda : path.lambdas) {
            const auto plain = coordinate_descent(d, lambda, alpha, v, w1, CdOptions{1e-11, 10000000, false});
            const auto fast = coordinate_descent(d, lambda, alpha, v, w2, CdOptions{1e-11, 10000000, true});
            ASSERT_TRUE(plain.converged && fast.converged);
            EXPECT_LT(max_abs_diff(plain.beta, fast.beta), 1e-7) << "alpha " << alpha << " lambda " << lambda;
            EXPECT_LE(kkt_violation(d, fast.beta, lambda, alpha, v), 1e-9);
            wide += std::count_if(fast.beta.begin(), fast.beta.end(), [](double b) { return b != 0.0; }) > 20;
            w1 = plain.beta;
            w2 = fast.beta;
        }
        if (alpha == 0.0) EXPECT_GT(wide, 0u);
    }
}

TEST(CoordinateDescent, KktHoldsOnPaths) {
    Rng rng(44);
    const auto in = random_instance(rng, 80, 30);
    const auto d = design_of(in);
    const std::vector<double> v(30, 1.0);
    for (double alpha : {0.0, 0.3, 1.0}) {
        std::vector<double> warm;
        for (double lambda : lambda_path(d, alpha, v, 25, 1e-3).lambdas) {
            const auto r = coordinate_descent(d, lambda, alpha, v, warm);
            EXPECT_LE(kkt_violation(d, r.beta, lambda, alpha, v), 10 * 1e-7);
            warm = r.beta;
        }
    }
}

TEST(CoordinateDescent, UnpenalizedColumnSurvivesLargeLambda) {
    Rng rng(5);
    const auto in = random_instance(rng, 40, 6);
    const auto d = design_of(in);
    const auto p = oracle::standardize(in.raw, in.m, in.n, in.y);
    std::vector<double> v(6, 1.0);
    v[2] = 0.0;
    const double lambda = 50.0;
    const auto r = coordinate_descent(d, lambda, 0.5, v);
    const auto ref = oracle::minimize(p, lambda, 0.5, v);
    EXPECT_NE(r.beta[2], 0.0);
    EXPECT_LT(max_abs_diff(r.beta, ref), 1e-6);
    // the unpenalized solution alone: x_2'y / x_2'x_2 with unit-variance columns
    double xy = 0;
    for (std::size_t i = 0; i < in.m; ++i) xy += p.x[2 * in.m + i] * p.y[i];
    EXPECT_NEAR(r.beta[2], xy / static_cast<double>(in.m), 1e-6);
    for (std::size_t j = 0; j < 6; ++j)
        if (j != 2) EXPECT_EQ(r.beta[j], 0.0);
}

TEST(CoordinateDescent, DuplicateColumnsShareTheWeight) {
    Rng rng(12);
    for (int rep = 0; rep < 5; ++rep) {
        auto in = random_instance(rng, 50, 6);
        for (std::size_t i = 0; i < in.m; ++i) in.raw[i * in.n + 3] = in.raw[i * in.n + 0];
        const auto d = design_of(in);
        const std::vector<double> v(6, 1.0);
        for (double lambda : lambda_path(d, 0.5, v, 10, 1e-2).lambdas) {
            const auto r = coordinate_descent(d, lambda, 0.5, v);
            EXPECT_LE(std::abs(r.beta[0] - r.beta[3]), 1e-8);
        }
    }
}

TEST(LambdaPath, LambdaMaxZeroesEverythingAndScales) {
    Rng rng(21);
    for (int rep = 0; rep < 5; ++rep) {
        const auto in = random_instance(rng, 50, 10);
        const auto d = design_of(in);
        std::vector<double> v(10);
        for (auto& x : v) x = 0.3 + rng.uniform();
        for (double alpha : {0.0, 0.5, 1.0}) {
            const auto path = lambda_path(d, alpha, v, 1, 1e-3);
            ASSERT_EQ(path.lambdas.size(), 1u);
            EXPECT_EQ(path.lambdas[0], path.lambda_max);
            const auto r = coordinate_descent(d, path.lambda_max, alpha, v);
            // ridge never reaches exact zeros; its lambda_max stands in for alpha = 0.001
            if (alpha > 0)
                for (double b : r.beta) EXPECT_EQ(b, 0.0);

            std::vector<double> half(v);
            for (auto& x : half) x /= 2;
            EXPECT_NEAR(lambda_path(d, alpha, half, 1, 1e-3).lambda_max, 2 * path.lambda_max,
                        1e-12 * path.lambda_max);
        }
        const auto full = lambda_path(d, 1.0, v, 100, 1e-3);
        ASSERT_EQ(full.lambdas.size(), 100u);
        EXPECT_NEAR(full.lambdas.back(), full.lambda_max * 1e-3, 1e-12 * full.lambda_max);
        EXPECT_TRUE(std::is_sorted(full.lambdas.rbegin(), full.lambdas.rend()));
    }
}

TEST(LambdaPath, AllPenaltiesZero) {
    Rng rng(1);
    const auto d = design_of(random_instance(rng, 30, 3));
    const auto path = lambda_path(d, 0.5, std::vector<double>(3, 0.0), 10, 1e-3);
    EXPECT_TRUE(path.all_penalties_zero);
    EXPECT_EQ(path.lambdas, std::vector<double>{0.0});
}

TEST(LambdaPath, LassoSupportShrinksWithLambda) {
    Rng rng(77);
    const auto in = random_instance(rng, 60, 25);
    const auto d = design_of(in);
    const std::vector<double> v(25, 1.0);
    const auto path = lambda_path(d, 1.0, v, 40, 1e-2);
    std::vector<double> warm;
    std::size_t prev = 0;
    for (double lambda : path.lambdas) {
        const auto r = coordinate_descent(d, lambda, 1.0, v, warm);
        const auto support = static_cast<std::size_t>(std::count_if(r.beta.begin(), r.beta.end(), [](double b) { return b != 0.0; }));
        EXPECT_GE(support, prev);  // lambda descends, so support may only grow
        prev = support;
        warm = r.beta;
    }
}

TEST(LambdaPath, WarmStartedSolutionsMoveContinuously) {
    // max |b(l_k) - b(l_{k+1})| / |l_k - l_{k+1}| measured 1.02 (alpha 0.5) and
    // 1.98 (alpha 1) on this instance; twice the larger is the regression limit
    constexpr double kContinuityBound = 4.0;
    Rng rng(99);
    const auto in = random_instance(rng, 60, 12);
    const auto d = design_of(in);
    const std::vector<double> v(12, 1.0);
    for (double alpha : {0.5, 1.0}) {
        const auto path = lambda_path(d, alpha, v, 50, 1e-2);
        std::vector<double> prev;
        double worst = 0;
        for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
            const auto r = coordinate_descent(d, path.lambdas[k], alpha, v, prev);
            if (k > 0) worst = std::max(worst, max_abs_diff(r.beta, prev) / (path.lambdas[k - 1] - path.lambdas[k]));
            prev = r.beta;
        }
        EXPECT_LE(worst, kContinuityBound) << "alpha " << alpha;
    }
}

TEST(CoordinateDescent, RejectsBadArguments) {
    Rng rng(1);
    const auto d = design_of(random_instance(rng, 20, 3));
    const std::vector<double> v(3, 1.0);
    EXPECT_EQ(code_of([&] { coordinate_descent(d, -1.0, 0.5, v); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { coordinate_descent(d, 0.1, 1.5, v); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { coordinate_descent(d, 0.1, 0.5, std::vector<double>(2, 1.0)); }),
              ErrorCode::LengthMismatch);
    EXPECT_EQ(code_of([&] { coordinate_descent(d, 0.1, 0.5, std::vector<double>{1, -1, 1}); }),
              ErrorCode::InvalidArgument);
}

TEST(CoordinateDescent, ReportsNonConvergence) {
    Rng rng(6);
    const auto d = design_of(random_instance(rng, 40, 10));
    const auto r = coordinate_descent(d, 1e-4, 0.5, std::vector<double>(10, 1.0), {}, CdOptions{1e-14, 2, false});
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.sweeps, 2u);
}

TEST(Folds, StratifiedAndSeeded) {
    std::vector<Outcome> out(50, Outcome::Pass);
    for (std::size_t i = 0; i < 12; ++i) out[i * 4] = Outcome::Fail;
    const auto a = stratified_folds(out, 5, 3);
    EXPECT_EQ(a, stratified_folds(out, 5, 3));
    EXPECT_NE(a, stratified_folds(out, 5, 4));
    for (std::size_t f = 0; f < 5; ++f) {
        std::size_t fails = 0, total = 0;
        for (std::size_t i = 0; i < 50; ++i) {
            if (a[i] != f) continue;
            ++total;
            fails += out[i] == Outcome::Fail;
        }
        EXPECT_EQ(total, 10u);
        EXPECT_GE(fails, 2u);
        EXPECT_LE(fails, 3u);
    }
}

TEST(CrossValidate, PerfectPredictorIsSelected) {
    Rng rng(4);
    const std::size_t m = 60, n = 8;
    std::vector<std::uint8_t> cells(m * n);
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) cells[i * n + j] = rng.bernoulli(0.5);
        y[i] = cells[i * n + 5];
    }
    const auto ds = dataset(m, n, cells, y);
    const auto f = fit(ds, std::vector<double>(n, 1.0), EnetConfig{});
    EXPECT_EQ(f.cv.best_error, 0.0);
    std::size_t top = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (std::abs(f.coefficients[j]) > std::abs(f.coefficients[top])) top = j;
    EXPECT_EQ(top, 5u);
}

TEST(CrossValidate, PureNoiseFallsBackToTheMajorityClass) {
    double total_gap = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(mix_seed(500, seed));
        const std::size_t m = 60, n = 10;
        std::vector<std::uint8_t> cells(m * n);
        std::vector<double> y(m);
        for (auto& c : cells) c = rng.bernoulli(0.4);
        for (auto& v : y) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
        if (std::count(y.begin(), y.end(), 1.0) < 5) y[0] = y[1] = y[2] = y[3] = y[4] = 1.0;
        const auto ds = dataset(m, n, cells, y);
        EnetConfig config = small_grid();
        config.seed = seed;
        const auto cv = cross_validate(ds, std::vector<double>(n, 1.0), config);
        const double prior = std::count(y.begin(), y.end(), 1.0) / static_cast<double>(m);
        total_gap += std::abs(cv.best_error - std::min(prior, 1 - prior));
    }
    EXPECT_LE(total_gap / 20, 0.1);
}

TEST(CrossValidate, DeterministicAndThreadIndependent) {
    Rng rng(10);
    const auto in = random_instance(rng, 70, 20);
    std::vector<std::uint8_t> cells(in.raw.begin(), in.raw.end());
    const auto ds = dataset(in.m, in.n, cells, in.y);
    EnetConfig config = small_grid();
    config.seed = 17;
    const std::vector<double> v(20, 1.0);
    const auto a = cross_validate(ds, v, config, Execution::Parallel);
    const auto b = cross_validate(ds, v, config, Execution::Serial);
    EXPECT_EQ(a.mean_error, b.mean_error);
    EXPECT_EQ(a.best_alpha, b.best_alpha);
    EXPECT_EQ(a.best_lambda, b.best_lambda);
    EXPECT_EQ(a.best_lambda_index, cross_validate(ds, v, config).best_lambda_index);
    for (const auto& row : a.mean_error)
        for (double e : row) {
            EXPECT_GE(e, 0.0);
            EXPECT_LE(e, 1.0);
        }
}

TEST(CrossValidate, Errors) {
    const auto tiny = dataset(4, 1, {0, 1, 0, 1}, {0, 1, 0, 1});
    EXPECT_EQ(code_of([&] { cross_validate(tiny, std::vector<double>{1.0}, EnetConfig{}); }),
              ErrorCode::TooFewRunsForFolds);
    EnetConfig bad;
    bad.folds = 7;
    EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::ConfigError);
    bad = EnetConfig{};
    bad.alpha_grid = {1.2};
    EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::ConfigError);
}

TEST(Fit, UnstandardizedPredictionsMatch) {
    Rng rng(13);
    const auto in = random_instance(rng, 60, 15);
    std::vector<std::uint8_t> cells(in.raw.begin(), in.raw.end());
    const auto ds = dataset(in.m, in.n, cells, in.y);
    const auto f = fit(ds, std::vector<double>(15, 1.0), small_grid());
    for (std::size_t i = 0; i < in.m; ++i) {
        double orig = f.intercept, std_pred = f.response_mean;
        for (std::size_t j = 0; j < in.n; ++j) {
            orig += f.coefficients[j] * in.raw[i * in.n + j];
            if (f.coefficients_std[j] != 0.0)
                std_pred += f.coefficients_std[j] * (in.raw[i * in.n + j] - f.column_mean[j]) / f.column_scale[j];
        }
        EXPECT_NEAR(orig, std_pred, 1e-10);
        EXPECT_NEAR(f.residuals[i], in.y[i] - orig, 1e-12);
    }
    EXPECT_TRUE(f.diagnostics.converged);
    EXPECT_LE(f.diagnostics.kkt_violation, 1e-6);
}

TEST(Fit, JsonRoundTrip) {
    Rng rng(14);
    const auto in = random_instance(rng, 50, 6);
    std::vector<std::uint8_t> cells(in.raw.begin(), in.raw.end());
    const auto ds = dataset(in.m, in.n, cells, in.y);
    const auto f = fit(ds, std::vector<double>(6, 0.5), small_grid());
    const auto g = fit_from_json(Json::parse(to_json(f).dump()));
    EXPECT_EQ(g.predicate_ids, f.predicate_ids);
    EXPECT_EQ(g.coefficients, f.coefficients);
    EXPECT_EQ(g.intercept, f.intercept);
    EXPECT_EQ(g.lambda, f.lambda);
    EXPECT_EQ(g.alpha, f.alpha);
    EXPECT_EQ(g.penalty, f.penalty);
    EXPECT_EQ(g.cv.mean_error, f.cv.mean_error);
    EXPECT_EQ(to_json(g).dump(), to_json(f).dump());
}

TEST(Fit, WideProblem) {
    Rng rng(1000);
    const auto in = random_instance(rng, 30, 1000);
    std::vector<std::uint8_t> cells(in.raw.begin(), in.raw.end());
    const auto ds = dataset(in.m, in.n, cells, in.y);
    const auto f = fit(ds, std::vector<double>(1000, 1.0), EnetConfig{});
    EXPECT_TRUE(f.diagnostics.converged);
    EXPECT_LE(f.diagnostics.kkt_violation, 10 * 1e-7);
}
