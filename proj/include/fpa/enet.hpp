#pragma once

// Elastic net with per-coefficient penalty factors, fitted by cyclic
// coordinate descent on standardized predictors:
//
//   minimise (1/2m) ||y - X b||^2 + lambda * sum_j v_j [ (1-alpha)/2 b_j^2 + alpha |b_j| ]
//
// y is the 0/1 failure indicator centred by its mean; columns of X have mean
// zero and population standard deviation one. (lambda, alpha) are chosen by
// stratified k-fold cross-validation on misclassification error at the 0.5
// threshold.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fpa/io.hpp"
#include "fpa/kernels.hpp"
#include "fpa/model.hpp"

namespace fpa {

// {0, 0.001, 0.05, 0.10, ..., 0.95}
std::vector<double> default_alpha_grid();

struct EnetConfig {
    std::vector<double> alpha_grid = default_alpha_grid();
    std::size_t n_lambda = 100;
    double lambda_min_ratio = 1e-3;
    double tol = 1e-7;            // on max |delta b_j| per sweep
    std::size_t max_iter = 100000;  // coordinate sweeps per fit
    std::size_t folds = 0;        // 0 selects 10 when m >= 100, else 5
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
    std::size_t fold_count(std::size_t runs) const noexcept;
};

Json to_json(const EnetConfig& config);
EnetConfig enet_config_from_json(const Json& json, EnetConfig base = {});

// Row-major dense matrix of doubles.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double operator()(std::size_t i, std::size_t j) const noexcept { return values[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return values[i * cols + j]; }

    static DenseMatrix from_coverage(const CoverageMatrix& matrix);
};

inline constexpr std::size_t kGramColumnLimit = 2000;

// Standardized predictors (column-major) and centred response.
struct Design {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> scale;          // population standard deviation
    std::vector<std::uint8_t> active;   // 0 for constant columns (forced b_j = 0)
    std::vector<double> y;              // centred response
    double y_mean = 0.0;
    // X'X/m (column-major, cols x cols) and X'y/m; left empty above
    // kGramColumnLimit columns
    std::vector<double> gram;
    std::vector<double> xty;

    std::span<const double> column(std::size_t j) const noexcept { return {x.data() + j * rows, rows}; }
};

Design standardize(const DenseMatrix& x, std::span<const double> response);
Design standardize(const CoverageMatrix& matrix, std::span<const double> response);
// Standardizes only the listed rows (used for CV training folds).
Design standardize_rows(const DenseMatrix& x, std::span<const double> response, std::span<const std::size_t> rows);

struct CdOptions {
    double tol = 1e-7;
    std::size_t max_iter = 100000;
    // After a few sweeps over a settled support, try the exact solve on that
    // support and keep it when the signs agree. Off gives plain cyclic CD.
    bool support_solve = true;
};

struct CdResult {
    std::vector<double> beta;
    std::size_t sweeps = 0;
    bool converged = false;
    double max_change = 0.0;  // of the final sweep
    std::size_t support_solves = 0;
};

// Cyclic coordinate descent from `warm_start` (empty = zeros). Sweeps over
// the whole active set alternate with sweeps over the current nonzero set; the
// run ends on a whole-set sweep whose largest coefficient change is <= tol.
// The support solve only shortcuts the inner sweeps, so the stopping rule and
// the fixed point are those of plain coordinate descent.
CdResult coordinate_descent(const Design& design, double lambda, double alpha, std::span<const double> penalty,
                            std::span<const double> warm_start = {}, CdOptions options = {});

double enet_objective(const Design& design, std::span<const double> beta, double lambda, double alpha,
                      std::span<const double> penalty);

// Largest violation of the stationarity conditions, over active columns:
//   b_j = 0:  |x_j'r/m| <= lambda alpha v_j
//   b_j != 0: x_j'r/m = lambda v_j (alpha sign(b_j) + (1-alpha) b_j)
double kkt_violation(const Design& design, std::span<const double> beta, double lambda, double alpha,
                     std::span<const double> penalty);

struct LambdaPath {
    std::vector<double> lambdas;  // descending
    double lambda_max = 0.0;
    bool all_penalties_zero = false;  // path collapses to {0}
    std::vector<double> unpenalized_start;  // fit of the v_j = 0 columns alone
};

// lambda_max = max over penalized j of |x_j'r0/m| / (alpha v_j), where r0 is
// the residual after fitting the unpenalized columns (y when there are none);
// alpha = 0 uses 0.001 in this formula. Log-spaced down to lambda_max * ratio.
LambdaPath lambda_path(const Design& design, double alpha, std::span<const double> penalty, std::size_t n_lambda,
                       double lambda_min_ratio, CdOptions options = {});

struct CvSurface {
    std::vector<double> alphas;
    std::vector<std::vector<double>> lambdas;     // [alpha][lambda]
    std::vector<std::vector<double>> mean_error;  // [alpha][lambda]
    std::size_t folds = 0;
    std::uint64_t fold_seed = 0;  // seed actually used for the split
    std::size_t attempts = 1;
    std::size_t best_alpha_index = 0;
    std::size_t best_lambda_index = 0;
    double best_alpha = 0.0;
    double best_lambda = 0.0;
    double best_error = 0.0;
};

// Stratified fold index per run; retried with derived seeds until every
// training split holds both classes (at most 10 attempts).
std::vector<std::size_t> stratified_folds(std::span<const Outcome> outcomes, std::size_t folds, std::uint64_t seed);

CvSurface cross_validate(const Dataset& dataset, std::span<const double> penalty, const EnetConfig& config,
                         Execution exec = Execution::Parallel);

struct FitDiagnostics {
    std::size_t sweeps = 0;
    bool converged = true;
    double max_change = 0.0;
    double kkt_violation = 0.0;
};

struct FitResult {
    std::vector<std::string> predicate_ids;
    double intercept = 0.0;             // original units
    std::vector<double> coefficients;   // original units
    double lambda = 0.0;
    double alpha = 0.0;
    std::vector<double> penalty;
    CvSurface cv;
    std::vector<double> residuals;      // y - b0 - X b on the training data
    FitDiagnostics diagnostics;

    // standardized-space solution the above was recovered from
    std::vector<double> coefficients_std;
    std::vector<double> column_mean;
    std::vector<double> column_scale;
    double response_mean = 0.0;
};

// Cross-validate, refit on all runs at the chosen (lambda, alpha) along its
// warm-started path, and map coefficients back to 0/1 predicate units.
FitResult fit(const Dataset& dataset, std::span<const double> penalty, const EnetConfig& config,
              Execution exec = Execution::Parallel);

// Single fit at a fixed (lambda, alpha) without cross-validation.
FitResult fit_fixed(const Dataset& dataset, std::span<const double> penalty, double lambda, double alpha,
                    CdOptions options = {});

Json to_json(const FitResult& fit);
FitResult fit_from_json(const Json& json);

}  // namespace fpa
