#include "fpa/enet.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <Eigen/Dense>

#include "fpa/error.hpp"
#include "fpa/random.hpp"

namespace fpa {

namespace {

constexpr double kErrorTieTolerance = 1e-12;
constexpr std::size_t kMaxFoldAttempts = 10;
constexpr std::size_t kSweepsBeforeSolve = 3;

double dot(const double* a, const double* b, std::size_t n) noexcept {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

double soft_threshold(double z, double gamma) noexcept {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

std::vector<double> residual(const Design& d, std::span<const double> beta) {
    std::vector<double> r = d.y;
    for (std::size_t j = 0; j < d.cols; ++j) {
        if (beta[j] == 0.0) continue;
        const double* xj = d.x.data() + j * d.rows;
        for (std::size_t i = 0; i < d.rows; ++i) r[i] -= beta[j] * xj[i];
    }
    return r;
}

// One cyclic pass over `coords`; returns the largest |delta b_j|.
double sweep(const Design& d, std::vector<double>& beta, std::vector<double>& r, std::span<const std::size_t> coords,
             double lambda, double alpha, std::span<const double> penalty) {
    const double inv_m = 1.0 / static_cast<double>(d.rows);
    double max_change = 0.0;
    for (std::size_t j : coords) {
        const double* xj = d.x.data() + j * d.rows;
        const double old = beta[j];
        const double z = dot(xj, r.data(), d.rows) * inv_m + old;
        const double strength = lambda * penalty[j];
        const double updated = soft_threshold(z, strength * alpha) / (1.0 + strength * (1.0 - alpha));
        if (updated == old) continue;
        const double delta = updated - old;
        for (std::size_t i = 0; i < d.rows; ++i) r[i] -= delta * xj[i];
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
    }
    return max_change;
}

// The face system can go through its m x m dual when every diagonal ridge
// term is positive; worth it once the support outgrows the rows.
bool dual_solve_applies(const Design& d, double lambda, double alpha, std::span<const double> penalty,
                        std::span<const std::size_t> support) {
    if (support.size() <= d.rows || !(lambda > 0.0) || alpha >= 1.0) return false;
    return std::all_of(support.begin(), support.end(), [&](std::size_t j) { return penalty[j] > 0.0; });
}

// Active-set refinement over the current support A with signs s. The face
// minimiser solves
//   (X_A'X_A/m + lambda(1-alpha) V_A) b_A = X_A'y/m - lambda alpha V_A s.
// When some b_a changes sign, step towards b only until the first coefficient
// reaches zero, drop it and solve again. Every step lowers the objective.
// Returns false if a system is not positive definite; beta and r stay
// consistent either way.
bool refine_support(const Design& d, double lambda, double alpha, std::span<const double> penalty,
                    std::vector<std::size_t> support, std::vector<double>& beta, std::vector<double>& r) {
    const auto m = static_cast<Eigen::Index>(d.rows);
    const double inv_m = 1.0 / static_cast<double>(d.rows);
    const Eigen::Map<const Eigen::VectorXd> y(d.y.data(), m);
    Eigen::Map<Eigen::VectorXd> res(r.data(), m);
    while (!support.empty()) {
        const auto k = static_cast<Eigen::Index>(support.size());
        Eigen::MatrixXd xa(m, k);
        Eigen::VectorXd current(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            const std::size_t j = support[static_cast<std::size_t>(a)];
            xa.col(a) = Eigen::Map<const Eigen::VectorXd>(d.x.data() + j * d.rows, m);
            current(a) = beta[j];
        }
        Eigen::VectorXd rhs(k);
        Eigen::VectorXd diag(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            const std::size_t j = support[static_cast<std::size_t>(a)];
            rhs(a) = d.gram.empty() ? xa.col(a).dot(y) * inv_m : d.xty[j];
            rhs(a) -= lambda * alpha * penalty[j] * (current(a) > 0.0 ? 1.0 : -1.0);
            diag(a) = lambda * (1.0 - alpha) * penalty[j];
        }
        Eigen::VectorXd target;
        if (dual_solve_applies(d, lambda, alpha, penalty, support)) {
            // (D + X'X/m)^-1 = D^-1 - D^-1 X' (mI + X D^-1 X')^-1 X D^-1
            const Eigen::VectorXd dinv = diag.cwiseInverse();
            const Eigen::VectorXd dinv_rhs = rhs.cwiseProduct(dinv);
            const Eigen::MatrixXd half = xa * dinv.cwiseSqrt().asDiagonal();
            Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(m, m) * static_cast<double>(m);
            inner.selfadjointView<Eigen::Lower>().rankUpdate(half);
            const Eigen::LLT<Eigen::MatrixXd> llt(inner);
            if (llt.info() != Eigen::Success) return false;
            target = dinv_rhs - dinv.asDiagonal() * (xa.transpose() * llt.solve(xa * dinv_rhs));
        } else {
            Eigen::MatrixXd lhs(k, k);
            if (!d.gram.empty()) {
                for (Eigen::Index b = 0; b < k; ++b) {
                    const double* gcol = d.gram.data() + support[static_cast<std::size_t>(b)] * d.cols;
                    for (Eigen::Index a = b; a < k; ++a) lhs(a, b) = gcol[support[static_cast<std::size_t>(a)]];
                }
            } else {
                lhs.setZero();
                lhs.selfadjointView<Eigen::Lower>().rankUpdate(xa.transpose(), inv_m);
            }
            lhs.diagonal() += diag;
            const Eigen::LLT<Eigen::MatrixXd> llt(lhs);
            if (llt.info() != Eigen::Success) return false;
            target = llt.solve(rhs);
        }
        if (!target.allFinite()) return false;

        // fraction of the way to the target at which each sign-violating
        // coordinate reaches zero
        std::vector<double> reach(static_cast<std::size_t>(k), 2.0);
        double step = 1.0;
        for (Eigen::Index a = 0; a < k; ++a) {
            if (target(a) == 0.0 || (target(a) > 0.0) != (current(a) > 0.0)) {
                reach[static_cast<std::size_t>(a)] = current(a) / (current(a) - target(a));
                step = std::min(step, reach[static_cast<std::size_t>(a)]);
            }
        }
        Eigen::VectorXd next = current + step * (target - current);
        std::vector<std::size_t> kept;
        for (Eigen::Index a = 0; a < k; ++a) {
            const std::size_t j = support[static_cast<std::size_t>(a)];
            if (reach[static_cast<std::size_t>(a)] <= step) {
                next(a) = 0.0;
            } else {
                kept.push_back(j);
            }
            beta[j] = next(a);
        }
        res = y - xa * next;
        if (step == 1.0) return true;
        support = std::move(kept);
    }
    res = y;
    return true;
}

CdResult descend(const Design& d, double lambda, double alpha, std::span<const double> penalty,
                 std::vector<double> beta, std::span<const std::size_t> coords, const CdOptions& options) {
    std::vector<double> r = residual(d, beta);
    CdResult out;
    std::vector<std::size_t> nonzero;
    const double m = static_cast<double>(d.rows);
    while (out.sweeps < options.max_iter) {
        out.max_change = sweep(d, beta, r, coords, lambda, alpha, penalty);
        ++out.sweeps;
        if (out.max_change <= options.tol) {
            out.converged = true;
            break;
        }
        nonzero.clear();
        for (std::size_t j : coords) {
            if (beta[j] != 0.0) nonzero.push_back(j);
        }
        // solve once the inner sweeps have cost about as much as a solve
        const double k = static_cast<double>(nonzero.size());
        double solve_sweeps = d.gram.empty() ? k / 4.0 + k * k / (6.0 * m) : 0.5 + k * k / (12.0 * m);
        if (dual_solve_applies(d, lambda, alpha, penalty, nonzero)) solve_sweeps = std::min(solve_sweeps, m / 2.0 + m * m / (6.0 * k));
        double budget = std::max(static_cast<double>(kSweepsBeforeSolve), solve_sweeps);
        std::size_t inner = 0;
        while (out.sweeps < options.max_iter) {
            out.max_change = sweep(d, beta, r, nonzero, lambda, alpha, penalty);
            ++out.sweeps;
            if (out.max_change <= options.tol) break;
            if (options.support_solve && static_cast<double>(++inner) >= budget) {
                if (refine_support(d, lambda, alpha, penalty, nonzero, beta, r)) {
                    ++out.support_solves;
                    break;
                }
                budget *= 2.0;
            }
        }
    }
    out.beta = std::move(beta);
    return out;
}

std::vector<std::size_t> active_columns(const Design& d) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < d.cols; ++j) {
        if (d.active[j]) cols.push_back(j);
    }
    return cols;
}

void check_penalty(const Design& d, std::span<const double> penalty) {
    if (penalty.size() != d.cols)
        fail(ErrorCode::LengthMismatch, std::to_string(penalty.size()) + " penalty factors for " +
                                            std::to_string(d.cols) + " predicates");
    for (double v : penalty) {
        if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "penalty factors must be finite and >= 0");
    }
}

Design standardize_impl(const DenseMatrix& x, std::span<const double> response, std::span<const std::size_t> rows) {
    if (response.size() != x.rows) fail(ErrorCode::LengthMismatch, "response length differs from row count");
    Design d;
    d.rows = rows.size();
    d.cols = x.cols;
    d.x.assign(d.rows * d.cols, 0.0);
    d.mean.assign(d.cols, 0.0);
    d.scale.assign(d.cols, 1.0);
    d.active.assign(d.cols, 0);
    const double m = static_cast<double>(d.rows);

    for (std::size_t j = 0; j < d.cols; ++j) {
        double* col = d.x.data() + j * d.rows;
        for (std::size_t i = 0; i < d.rows; ++i) col[i] = x(rows[i], j);
        double sum = 0.0;
        for (std::size_t i = 0; i < d.rows; ++i) sum += col[i];
        const double mean = sum / m;
        double ss = 0.0;
        for (std::size_t i = 0; i < d.rows; ++i) ss += (col[i] - mean) * (col[i] - mean);
        const double sd = std::sqrt(ss / m);
        d.mean[j] = mean;
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            std::fill(col, col + d.rows, 0.0);
            continue;
        }
        d.scale[j] = sd;
        d.active[j] = 1;
        for (std::size_t i = 0; i < d.rows; ++i) col[i] = (col[i] - mean) / sd;
    }

    d.y.resize(d.rows);
    double ysum = 0.0;
    for (std::size_t i = 0; i < d.rows; ++i) ysum += response[rows[i]];
    d.y_mean = ysum / m;
    for (std::size_t i = 0; i < d.rows; ++i) d.y[i] = response[rows[i]] - d.y_mean;

    if (d.cols <= kGramColumnLimit && d.rows > 0) {
        const auto mr = static_cast<Eigen::Index>(d.rows);
        const auto nc = static_cast<Eigen::Index>(d.cols);
        const Eigen::Map<const Eigen::MatrixXd> xs(d.x.data(), mr, nc);
        d.gram.assign(d.cols * d.cols, 0.0);
        Eigen::Map<Eigen::MatrixXd> g(d.gram.data(), nc, nc);
        g.selfadjointView<Eigen::Lower>().rankUpdate(xs.transpose(), 1.0 / m);
        g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
        d.xty.assign(d.cols, 0.0);
        Eigen::Map<Eigen::VectorXd>(d.xty.data(), nc) =
            xs.transpose() * Eigen::Map<const Eigen::VectorXd>(d.y.data(), mr) / m;
    }
    return d;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    return rows;
}

// Original-unit coefficients: b_j = beta_j / scale_j, b0 = ybar - sum b_j mean_j.
void unstandardize(const Design& d, std::span<const double> beta, double& intercept, std::vector<double>& coef) {
    coef.assign(d.cols, 0.0);
    intercept = d.y_mean;
    for (std::size_t j = 0; j < d.cols; ++j) {
        if (!d.active[j] || beta[j] == 0.0) continue;
        coef[j] = beta[j] / d.scale[j];
        intercept -= coef[j] * d.mean[j];
    }
}

std::vector<double> alpha_path_values(double lambda_max, std::size_t n, double ratio) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lambda_max;
        return out;
    }
    const double log_ratio = std::log(ratio);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lambda_max * std::exp(log_ratio * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = lambda_max;
    return out;
}

struct FoldData {
    Design train;
    std::vector<std::size_t> test_rows;
};

// Misclassification counts per lambda on the held-out rows.
std::vector<double> fold_errors(const FoldData& fold, const DenseMatrix& x, std::span<const double> y,
                                std::span<const double> lambdas, double alpha, std::span<const double> penalty,
                                const CdOptions& options) {
    const Design& d = fold.train;
    std::vector<double> beta(d.cols, 0.0);
    std::vector<double> coef;
    double intercept = 0.0;
    std::vector<double> errors(lambdas.size(), 0.0);
    const auto coords = active_columns(d);
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
        auto res = descend(d, lambdas[l], alpha, penalty, std::move(beta), coords, options);
        beta = std::move(res.beta);
        unstandardize(d, beta, intercept, coef);
        std::size_t wrong = 0;
        for (std::size_t i : fold.test_rows) {
            double pred = intercept;
            for (std::size_t j = 0; j < d.cols; ++j) {
                if (coef[j] != 0.0) pred += coef[j] * x(i, j);
            }
            const bool predicted_fail = pred >= 0.5;
            if (predicted_fail != (y[i] == 1.0)) ++wrong;
        }
        errors[l] = static_cast<double>(wrong) / static_cast<double>(fold.test_rows.size());
    }
    return errors;
}

void require_both_classes(const Dataset& ds) {
    if (ds.failing() == 0) fail(ErrorCode::NoFailingRuns, "cross-validation needs failing runs");
    if (ds.passing() == 0) fail(ErrorCode::NoPassingRuns, "cross-validation needs passing runs");
}

Json nested(const std::vector<std::vector<double>>& v) {
    Json out = Json::array();
    for (const auto& row : v) out.push_back(row);
    return out;
}

}  // namespace

std::vector<double> default_alpha_grid() {
    std::vector<double> grid{0.0, 0.001};
    for (int k = 1; k <= 19; ++k) grid.push_back(0.05 * k);
    return grid;
}

void EnetConfig::validate() const {
    if (alpha_grid.empty()) fail(ErrorCode::ConfigError, "alpha grid is empty");
    for (double a : alpha_grid) {
        if (!(a >= 0.0 && a <= 1.0)) fail(ErrorCode::ConfigError, "alpha values must lie in [0, 1]");
    }
    if (n_lambda < 1) fail(ErrorCode::ConfigError, "n_lambda must be >= 1");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
        fail(ErrorCode::ConfigError, "lambda_min_ratio must lie in (0, 1)");
    if (!(tol > 0.0)) fail(ErrorCode::ConfigError, "tol must be > 0");
    if (max_iter < 1) fail(ErrorCode::ConfigError, "max_iter must be >= 1");
    if (folds != 0 && folds != 5 && folds != 10) fail(ErrorCode::ConfigError, "folds must be 5 or 10");
}

std::size_t EnetConfig::fold_count(std::size_t runs) const noexcept {
    if (folds != 0) return folds;
    return runs >= 100 ? 10 : 5;
}

Json to_json(const EnetConfig& c) {
    return Json{{"alpha_grid", c.alpha_grid}, {"n_lambda", c.n_lambda}, {"lambda_min_ratio", c.lambda_min_ratio},
                {"tol", c.tol},               {"max_iter", c.max_iter}, {"folds", c.folds},
                {"seed", c.seed}};
}

EnetConfig enet_config_from_json(const Json& j, EnetConfig c) {
    try {
        if (j.contains("alpha_grid")) c.alpha_grid = j["alpha_grid"].get<std::vector<double>>();
        if (j.contains("n_lambda")) c.n_lambda = j["n_lambda"].get<std::size_t>();
        if (j.contains("lambda_min_ratio")) c.lambda_min_ratio = j["lambda_min_ratio"].get<double>();
        if (j.contains("tol")) c.tol = j["tol"].get<double>();
        if (j.contains("max_iter")) c.max_iter = j["max_iter"].get<std::size_t>();
        if (j.contains("folds")) c.folds = j["folds"].get<std::size_t>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("enet config: ") + e.what());
    }
    c.validate();
    return c;
}

DenseMatrix DenseMatrix::from_coverage(const CoverageMatrix& matrix) {
    DenseMatrix m{matrix.runs(), matrix.predicates(), {}};
    m.values.assign(matrix.cells().begin(), matrix.cells().end());
    return m;
}

Design standardize(const DenseMatrix& x, std::span<const double> response) {
    const auto rows = all_rows(x.rows);
    return standardize_impl(x, response, rows);
}

Design standardize(const CoverageMatrix& matrix, std::span<const double> response) {
    return standardize(DenseMatrix::from_coverage(matrix), response);
}

Design standardize_rows(const DenseMatrix& x, std::span<const double> response, std::span<const std::size_t> rows) {
    return standardize_impl(x, response, rows);
}

CdResult coordinate_descent(const Design& design, double lambda, double alpha, std::span<const double> penalty,
                            std::span<const double> warm_start, CdOptions options) {
    check_penalty(design, penalty);
    if (!(lambda >= 0.0)) fail(ErrorCode::InvalidArgument, "lambda must be >= 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
    std::vector<double> beta(design.cols, 0.0);
    if (!warm_start.empty()) {
        if (warm_start.size() != design.cols) fail(ErrorCode::LengthMismatch, "warm start has the wrong length");
        std::copy(warm_start.begin(), warm_start.end(), beta.begin());
        for (std::size_t j = 0; j < design.cols; ++j) {
            if (!design.active[j]) beta[j] = 0.0;
        }
    }
    const auto coords = active_columns(design);
    return descend(design, lambda, alpha, penalty, std::move(beta), coords, options);
}

double enet_objective(const Design& d, std::span<const double> beta, double lambda, double alpha,
                      std::span<const double> penalty) {
    const auto r = residual(d, beta);
    double loss = dot(r.data(), r.data(), r.size()) / (2.0 * static_cast<double>(d.rows));
    double pen = 0.0;
    for (std::size_t j = 0; j < d.cols; ++j)
        pen += penalty[j] * ((1.0 - alpha) * 0.5 * beta[j] * beta[j] + alpha * std::abs(beta[j]));
    return loss + lambda * pen;
}

double kkt_violation(const Design& d, std::span<const double> beta, double lambda, double alpha,
                     std::span<const double> penalty) {
    const auto r = residual(d, beta);
    const double inv_m = 1.0 / static_cast<double>(d.rows);
    double worst = 0.0;
    for (std::size_t j = 0; j < d.cols; ++j) {
        if (!d.active[j]) continue;
        const double g = dot(d.x.data() + j * d.rows, r.data(), d.rows) * inv_m;
        double v = 0.0;
        if (beta[j] == 0.0) {
            v = std::max(0.0, std::abs(g) - lambda * alpha * penalty[j]);
        } else {
            const double sign = beta[j] > 0.0 ? 1.0 : -1.0;
            v = std::abs(g - lambda * penalty[j] * (alpha * sign + (1.0 - alpha) * beta[j]));
        }
        worst = std::max(worst, v);
    }
    return worst;
}

LambdaPath lambda_path(const Design& d, double alpha, std::span<const double> penalty, std::size_t n_lambda,
                       double lambda_min_ratio, CdOptions options) {
    check_penalty(d, penalty);
    if (n_lambda < 1) fail(ErrorCode::InvalidArgument, "n_lambda must be >= 1");
    std::vector<std::size_t> penalized, free_cols;
    for (std::size_t j = 0; j < d.cols; ++j) {
        if (!d.active[j]) continue;
        (penalty[j] > 0.0 ? penalized : free_cols).push_back(j);
    }

    LambdaPath path;
    path.unpenalized_start.assign(d.cols, 0.0);
    if (!free_cols.empty()) {
        auto res = descend(d, 0.0, alpha, penalty, path.unpenalized_start, free_cols, options);
        path.unpenalized_start = std::move(res.beta);
    }
    if (penalized.empty()) {
        path.all_penalties_zero = true;
        path.lambdas = {0.0};
        return path;
    }

    const auto r0 = residual(d, path.unpenalized_start);
    const double effective_alpha = alpha > 0.0 ? alpha : 0.001;
    const double inv_m = 1.0 / static_cast<double>(d.rows);
    double lambda_max = 0.0;
    for (std::size_t j : penalized) {
        const double g = std::abs(dot(d.x.data() + j * d.rows, r0.data(), d.rows) * inv_m);
        lambda_max = std::max(lambda_max, g / (effective_alpha * penalty[j]));
    }
    // rounding guard so the largest gradient is strictly inside the threshold
    lambda_max *= 1.0 + 1e-10;
    path.lambda_max = lambda_max;
    path.lambdas = alpha_path_values(lambda_max, n_lambda, lambda_min_ratio);
    return path;
}

std::vector<std::size_t> stratified_folds(std::span<const Outcome> outcomes, std::size_t folds, std::uint64_t seed) {
    std::vector<std::size_t> fails, passes;
    for (std::size_t i = 0; i < outcomes.size(); ++i) (outcomes[i] == Outcome::Fail ? fails : passes).push_back(i);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(fails));
    rng.shuffle(std::span<std::size_t>(passes));
    std::vector<std::size_t> fold(outcomes.size(), 0);
    std::size_t slot = 0;
    for (auto i : fails) fold[i] = slot++ % folds;
    for (auto i : passes) fold[i] = slot++ % folds;
    return fold;
}

CvSurface cross_validate(const Dataset& ds, std::span<const double> penalty, const EnetConfig& config,
                         Execution exec) {
    config.validate();
    require_both_classes(ds);
    const std::size_t m = ds.runs();
    const std::size_t n_folds = config.fold_count(m);
    if (m < n_folds)
        fail(ErrorCode::TooFewRunsForFolds,
             std::to_string(m) + " runs cannot fill " + std::to_string(n_folds) + " folds");

    const DenseMatrix x = DenseMatrix::from_coverage(ds.matrix);
    const std::vector<double> y = ds.response();
    const Design full = standardize(x, y);
    check_penalty(full, penalty);

    CvSurface cv;
    cv.folds = n_folds;
    std::vector<std::size_t> fold_of;
    bool ok = false;
    for (std::size_t attempt = 0; attempt < kMaxFoldAttempts && !ok; ++attempt) {
        cv.fold_seed = attempt == 0 ? config.seed : mix_seed(config.seed, attempt);
        cv.attempts = attempt + 1;
        fold_of = stratified_folds(ds.outcomes, n_folds, cv.fold_seed);
        ok = true;
        for (std::size_t f = 0; f < n_folds && ok; ++f) {
            std::size_t fails = 0, total = 0;
            for (std::size_t i = 0; i < m; ++i) {
                if (fold_of[i] == f) continue;
                ++total;
                fails += ds.outcomes[i] == Outcome::Fail;
            }
            ok = fails > 0 && fails < total;
        }
    }
    if (!ok)
        fail(ErrorCode::SingleClassFold,
             "every fold split left a training set with a single outcome class after " +
                 std::to_string(kMaxFoldAttempts) + " attempts");

    std::vector<FoldData> fold_data(n_folds);
    for (std::size_t f = 0; f < n_folds; ++f) {
        std::vector<std::size_t> train;
        for (std::size_t i = 0; i < m; ++i) (fold_of[i] == f ? fold_data[f].test_rows : train).push_back(i);
        fold_data[f].train = standardize_rows(x, y, train);
    }

    const CdOptions options{config.tol, config.max_iter};
    const std::size_t n_alpha = config.alpha_grid.size();
    cv.alphas = config.alpha_grid;
    cv.lambdas.resize(n_alpha);
    for (std::size_t a = 0; a < n_alpha; ++a)
        cv.lambdas[a] = lambda_path(full, config.alpha_grid[a], penalty, config.n_lambda, config.lambda_min_ratio,
                                    options)
                            .lambdas;

    // one slot per (alpha, fold) cell; reduced below in fold order
    std::vector<std::vector<double>> cell(n_alpha * n_folds);
    auto run_cell = [&](std::size_t c) {
        const std::size_t a = c / n_folds;
        const std::size_t f = c % n_folds;
        cell[c] = fold_errors(fold_data[f], x, y, cv.lambdas[a], config.alpha_grid[a], penalty, options);
    };
    const std::size_t n_cells = cell.size();
    if (exec == Execution::Parallel) {
        std::exception_ptr error;
        const auto n = static_cast<std::ptrdiff_t>(n_cells);
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t c = 0; c < n; ++c) {
            try {
                run_cell(static_cast<std::size_t>(c));
            } catch (...) {
#pragma omp critical(fpa_cv_error)
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else {
        for (std::size_t c = 0; c < n_cells; ++c) run_cell(c);
    }

    cv.mean_error.assign(n_alpha, {});
    bool have_best = false;
    for (std::size_t a = 0; a < n_alpha; ++a) {
        const std::size_t n_l = cv.lambdas[a].size();
        cv.mean_error[a].assign(n_l, 0.0);
        for (std::size_t f = 0; f < n_folds; ++f) {
            const auto& errs = cell[a * n_folds + f];
            for (std::size_t l = 0; l < n_l; ++l) cv.mean_error[a][l] += errs[l];
        }
        for (std::size_t l = 0; l < n_l; ++l) {
            const double err = cv.mean_error[a][l] /= static_cast<double>(n_folds);
            const double lambda = cv.lambdas[a][l];
            // lower error wins; ties prefer larger lambda, then the earlier (smaller) alpha
            const bool better = !have_best || err < cv.best_error - kErrorTieTolerance ||
                                (err <= cv.best_error + kErrorTieTolerance && lambda > cv.best_lambda);
            if (better) {
                have_best = true;
                cv.best_error = err;
                cv.best_lambda = lambda;
                cv.best_alpha = config.alpha_grid[a];
                cv.best_alpha_index = a;
                cv.best_lambda_index = l;
            }
        }
    }
    return cv;
}

FitResult fit(const Dataset& ds, std::span<const double> penalty, const EnetConfig& config, Execution exec) {
    FitResult out;
    out.cv = cross_validate(ds, penalty, config, exec);

    const std::vector<double> y = ds.response();
    const Design d = standardize(ds.matrix, y);
    const CdOptions options{config.tol, config.max_iter};
    const auto path =
        lambda_path(d, out.cv.best_alpha, penalty, config.n_lambda, config.lambda_min_ratio, options);

    std::vector<double> beta = path.unpenalized_start;
    const auto coords = active_columns(d);
    out.diagnostics = {};
    for (std::size_t l = 0; l <= out.cv.best_lambda_index; ++l) {
        auto res = descend(d, path.lambdas[l], out.cv.best_alpha, penalty, std::move(beta), coords, options);
        beta = std::move(res.beta);
        out.diagnostics.sweeps += res.sweeps;
        out.diagnostics.converged = out.diagnostics.converged && res.converged;
        out.diagnostics.max_change = res.max_change;
    }
    out.lambda = path.lambdas[out.cv.best_lambda_index];
    out.alpha = out.cv.best_alpha;
    out.diagnostics.kkt_violation = kkt_violation(d, beta, out.lambda, out.alpha, penalty);

    out.predicate_ids = ds.matrix.predicate_ids();
    out.penalty.assign(penalty.begin(), penalty.end());
    out.coefficients_std = beta;
    out.column_mean = d.mean;
    out.column_scale = d.scale;
    out.response_mean = d.y_mean;
    unstandardize(d, beta, out.intercept, out.coefficients);

    out.residuals.resize(ds.runs());
    for (std::size_t i = 0; i < ds.runs(); ++i) {
        double pred = out.intercept;
        auto row = ds.matrix.row(i);
        for (std::size_t j = 0; j < d.cols; ++j) pred += out.coefficients[j] * row[j];
        out.residuals[i] = y[i] - pred;
    }
    return out;
}

FitResult fit_fixed(const Dataset& ds, std::span<const double> penalty, double lambda, double alpha,
                    CdOptions options) {
    const std::vector<double> y = ds.response();
    const Design d = standardize(ds.matrix, y);
    auto res = coordinate_descent(d, lambda, alpha, penalty, {}, options);

    FitResult out;
    out.predicate_ids = ds.matrix.predicate_ids();
    out.lambda = lambda;
    out.alpha = alpha;
    out.penalty.assign(penalty.begin(), penalty.end());
    out.diagnostics = {res.sweeps, res.converged, res.max_change, kkt_violation(d, res.beta, lambda, alpha, penalty)};
    out.coefficients_std = res.beta;
    out.column_mean = d.mean;
    out.column_scale = d.scale;
    out.response_mean = d.y_mean;
    unstandardize(d, res.beta, out.intercept, out.coefficients);
    out.residuals.resize(ds.runs());
    for (std::size_t i = 0; i < ds.runs(); ++i) {
        double pred = out.intercept;
        auto row = ds.matrix.row(i);
        for (std::size_t j = 0; j < d.cols; ++j) pred += out.coefficients[j] * row[j];
        out.residuals[i] = y[i] - pred;
    }
    return out;
}

Json to_json(const FitResult& f) {
    Json coefficients = Json::array();
    for (std::size_t j = 0; j < f.predicate_ids.size(); ++j)
        coefficients.push_back({{"predicate", f.predicate_ids[j]},
                                {"coefficient", f.coefficients[j]},
                                {"penalty_factor", f.penalty[j]}});
    return Json{{"intercept", f.intercept},
                {"lambda", f.lambda},
                {"alpha", f.alpha},
                {"coefficients", std::move(coefficients)},
                {"cv",
                 {{"folds", f.cv.folds},
                  {"fold_seed", f.cv.fold_seed},
                  {"attempts", f.cv.attempts},
                  {"best_error", f.cv.best_error},
                  {"best_alpha_index", f.cv.best_alpha_index},
                  {"best_lambda_index", f.cv.best_lambda_index},
                  {"alphas", f.cv.alphas},
                  {"lambdas", nested(f.cv.lambdas)},
                  {"mean_error", nested(f.cv.mean_error)}}},
                {"residuals", f.residuals},
                {"diagnostics",
                 {{"sweeps", f.diagnostics.sweeps},
                  {"converged", f.diagnostics.converged},
                  {"max_change", f.diagnostics.max_change},
                  {"kkt_violation", f.diagnostics.kkt_violation}}}};
}

FitResult fit_from_json(const Json& j) {
    try {
        FitResult f;
        f.intercept = j.at("intercept").get<double>();
        f.lambda = j.at("lambda").get<double>();
        f.alpha = j.at("alpha").get<double>();
        for (const auto& c : j.at("coefficients")) {
            f.predicate_ids.push_back(c.at("predicate").get<std::string>());
            f.coefficients.push_back(c.at("coefficient").get<double>());
            f.penalty.push_back(c.value("penalty_factor", 1.0));
        }
        if (j.contains("residuals")) f.residuals = j["residuals"].get<std::vector<double>>();
        if (j.contains("cv")) {
            const auto& cv = j["cv"];
            f.cv.folds = cv.value("folds", std::size_t{0});
            f.cv.fold_seed = cv.value("fold_seed", std::uint64_t{0});
            f.cv.attempts = cv.value("attempts", std::size_t{1});
            f.cv.best_error = cv.value("best_error", 0.0);
            f.cv.best_alpha_index = cv.value("best_alpha_index", std::size_t{0});
            f.cv.best_lambda_index = cv.value("best_lambda_index", std::size_t{0});
            f.cv.alphas = cv.value("alphas", std::vector<double>{});
            f.cv.lambdas = cv.value("lambdas", std::vector<std::vector<double>>{});
            f.cv.mean_error = cv.value("mean_error", std::vector<std::vector<double>>{});
            f.cv.best_alpha = f.alpha;
            f.cv.best_lambda = f.lambda;
        }
        if (j.contains("diagnostics")) {
            const auto& d = j["diagnostics"];
            f.diagnostics.sweeps = d.value("sweeps", std::size_t{0});
            f.diagnostics.converged = d.value("converged", true);
            f.diagnostics.max_change = d.value("max_change", 0.0);
            f.diagnostics.kkt_violation = d.value("kkt_violation", 0.0);
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::MalformedJson, std::string("fit result: ") + e.what());
    }
}

}  // namespace fpa
