#pragma once

// Static-metric fault-proneness model: standardize the eleven metrics, reduce
// them to domain metrics with PCA, fit a logistic model on the domain metrics,
// and turn per-predicate fault-proneness into elastic-net penalty factors.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpa/io.hpp"
#include "fpa/metrics.hpp"
#include "fpa/model.hpp"

namespace fpa {

inline constexpr double kEigenvalueThreshold = 0.9;
inline constexpr double kLogisticStabilizer = 1e-6;
inline constexpr double kLogisticGradientTol = 1e-8;
inline constexpr std::size_t kLogisticMaxIterations = 100;

// Column-wise z-scores with sample (n - 1) standard deviation. Constant
// columns are dropped and recorded as not kept.
struct MetricStandardizer {
    std::vector<std::size_t> kept;  // indices into the 11-metric vector
    std::vector<double> mean;       // per kept column
    std::vector<double> stddev;     // per kept column

    static MetricStandardizer fit(const Eigen::MatrixXd& raw);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& raw) const;
};

struct PcaResult {
    Eigen::MatrixXd loadings;          // metrics x retained, unit-norm columns
    std::vector<double> eigenvalues;   // retained, descending
    std::vector<double> spectrum;      // all eigenvalues, descending
};

// Eigendecomposition of the sample correlation matrix of already
// standardized columns; keeps every component with eigenvalue > 0.9. Each
// loading column is signed so that its largest-magnitude entry is positive.
PcaResult fit_pca(const Eigen::MatrixXd& standardized);

struct LogisticModel {
    std::vector<double> weights;
    double intercept = 0.0;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;

    double logit(const Eigen::VectorXd& x) const;
};

// Newton/IRLS maximisation of sum log-likelihood - 1e-6 * ||w||^2 (intercept
// unpenalised) until ||gradient|| <= 1e-8 or 100 iterations.
LogisticModel fit_logistic(const Eigen::MatrixXd& features, std::span<const int> labels);

// Gradient of the stabilised objective; exposed for optimality checks.
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& features, std::span<const int> labels,
                                  const LogisticModel& model);

struct PenaltyTheta {
    double low = 3.5;    // exponent used when FP <= 0.5, in [3, 4]
    double high = 0.25;  // multiplier used when FP > 0.5, in [0.2, 0.3]

    void validate() const;  // throws ThetaOutOfRange
};

struct FaultPronenessModel {
    MetricStandardizer standardizer;
    PcaResult pca;
    LogisticModel logistic;
    PenaltyTheta theta;
};

Eigen::MatrixXd derived_metric_matrix(std::span<const ModuleMetricsRecord> records);

FaultPronenessModel train_fault_proneness(std::span<const ModuleMetricsRecord> records,
                                          std::span<const int> faulty, PenaltyTheta theta = {});

// FP in (0, 1).
double predict_fp(const FaultPronenessModel& model, const ModuleMetricsRecord& record);

std::map<std::string, double> predict_module_fp(const FaultPronenessModel& model,
                                                std::span<const ModuleMetricsRecord> records);

struct PenaltyFactors {
    std::vector<double> values;
    PenaltyTheta theta;
};

// v = 1 - FP^low for FP <= 0.5, v = 1 - FP * high for FP > 0.5.
double penalty_factor(double fp, const PenaltyTheta& theta);
PenaltyFactors penalty_factors(std::span<const double> fp, PenaltyTheta theta = {});

// FP of each predicate's enclosing module, in matrix column order.
std::vector<double> predicate_fault_proneness(const std::vector<std::string>& predicate_ids,
                                              const PredicateMap& map,
                                              const std::map<std::string, double>& module_fp);

Json to_json(const FaultPronenessModel& model);
FaultPronenessModel fault_proneness_from_json(const Json& json);

// CSV `module_id,faulty` with faulty in {0,1}; returned in `records` order.
std::vector<int> load_fault_labels(const std::filesystem::path& path,
                                   std::span<const ModuleMetricsRecord> records);

}  // namespace fpa
