#include "fpa/fault_proneness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "fpa/error.hpp"

namespace fpa {

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd a(x.rows(), x.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
    return a;
}

double objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
    const Eigen::VectorXd eta = a * theta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
    return ll - kLogisticStabilizer * theta.tail(theta.size() - 1).squaredNorm();
}

Eigen::VectorXd gradient(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
    const Eigen::VectorXd eta = a * theta;
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = y[i] - sigmoid(eta[i]);
    Eigen::VectorXd g = a.transpose() * resid;
    g.tail(g.size() - 1) -= 2.0 * kLogisticStabilizer * theta.tail(theta.size() - 1);
    return g;
}

Eigen::VectorXd label_vector(std::span<const int> labels) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<Eigen::Index>(i)] = labels[i] != 0 ? 1.0 : 0.0;
    return y;
}

Json matrix_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

MetricStandardizer MetricStandardizer::fit(const Eigen::MatrixXd& raw) {
    if (raw.rows() < 2) fail(ErrorCode::TooFewModules, "need at least 2 modules, got " + std::to_string(raw.rows()));
    MetricStandardizer s;
    const double n = static_cast<double>(raw.rows());
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        const double mean = raw.col(c).mean();
        const double var = (raw.col(c).array() - mean).square().sum() / (n - 1.0);
        const double sd = std::sqrt(var);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) continue;
        s.kept.push_back(static_cast<std::size_t>(c));
        s.mean.push_back(mean);
        s.stddev.push_back(sd);
    }
    return s;
}

Eigen::MatrixXd MetricStandardizer::apply(const Eigen::MatrixXd& raw) const {
    Eigen::MatrixXd z(raw.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k)
        z.col(static_cast<Eigen::Index>(k)) =
            (raw.col(static_cast<Eigen::Index>(kept[k])).array() - mean[k]) / stddev[k];
    return z;
}

Eigen::VectorXd MetricStandardizer::apply(const Eigen::VectorXd& raw) const {
    Eigen::VectorXd z(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k)
        z[static_cast<Eigen::Index>(k)] = (raw[static_cast<Eigen::Index>(kept[k])] - mean[k]) / stddev[k];
    return z;
}

PcaResult fit_pca(const Eigen::MatrixXd& z) {
    if (z.rows() < 2) fail(ErrorCode::TooFewModules, "PCA needs at least 2 modules");
    PcaResult out;
    const Eigen::Index p = z.cols();
    if (p == 0) {
        out.loadings.resize(0, 0);
        return out;
    }
    const Eigen::MatrixXd corr = (z.transpose() * z) / static_cast<double>(z.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success) fail(ErrorCode::InvalidArgument, "eigendecomposition failed");

    // Eigen returns ascending order
    std::vector<Eigen::Index> retained;
    for (Eigen::Index k = p; k-- > 0;) {
        const double lambda = eig.eigenvalues()[k];
        out.spectrum.push_back(lambda);
        if (lambda > kEigenvalueThreshold) retained.push_back(k);
    }
    out.loadings.resize(p, static_cast<Eigen::Index>(retained.size()));
    for (std::size_t c = 0; c < retained.size(); ++c) {
        Eigen::VectorXd v = eig.eigenvectors().col(retained[c]).normalized();
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0) v = -v;
        out.loadings.col(static_cast<Eigen::Index>(c)) = v;
        out.eigenvalues.push_back(eig.eigenvalues()[retained[c]]);
    }
    return out;
}

double LogisticModel::logit(const Eigen::VectorXd& x) const {
    double eta = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) eta += weights[j] * x[static_cast<Eigen::Index>(j)];
    return eta;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& x, std::span<const int> labels) {
    if (static_cast<std::size_t>(x.rows()) != labels.size())
        fail(ErrorCode::LengthMismatch, "feature rows and labels differ in length");
    const Eigen::VectorXd y = label_vector(labels);
    const double positives = y.sum();
    if (positives == 0.0 || positives == static_cast<double>(y.size()))
        fail(ErrorCode::SingleClassInput, "logistic fit needs both faulty and non-faulty modules");

    const Eigen::MatrixXd a = with_intercept(x);
    const Eigen::Index d = a.cols();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);

    LogisticModel model;
    Eigen::VectorXd g = gradient(a, y, theta);
    double f = objective(a, y, theta);
    std::size_t iter = 0;
    while (g.norm() > kLogisticGradientTol && iter < kLogisticMaxIterations) {
        ++iter;
        const Eigen::VectorXd eta = a * theta;
        Eigen::VectorXd w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double p = sigmoid(eta[i]);
            w[i] = p * (1.0 - p);
        }
        Eigen::MatrixXd h = a.transpose() * w.asDiagonal() * a;
        h.diagonal().tail(d - 1).array() += 2.0 * kLogisticStabilizer;
        const Eigen::VectorXd step = h.ldlt().solve(g);

        // backtracking keeps the objective monotone on nearly separable data
        double t = 1.0;
        Eigen::VectorXd next = theta + step;
        double f_next = objective(a, y, next);
        while (f_next < f && t > 1e-10) {
            t *= 0.5;
            next = theta + t * step;
            f_next = objective(a, y, next);
        }
        if (f_next < f) break;
        theta = next;
        f = f_next;
        g = gradient(a, y, theta);
    }

    model.intercept = theta[0];
    model.weights.assign(theta.data() + 1, theta.data() + d);
    model.iterations = iter;
    model.gradient_norm = g.norm();
    model.converged = model.gradient_norm <= kLogisticGradientTol;
    return model;
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, std::span<const int> labels,
                                  const LogisticModel& model) {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(model.weights.size() + 1));
    theta[0] = model.intercept;
    for (std::size_t j = 0; j < model.weights.size(); ++j) theta[static_cast<Eigen::Index>(j + 1)] = model.weights[j];
    return gradient(with_intercept(x), label_vector(labels), theta);
}

void PenaltyTheta::validate() const {
    if (!(low >= 3.0 && low <= 4.0))
        fail(ErrorCode::ThetaOutOfRange, "theta_low must lie in [3, 4], got " + std::to_string(low));
    if (!(high >= 0.2 && high <= 0.3))
        fail(ErrorCode::ThetaOutOfRange, "theta_high must lie in [0.2, 0.3], got " + std::to_string(high));
}

Eigen::MatrixXd derived_metric_matrix(std::span<const ModuleMetricsRecord> records) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(kMetricCount));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto values = derive_halstead(records[i]).values();
        for (std::size_t k = 0; k < kMetricCount; ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = values[k];
    }
    return m;
}

FaultPronenessModel train_fault_proneness(std::span<const ModuleMetricsRecord> records, std::span<const int> faulty,
                                          PenaltyTheta theta) {
    theta.validate();
    if (records.size() != faulty.size())
        fail(ErrorCode::LengthMismatch, "metrics records and fault labels differ in length");
    for (const auto& r : records) r.validate();

    FaultPronenessModel model;
    model.theta = theta;
    const Eigen::MatrixXd raw = derived_metric_matrix(records);
    model.standardizer = MetricStandardizer::fit(raw);
    const Eigen::MatrixXd z = model.standardizer.apply(raw);
    model.pca = fit_pca(z);
    const Eigen::MatrixXd domain = z * model.pca.loadings;
    model.logistic = fit_logistic(domain, faulty);
    return model;
}

double predict_fp(const FaultPronenessModel& model, const ModuleMetricsRecord& record) {
    const auto values = derive_halstead(record).values();
    Eigen::VectorXd raw(static_cast<Eigen::Index>(kMetricCount));
    for (std::size_t k = 0; k < kMetricCount; ++k) raw[static_cast<Eigen::Index>(k)] = values[k];
    const Eigen::VectorXd z = model.standardizer.apply(raw);
    const Eigen::VectorXd domain = model.pca.loadings.transpose() * z;
    const double fp = sigmoid(model.logistic.logit(domain));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    return std::clamp(fp, eps, 1.0 - eps);
}

std::map<std::string, double> predict_module_fp(const FaultPronenessModel& model,
                                                std::span<const ModuleMetricsRecord> records) {
    std::map<std::string, double> out;
    for (const auto& r : records) out[r.module_id] = predict_fp(model, r);
    return out;
}

double penalty_factor(double fp, const PenaltyTheta& theta) {
    if (!(fp >= 0.0 && fp <= 1.0)) fail(ErrorCode::FPOutOfRange, "fault-proneness must lie in [0, 1]");
    return fp <= 0.5 ? 1.0 - std::pow(fp, theta.low) : 1.0 - fp * theta.high;
}

PenaltyFactors penalty_factors(std::span<const double> fp, PenaltyTheta theta) {
    theta.validate();
    PenaltyFactors out{{}, theta};
    out.values.reserve(fp.size());
    for (double f : fp) out.values.push_back(penalty_factor(f, theta));
    return out;
}

std::vector<double> predicate_fault_proneness(const std::vector<std::string>& predicate_ids, const PredicateMap& map,
                                              const std::map<std::string, double>& module_fp) {
    std::vector<double> out;
    out.reserve(predicate_ids.size());
    for (const auto& id : predicate_ids) {
        const auto& loc = map.at(id);
        auto it = module_fp.find(loc.module_id);
        if (it == module_fp.end())
            fail(ErrorCode::UnknownModule, "predicate '" + id + "' lives in module '" + loc.module_id +
                                               "' which has no metrics");
        out.push_back(it->second);
    }
    return out;
}

Json to_json(const FaultPronenessModel& model) {
    Json kept = Json::array();
    for (auto k : model.standardizer.kept) kept.push_back(metric_names()[k]);
    return Json{{"metrics", kept},
                {"means", model.standardizer.mean},
                {"stddevs", model.standardizer.stddev},
                {"loadings", matrix_json(model.pca.loadings)},
                {"eigenvalues", model.pca.eigenvalues},
                {"spectrum", model.pca.spectrum},
                {"intercept", model.logistic.intercept},
                {"weights", model.logistic.weights},
                {"iterations", model.logistic.iterations},
                {"gradient_norm", model.logistic.gradient_norm},
                {"converged", model.logistic.converged},
                {"theta_low", model.theta.low},
                {"theta_high", model.theta.high}};
}

FaultPronenessModel fault_proneness_from_json(const Json& json) {
    try {
        FaultPronenessModel model;
        for (const auto& name : json.at("metrics")) {
            const auto& names = metric_names();
            auto it = std::find(names.begin(), names.end(), name.get<std::string>());
            if (it == names.end()) fail(ErrorCode::MalformedJson, "unknown metric " + name.dump());
            model.standardizer.kept.push_back(static_cast<std::size_t>(it - names.begin()));
        }
        model.standardizer.mean = json.at("means").get<std::vector<double>>();
        model.standardizer.stddev = json.at("stddevs").get<std::vector<double>>();
        const auto rows = json.at("loadings").get<std::vector<std::vector<double>>>();
        const std::size_t p = model.standardizer.kept.size();
        if (model.standardizer.mean.size() != p || model.standardizer.stddev.size() != p || rows.size() != p)
            fail(ErrorCode::MalformedJson, "model dimensions disagree");
        const std::size_t d = rows.empty() ? 0 : rows.front().size();
        model.pca.loadings.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(d));
        for (std::size_t r = 0; r < p; ++r) {
            if (rows[r].size() != d) fail(ErrorCode::MalformedJson, "ragged loading matrix");
            for (std::size_t c = 0; c < d; ++c)
                model.pca.loadings(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
        model.pca.eigenvalues = json.at("eigenvalues").get<std::vector<double>>();
        if (json.contains("spectrum")) model.pca.spectrum = json["spectrum"].get<std::vector<double>>();
        model.logistic.intercept = json.at("intercept").get<double>();
        model.logistic.weights = json.at("weights").get<std::vector<double>>();
        if (model.logistic.weights.size() != d) fail(ErrorCode::MalformedJson, "weight count != component count");
        model.logistic.iterations = json.value("iterations", std::size_t{0});
        model.logistic.gradient_norm = json.value("gradient_norm", 0.0);
        model.logistic.converged = json.value("converged", true);
        model.theta.low = json.value("theta_low", 3.5);
        model.theta.high = json.value("theta_high", 0.25);
        model.theta.validate();
        return model;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::MalformedJson, std::string("fault-proneness model: ") + e.what());
    }
}

std::vector<int> load_fault_labels(const std::filesystem::path& path, std::span<const ModuleMetricsRecord> records) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::unordered_map<std::string, int> by_module;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (csv::next_line(in, line, line_no)) {
        auto f = csv::split(line);
        if (f.size() != 2) fail(ErrorCode::RaggedRow, path.string() + ":" + std::to_string(line_no));
        if (first && f[0] == "module_id") {
            first = false;
            continue;
        }
        first = false;
        if (f[1] != "0" && f[1] != "1")
            fail(ErrorCode::NonNumericCell, path.string() + ":" + std::to_string(line_no) + ": faulty must be 0 or 1");
        by_module[f[0]] = f[1] == "1" ? 1 : 0;
    }
    std::vector<int> labels;
    labels.reserve(records.size());
    for (const auto& r : records) {
        auto it = by_module.find(r.module_id);
        if (it == by_module.end()) fail(ErrorCode::UnknownModule, "no fault label for module '" + r.module_id + "'");
        labels.push_back(it->second);
    }
    return labels;
}

}  // namespace fpa
