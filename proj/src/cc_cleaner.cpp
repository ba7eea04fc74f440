#include "fpa/cc_cleaner.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "fpa/error.hpp"
#include "fpa/random.hpp"

namespace fpa {

namespace {

double squared_distance(std::span<const std::uint8_t> point, const double* centre) {
    double d = 0.0;
    for (std::size_t j = 0; j < point.size(); ++j) {
        const double diff = static_cast<double>(point[j]) - centre[j];
        d += diff * diff;
    }
    return d;
}

void copy_row(std::span<const std::uint8_t> point, double* centre) {
    std::transform(point.begin(), point.end(), centre, [](std::uint8_t c) { return static_cast<double>(c); });
}

std::vector<double> seed_plus_plus(const CoverageMatrix& matrix, std::size_t k, Rng& rng) {
    const std::size_t m = matrix.runs();
    const std::size_t n = matrix.predicates();
    std::vector<double> centroids(k * n, 0.0);
    std::vector<bool> chosen(m, false);

    std::size_t first = rng.index(m);
    chosen[first] = true;
    copy_row(matrix.row(first), centroids.data());

    std::vector<double> nearest(m);
    for (std::size_t i = 0; i < m; ++i) nearest[i] = squared_distance(matrix.row(i), centroids.data());

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : nearest) total += d;
        std::size_t pick = m;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cumulative = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (nearest[i] <= 0.0) continue;
                cumulative += nearest[i];
                pick = i;
                if (cumulative > target) break;
            }
        } else {
            // fewer distinct profiles than clusters
            for (std::size_t i = 0; i < m && pick == m; ++i) {
                if (!chosen[i]) pick = i;
            }
        }
        chosen[pick] = true;
        double* centre = centroids.data() + c * n;
        copy_row(matrix.row(pick), centre);
        for (std::size_t i = 0; i < m; ++i) nearest[i] = std::min(nearest[i], squared_distance(matrix.row(i), centre));
    }
    return centroids;
}

}  // namespace

std::size_t default_cluster_count(std::size_t runs) noexcept {
    const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(runs) / 2.0)));
    return std::max<std::size_t>(2, k);
}

ClusterAssignment cluster_runs(const CoverageMatrix& matrix, std::size_t k, std::uint64_t seed, Execution exec) {
    const std::size_t m = matrix.runs();
    const std::size_t n = matrix.predicates();
    if (k < 2) fail(ErrorCode::InvalidArgument, "cluster count must be at least 2");
    if (k > m)
        fail(ErrorCode::KTooLarge, "k = " + std::to_string(k) + " exceeds the " + std::to_string(m) + " runs");

    Rng rng(seed);
    std::vector<double> centroids = seed_plus_plus(matrix, k, rng);

    ClusterAssignment out;
    out.run_ids = matrix.run_ids();
    out.k = k;
    out.seed = seed;

    std::vector<std::size_t> label(m, 0), previous;
    std::vector<double> distance(m, 0.0);
    std::vector<std::size_t> sizes(k);

    for (std::size_t iter = 1; iter <= kMaxLloydIterations; ++iter) {
        kernels::nearest_centroid(exec, matrix.cells(), m, n, centroids, k, label, distance);

        std::fill(sizes.begin(), sizes.end(), 0);
        for (auto c : label) ++sizes[c];
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t far = m;
            for (std::size_t i = 0; i < m; ++i) {
                if (sizes[label[i]] < 2) continue;
                if (far == m || distance[i] > distance[far]) far = i;
            }
            --sizes[label[far]];
            label[far] = c;
            distance[far] = 0.0;
            sizes[c] = 1;
        }

        out.iterations = iter;
        if (label == previous) {
            out.converged = true;
            break;
        }
        previous = label;

        std::fill(centroids.begin(), centroids.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double* centre = centroids.data() + label[i] * n;
            auto row = matrix.row(i);
            for (std::size_t j = 0; j < n; ++j) centre[j] += row[j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            const double inv = 1.0 / static_cast<double>(sizes[c]);
            for (std::size_t j = 0; j < n; ++j) centroids[c * n + j] *= inv;
        }
    }
    out.cluster = std::move(label);
    return out;
}

std::vector<std::string> identify_coincidental(const ClusterAssignment& assignment, const OutcomeVector& outcomes) {
    if (assignment.cluster.size() != outcomes.size() || assignment.run_ids.size() != outcomes.size())
        fail(ErrorCode::LengthMismatch, std::to_string(assignment.cluster.size()) + " clustered runs vs " +
                                            std::to_string(outcomes.size()) + " outcomes");
    std::vector<Outcome> label(outcomes.size());
    for (std::size_t i = 0; i < assignment.run_ids.size(); ++i) {
        auto idx = outcomes.index_of(assignment.run_ids[i]);
        if (!idx) fail(ErrorCode::RunSetMismatch, "no outcome for run '" + assignment.run_ids[i] + "'");
        label[i] = outcomes[*idx];
    }

    std::vector<bool> has_failure(assignment.k, false);
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (label[i] == Outcome::Fail) has_failure[assignment.cluster[i]] = true;
    }
    std::vector<std::string> cc;
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (label[i] == Outcome::Pass && has_failure[assignment.cluster[i]]) cc.push_back(assignment.run_ids[i]);
    }
    return cc;
}

OutcomeVector relabel(const OutcomeVector& outcomes, std::span<const std::string> cc_runs) {
    std::vector<Outcome> labels = outcomes.labels();
    for (const auto& run : cc_runs) {
        auto idx = outcomes.index_of(run);
        if (!idx) fail(ErrorCode::NotAPassingRun, "run '" + run + "' is unknown");
        if (outcomes[*idx] != Outcome::Pass) fail(ErrorCode::NotAPassingRun, "run '" + run + "' is already FAIL");
        labels[*idx] = Outcome::Fail;
    }
    return OutcomeVector(outcomes.run_ids(), std::move(labels));
}

Json to_json(const CleaningReport& report) {
    return Json{{"k", report.k},
                {"seed", report.seed},
                {"iterations", report.iterations},
                {"converged", report.converged},
                {"cc_runs", report.cc_runs}};
}

CleaningResult clean_outcomes(const CoverageMatrix& matrix, const OutcomeVector& outcomes, std::size_t k,
                              std::uint64_t seed, Execution exec) {
    if (k == 0) k = default_cluster_count(matrix.runs());
    auto assignment = cluster_runs(matrix, k, seed, exec);
    auto cc = identify_coincidental(assignment, outcomes);
    CleaningResult result{relabel(outcomes, cc), {}};
    result.report = {assignment.k, assignment.seed, assignment.iterations, assignment.converged, std::move(cc)};
    return result;
}

}  // namespace fpa
