#pragma once

// Coincidental-correctness cleaning: cluster runs by execution profile and
// relabel passing runs that share a cluster with a failing run.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fpa/io.hpp"
#include "fpa/kernels.hpp"
#include "fpa/model.hpp"

namespace fpa {

struct ClusterAssignment {
    std::vector<std::string> run_ids;  // row order of the clustered matrix
    std::vector<std::size_t> cluster;  // per run, in [0, k)
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    bool converged = false;
};

// max(2, round(sqrt(m / 2)))
std::size_t default_cluster_count(std::size_t runs) noexcept;

inline constexpr std::size_t kMaxLloydIterations = 300;

// k-means on the binary rows: k-means++ seeding, Lloyd iterations to an
// assignment fixpoint (at most 300). Empty clusters are refilled with the
// point farthest from its centroid.
ClusterAssignment cluster_runs(const CoverageMatrix& matrix, std::size_t k, std::uint64_t seed,
                               Execution exec = Execution::Parallel);

// Passing runs whose cluster contains at least one failing run, in run order.
std::vector<std::string> identify_coincidental(const ClusterAssignment& assignment,
                                               const OutcomeVector& outcomes);

// Copy of `outcomes` with every run in `cc_runs` flipped from PASS to FAIL.
OutcomeVector relabel(const OutcomeVector& outcomes, std::span<const std::string> cc_runs);

struct CleaningReport {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<std::string> cc_runs;
};

Json to_json(const CleaningReport& report);

struct CleaningResult {
    OutcomeVector outcomes;
    CleaningReport report;
};

// cluster -> identify -> relabel. k = 0 selects default_cluster_count().
CleaningResult clean_outcomes(const CoverageMatrix& matrix, const OutcomeVector& outcomes, std::size_t k,
                              std::uint64_t seed, Execution exec = Execution::Parallel);

}  // namespace fpa
