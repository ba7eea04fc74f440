#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// version; both write every output slot from exactly one iteration, so the
// results are bitwise identical regardless of thread count.

#include <cstddef>
#include <cstdint>
#include <span>

namespace fpa {

enum class Execution { Serial, Parallel };

namespace kernels {

// For each of `rows` binary rows (row-major, `cols` wide) find the nearest of
// `k` centroids (row-major doubles) by squared Euclidean distance. Ties go to
// the lower centroid index.
void nearest_centroid_serial(std::span<const std::uint8_t> points, std::size_t rows, std::size_t cols,
                             std::span<const double> centroids, std::size_t k,
                             std::span<std::size_t> label, std::span<double> distance);
void nearest_centroid_parallel(std::span<const std::uint8_t> points, std::size_t rows, std::size_t cols,
                               std::span<const double> centroids, std::size_t k,
                               std::span<std::size_t> label, std::span<double> distance);

inline void nearest_centroid(Execution exec, std::span<const std::uint8_t> points, std::size_t rows,
                             std::size_t cols, std::span<const double> centroids, std::size_t k,
                             std::span<std::size_t> label, std::span<double> distance) {
    if (exec == Execution::Parallel)
        nearest_centroid_parallel(points, rows, cols, centroids, k, label, distance);
    else
        nearest_centroid_serial(points, rows, cols, centroids, k, label, distance);
}

// Pearson correlation between every pair of the selected columns of a binary
// row-major matrix. Output is a dense `selected.size()`^2 symmetric matrix; a
// constant column correlates 0 with everything except itself (1).
void column_correlation_serial(std::span<const std::uint8_t> cells, std::size_t rows, std::size_t cols,
                               std::span<const std::size_t> selected, std::span<double> out);
void column_correlation_parallel(std::span<const std::uint8_t> cells, std::size_t rows, std::size_t cols,
                                 std::span<const std::size_t> selected, std::span<double> out);

inline void column_correlation(Execution exec, std::span<const std::uint8_t> cells, std::size_t rows,
                               std::size_t cols, std::span<const std::size_t> selected,
                               std::span<double> out) {
    if (exec == Execution::Parallel)
        column_correlation_parallel(cells, rows, cols, selected, out);
    else
        column_correlation_serial(cells, rows, cols, selected, out);
}

// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads() noexcept;

}  // namespace kernels
}  // namespace fpa
