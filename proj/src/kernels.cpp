#include "fpa/kernels.hpp"

#include <cmath>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fpa::kernels {

namespace {

inline void nearest_one(const std::uint8_t* point, std::size_t cols, const double* centroids, std::size_t k,
                        std::size_t& label, double& distance) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        const double* centre = centroids + c * cols;
        double d = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double diff = static_cast<double>(point[j]) - centre[j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    label = best;
    distance = best_d;
}

struct ColumnStats {
    double ones = 0.0;
    double spread = 0.0;  // ones * (rows - ones); zero for a constant column
};

ColumnStats column_stats(const std::uint8_t* cells, std::size_t rows, std::size_t cols, std::size_t j) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < rows; ++i) ones += cells[i * cols + j];
    return {static_cast<double>(ones), static_cast<double>(ones) * static_cast<double>(rows - ones)};
}

// Integer-count form of Pearson's r for 0/1 columns: identical columns give
// exactly 1 because the denominator is the square root of a perfect square.
double correlation_entry(const std::uint8_t* cells, std::size_t rows, std::size_t cols, std::size_t a,
                         std::size_t b, const ColumnStats& sa, const ColumnStats& sb) {
    if (sa.spread == 0.0 || sb.spread == 0.0) return a == b ? 1.0 : 0.0;
    std::size_t both = 0;
    for (std::size_t i = 0; i < rows; ++i) both += cells[i * cols + a] & cells[i * cols + b];
    const double n = static_cast<double>(rows);
    const double num = n * static_cast<double>(both) - sa.ones * sb.ones;
    return num / std::sqrt(sa.spread * sb.spread);
}

}  // namespace

void nearest_centroid_serial(std::span<const std::uint8_t> points, std::size_t rows, std::size_t cols,
                             std::span<const double> centroids, std::size_t k,
                             std::span<std::size_t> label, std::span<double> distance) {
    for (std::size_t i = 0; i < rows; ++i)
        nearest_one(points.data() + i * cols, cols, centroids.data(), k, label[i], distance[i]);
}

void nearest_centroid_parallel(std::span<const std::uint8_t> points, std::size_t rows, std::size_t cols,
                               std::span<const double> centroids, std::size_t k,
                               std::span<std::size_t> label, std::span<double> distance) {
    const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        nearest_one(points.data() + r * cols, cols, centroids.data(), k, label[r], distance[r]);
    }
}

void column_correlation_serial(std::span<const std::uint8_t> cells, std::size_t rows, std::size_t cols,
                               std::span<const std::size_t> selected, std::span<double> out) {
    const std::size_t s = selected.size();
    std::vector<ColumnStats> stats(s);
    for (std::size_t a = 0; a < s; ++a) stats[a] = column_stats(cells.data(), rows, cols, selected[a]);
    for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = a; b < s; ++b) {
            const double r = correlation_entry(cells.data(), rows, cols, selected[a], selected[b], stats[a], stats[b]);
            out[a * s + b] = r;
            out[b * s + a] = r;
        }
    }
}

void column_correlation_parallel(std::span<const std::uint8_t> cells, std::size_t rows, std::size_t cols,
                                 std::span<const std::size_t> selected, std::span<double> out) {
    const std::size_t s = selected.size();
    std::vector<ColumnStats> stats(s);
    const auto n = static_cast<std::ptrdiff_t>(s);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t a = 0; a < n; ++a)
        stats[static_cast<std::size_t>(a)] = column_stats(cells.data(), rows, cols, selected[static_cast<std::size_t>(a)]);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t ai = 0; ai < n; ++ai) {
        const auto a = static_cast<std::size_t>(ai);
        for (std::size_t b = a; b < s; ++b) {
            const double r = correlation_entry(cells.data(), rows, cols, selected[a], selected[b], stats[a], stats[b]);
            out[a * s + b] = r;
            out[b * s + a] = r;
        }
    }
}

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace fpa::kernels
