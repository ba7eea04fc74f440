#pragma once

// Reference elastic-net minimiser for tiny problems. Standardizes on its own,
// then enumerates every sign pattern s in {-1, 0, +1}^n: with the signs fixed
// the objective is a quadratic whose stationary point solves a small linear
// system. The objective is convex, so the candidate with the lowest objective
// over all patterns is the global minimiser.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

struct Problem {
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<double> x;  // column-major, standardized
    std::vector<double> y;  // centred
    std::vector<bool> constant;
};

// Columns given row-major as 0/1 or reals; population sd.
inline Problem standardize(const std::vector<double>& raw_row_major, std::size_t m, std::size_t n,
                           const std::vector<double>& response) {
    Problem p;
    p.m = m;
    p.n = n;
    p.x.assign(m * n, 0.0);
    p.constant.assign(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        long double mean = 0;
        for (std::size_t i = 0; i < m; ++i) mean += raw_row_major[i * n + j];
        mean /= m;
        long double var = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const long double d = raw_row_major[i * n + j] - mean;
            var += d * d;
        }
        const double sd = static_cast<double>(std::sqrt(var / m));
        if (sd < 1e-12) {
            p.constant[j] = true;
            continue;
        }
        for (std::size_t i = 0; i < m; ++i)
            p.x[j * m + i] = static_cast<double>((raw_row_major[i * n + j] - mean) / sd);
    }
    long double ym = 0;
    for (double v : response) ym += v;
    ym /= m;
    p.y.resize(m);
    for (std::size_t i = 0; i < m; ++i) p.y[i] = static_cast<double>(response[i] - ym);
    return p;
}

inline double objective(const Problem& p, const std::vector<double>& b, double lambda, double alpha,
                        const std::vector<double>& v) {
    long double rss = 0;
    for (std::size_t i = 0; i < p.m; ++i) {
        long double r = p.y[i];
        for (std::size_t j = 0; j < p.n; ++j) r -= static_cast<long double>(p.x[j * p.m + i]) * b[j];
        rss += r * r;
    }
    long double pen = 0;
    for (std::size_t j = 0; j < p.n; ++j)
        pen += v[j] * ((1.0 - alpha) * 0.5 * b[j] * b[j] + alpha * std::abs(b[j]));
    return static_cast<double>(rss / (2.0L * p.m) + lambda * pen);
}

// Gaussian elimination with partial pivoting; false when singular.
inline bool solve(std::vector<double> a, std::vector<double> b, std::size_t k, std::vector<double>& out) {
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < k; ++r)
            if (std::abs(a[r * k + c]) > std::abs(a[piv * k + c])) piv = r;
        if (std::abs(a[piv * k + c]) < 1e-13) return false;
        if (piv != c) {
            for (std::size_t t = 0; t < k; ++t) std::swap(a[c * k + t], a[piv * k + t]);
            std::swap(b[c], b[piv]);
        }
        for (std::size_t r = c + 1; r < k; ++r) {
            const double f = a[r * k + c] / a[c * k + c];
            for (std::size_t t = c; t < k; ++t) a[r * k + t] -= f * a[c * k + t];
            b[r] -= f * b[c];
        }
    }
    out.assign(k, 0.0);
    for (std::size_t c = k; c-- > 0;) {
        double s = b[c];
        for (std::size_t t = c + 1; t < k; ++t) s -= a[c * k + t] * out[t];
        out[c] = s / a[c * k + c];
    }
    return true;
}

inline std::vector<double> minimize(const Problem& p, double lambda, double alpha, const std::vector<double>& v) {
    const std::size_t n = p.n;
    const double m = static_cast<double>(p.m);
    std::vector<double> gram(n * n), c(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            double s = 0;
            for (std::size_t i = 0; i < p.m; ++i) s += p.x[a * p.m + i] * p.x[b * p.m + i];
            gram[a * n + b] = s / m;
        }
        double s = 0;
        for (std::size_t i = 0; i < p.m; ++i) s += p.x[a * p.m + i] * p.y[i];
        c[a] = s / m;
    }

    std::vector<double> best(n, 0.0);
    double best_obj = objective(p, best, lambda, alpha, v);
    std::size_t patterns = 1;
    for (std::size_t j = 0; j < n; ++j) patterns *= 3;
    std::vector<int> sign(n);
    std::vector<std::size_t> support;
    std::vector<double> sol, cand(n);
    for (std::size_t code = 0; code < patterns; ++code) {
        std::size_t rest = code;
        support.clear();
        bool skip = false;
        for (std::size_t j = 0; j < n; ++j) {
            sign[j] = static_cast<int>(rest % 3) - 1;
            rest /= 3;
            if (sign[j] != 0) {
                if (p.constant[j]) skip = true;
                support.push_back(j);
            }
        }
        if (skip || support.empty()) continue;
        const std::size_t k = support.size();
        std::vector<double> lhs(k * k), rhs(k);
        for (std::size_t a = 0; a < k; ++a) {
            const std::size_t ja = support[a];
            for (std::size_t b = 0; b < k; ++b) lhs[a * k + b] = gram[ja * n + support[b]];
            lhs[a * k + a] += lambda * (1.0 - alpha) * v[ja];
            rhs[a] = c[ja] - lambda * alpha * v[ja] * sign[ja];
        }
        if (!solve(lhs, rhs, k, sol)) continue;
        std::fill(cand.begin(), cand.end(), 0.0);
        for (std::size_t a = 0; a < k; ++a) cand[support[a]] = sol[a];
        const double obj = objective(p, cand, lambda, alpha, v);
        if (obj < best_obj) {
            best_obj = obj;
            best = cand;
        }
    }
    return best;
}

// Largest KKT violation of b for the same objective.
inline double kkt(const Problem& p, const std::vector<double>& b, double lambda, double alpha,
                  const std::vector<double>& v) {
    std::vector<double> r(p.y);
    for (std::size_t j = 0; j < p.n; ++j)
        for (std::size_t i = 0; i < p.m; ++i) r[i] -= p.x[j * p.m + i] * b[j];
    double worst = 0;
    for (std::size_t j = 0; j < p.n; ++j) {
        if (p.constant[j]) continue;
        double g = 0;
        for (std::size_t i = 0; i < p.m; ++i) g += p.x[j * p.m + i] * r[i];
        g /= static_cast<double>(p.m);
        if (b[j] == 0.0) {
            worst = std::max(worst, std::abs(g) - lambda * alpha * v[j]);
        } else {
            const double s = b[j] > 0 ? 1.0 : -1.0;
            worst = std::max(worst, std::abs(g - lambda * v[j] * (alpha * s + (1.0 - alpha) * b[j])));
        }
    }
    return worst;
}

// Golden-section search on a convex function of one variable.
template <typename F>
double argmin_1d(F f, double lo, double hi, double tol = 1e-13) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace oracle
