#include "redolab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace redolab {

double iqm(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("iqm: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t drop = values.size() / 4;
    double acc = 0.0;
    for (std::size_t i = drop; i < values.size() - drop; ++i) acc += values[i];
    return acc / static_cast<double>(values.size() - 2 * drop);
}

std::vector<double> RunMatrix::pooled() const {
    std::vector<double> all;
    for (const auto& [task, vals] : scores) all.insert(all.end(), vals.begin(), vals.end());
    return all;
}

namespace {

// linear-interpolation quantile on a sorted vector (numpy default)
double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

BootstrapInterval bootstrap_ci(const RunMatrix& matrix, std::size_t B, double alpha, Rng& rng) {
    if (B < 100) throw std::invalid_argument("bootstrap_ci: B must be >= 100");
    if (matrix.scores.empty()) throw std::invalid_argument("bootstrap_ci: empty matrix");
    const std::size_t n_seeds = matrix.n_seeds();
    for (const auto& [task, vals] : matrix.scores)
        if (vals.size() != n_seeds)
            throw std::invalid_argument("bootstrap_ci: task '" + task + "' has a missing cell");
    if (n_seeds == 0) throw std::invalid_argument("bootstrap_ci: no seeds");

    BootstrapInterval out;
    out.point = iqm(matrix.pooled());
    out.degenerate = n_seeds == 1;

    std::vector<double> stats(B);
    std::vector<double> resampled;
    resampled.reserve(matrix.n_tasks() * n_seeds);
    for (std::size_t b = 0; b < B; ++b) {
        resampled.clear();
        for (const auto& [task, vals] : matrix.scores)
            for (std::size_t s = 0; s < n_seeds; ++s)
                resampled.push_back(vals[rng.uniform_int(n_seeds)]);
        stats[b] = iqm(resampled);
    }
    std::sort(stats.begin(), stats.end());
    out.lo = quantile_sorted(stats, alpha / 2.0);
    out.hi = quantile_sorted(stats, 1.0 - alpha / 2.0);
    return out;
}

std::vector<double> singular_values(const Matrix& a) {
    if (a.rows == 0 || a.cols == 0) throw std::invalid_argument("singular_values: empty matrix");
    // work on the tall orientation so columns are orthogonalized
    Matrix m = a.rows >= a.cols ? a : transpose(a);

    // one-sided Jacobi: rotate column pairs until all are mutually orthogonal
    const std::size_t n = m.cols;
    const double tol = 1e-10;
    for (std::size_t sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m.rows; ++i) {
                    const double vp = m(i, p), vq = m(i, q);
                    app += vp * vp;
                    aqq += vq * vq;
                    apq += vp * vq;
                }
                const double denom = std::sqrt(app * aqq);
                if (denom == 0.0 || std::fabs(apq) <= tol * denom) continue;
                off = std::max(off, std::fabs(apq) / denom);
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m.rows; ++i) {
                    const double vp = m(i, p), vq = m(i, q);
                    m(i, p) = c * vp - s * vq;
                    m(i, q) = s * vp + c * vq;
                }
            }
        }
        if (off <= tol) break;
    }

    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double norm2 = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) norm2 += m(i, j) * m(i, j);
        sv[j] = std::sqrt(norm2);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

std::size_t effective_rank(const Matrix& features, double delta) {
    if (delta <= 0.0 || delta >= 1.0)
        throw std::invalid_argument("effective_rank: delta must be in (0, 1)");
    if (!all_finite(features)) throw std::invalid_argument("effective_rank: non-finite features");
    const auto sv = singular_values(features);
    double total = 0.0;
    for (double v : sv) total += v;
    if (total == 0.0) throw std::invalid_argument("effective_rank: all-zero matrix");
    double acc = 0.0;
    for (std::size_t k = 0; k < sv.size(); ++k) {
        acc += sv[k];
        if (acc / total >= 1.0 - delta) return k + 1;
    }
    return sv.size();
}

}  // namespace redolab
