#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "redolab/matrix.hpp"
#include "redolab/rng.hpp"

namespace redolab {

// Interquartile mean: sort ascending, drop floor(n/4) values from each end,
// mean of the remainder. For n < 4 nothing is dropped.
double iqm(std::vector<double> values);

// Scores indexed by (task, seed); every task must report the same seeds.
struct RunMatrix {
    // task name -> per-seed scores
    std::map<std::string, std::vector<double>> scores;

    std::size_t n_tasks() const { return scores.size(); }
    std::size_t n_seeds() const { return scores.empty() ? 0 : scores.begin()->second.size(); }
    std::vector<double> pooled() const;
};

struct BootstrapInterval {
    double lo = 0.0;
    double hi = 0.0;
    double point = 0.0;
    bool degenerate = false;  // a stratum had a single seed
};

// Stratified percentile bootstrap of the pooled IQM: seeds are resampled with
// replacement within each task stratum, the statistic is recomputed B times
// and the [alpha/2, 1-alpha/2] percentile interval is returned.
BootstrapInterval bootstrap_ci(const RunMatrix& matrix, std::size_t B, double alpha, Rng& rng);

// Singular values of a (sorted descending). One-sided Jacobi; suitable for
// the small feature matrices used here.
std::vector<double> singular_values(const Matrix& a);

// srank: smallest k such that the top-k singular values hold at least
// (1 - delta) of the total singular mass.
std::size_t effective_rank(const Matrix& features, double delta);

}  // namespace redolab
