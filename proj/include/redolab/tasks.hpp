#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "redolab/matrix.hpp"
#include "redolab/network.hpp"

namespace redolab {

// Synthetic classification task: Gaussian clusters around one unit-norm
// random center per class. Inputs are fixed for the task's lifetime; only
// the labels may be re-shuffled.
struct SupervisedTask {
    Matrix inputs;                    // n x d
    std::vector<std::size_t> labels;  // length n, values in [0, n_classes)
    std::size_t n_classes = 0;
    std::size_t label_epoch = 0;      // number of shuffles applied
};

SupervisedTask make_classification_task(std::size_t n, std::size_t d, std::size_t n_classes,
                                        std::uint64_t seed, double noise_sigma = 0.5);

// Replaces the labels with a seeded permutation of themselves; inputs are
// untouched and label_epoch is incremented.
SupervisedTask shuffle_labels(const SupervisedTask& task, std::uint64_t seed);

// Regression targets produced once by a frozen teacher network.
struct RegressionTask {
    Matrix inputs;
    Matrix targets;  // forward(teacher, inputs), frozen at construction
};

// Random-teacher mode: builds a fresh network from `teacher_specs` with
// `teacher_seed` and freezes its outputs on `inputs`.
RegressionTask make_regression_task(const Matrix& inputs,
                                    const std::vector<LayerSpec>& teacher_specs,
                                    std::uint64_t teacher_seed);

// Distillation mode: targets come from a supplied (e.g., trained) network.
RegressionTask make_regression_task(const Matrix& inputs, const Network& teacher);

// CSV dataset import: d feature columns + 1 integer label column, header
// row required.
SupervisedTask load_classification_csv(const std::string& path);

}  // namespace redolab
