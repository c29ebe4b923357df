#include "redolab/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "redolab/rng.hpp"

namespace redolab {

SupervisedTask make_classification_task(std::size_t n, std::size_t d, std::size_t n_classes,
                                        std::uint64_t seed, double noise_sigma) {
    if (n == 0 || d == 0 || n_classes == 0)
        throw std::invalid_argument("make_classification_task: zero-sized argument");
    if (n % n_classes != 0)
        throw std::invalid_argument("make_classification_task: n must be divisible by n_classes");

    Rng rng(seed);
    // one unit-norm center per class
    std::vector<std::vector<double>> centers(n_classes, std::vector<double>(d));
    for (auto& c : centers) {
        double norm2 = 0.0;
        for (double& v : c) {
            v = rng.normal();
            norm2 += v * v;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& v : c) v *= inv;
    }

    SupervisedTask task;
    task.n_classes = n_classes;
    task.inputs = Matrix(n, d);
    task.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % n_classes;  // balanced by construction
        task.labels[i] = cls;
        double* row = task.inputs.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = centers[cls][j] + noise_sigma * rng.normal();
    }
    return task;
}

SupervisedTask shuffle_labels(const SupervisedTask& task, std::uint64_t seed) {
    SupervisedTask out = task;
    Rng rng(seed);
    // Fisher-Yates over the label vector
    for (std::size_t i = out.labels.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_int(i);
        std::swap(out.labels[i - 1], out.labels[j]);
    }
    ++out.label_epoch;
    return out;
}

RegressionTask make_regression_task(const Matrix& inputs,
                                    const std::vector<LayerSpec>& teacher_specs,
                                    std::uint64_t teacher_seed) {
    return make_regression_task(inputs, build_network(teacher_specs, teacher_seed));
}

RegressionTask make_regression_task(const Matrix& inputs, const Network& teacher) {
    if (inputs.cols != teacher.input_dim())
        throw std::invalid_argument("make_regression_task: input dim " +
                                    std::to_string(inputs.cols) + " != teacher input dim " +
                                    std::to_string(teacher.input_dim()));
    RegressionTask task;
    task.inputs = inputs;
    task.targets = forward(teacher, inputs).outputs;
    return task;
}

SupervisedTask load_classification_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_classification_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_classification_csv: missing header row in " + path);

    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> labels;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
        if (values.size() < 2)
            throw std::runtime_error("load_classification_csv: row with fewer than 2 columns");
        if (width == 0)
            width = values.size();
        else if (values.size() != width)
            throw std::runtime_error("load_classification_csv: ragged rows in " + path);
        const double lab = values.back();
        if (lab < 0.0 || lab != std::floor(lab))
            throw std::runtime_error("load_classification_csv: non-integer label");
        labels.push_back(static_cast<std::size_t>(lab));
        values.pop_back();
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw std::runtime_error("load_classification_csv: no data rows");

    SupervisedTask task;
    task.inputs = Matrix(rows.size(), width - 1);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), task.inputs.row_ptr(i));
    task.labels = std::move(labels);
    task.n_classes = *std::max_element(task.labels.begin(), task.labels.end()) + 1;
    return task;
}

}  // namespace redolab
