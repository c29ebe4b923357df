#include "redolab/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace redolab {

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
    check_shape(pred, target, "mse_loss");
    const double n = static_cast<double>(pred.size());
    LossResult res;
    res.grad = Matrix(pred.rows, pred.cols);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred.data[i] - target.data[i];
        acc += r * r;
        res.grad.data[i] = 2.0 * r / n;
    }
    res.loss = acc / n;
    return res;
}

LossResult huber_loss(const Matrix& pred, const Matrix& target, double delta) {
    check_shape(pred, target, "huber_loss");
    const double n = static_cast<double>(pred.size());
    LossResult res;
    res.grad = Matrix(pred.rows, pred.cols);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred.data[i] - target.data[i];
        const double a = std::fabs(r);
        if (a <= delta) {
            acc += 0.5 * r * r;
            res.grad.data[i] = r / n;
        } else {
            acc += delta * (a - 0.5 * delta);
            res.grad.data[i] = (r > 0.0 ? delta : -delta) / n;
        }
    }
    res.loss = acc / n;
    return res;
}

LossResult cross_entropy_loss(const Matrix& pred, const std::vector<std::size_t>& target_classes) {
    if (pred.rows != target_classes.size())
        throw std::invalid_argument("cross_entropy_loss: batch size mismatch");
    const double n = static_cast<double>(pred.rows);
    LossResult res;
    res.grad = Matrix(pred.rows, pred.cols);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.rows; ++i) {
        const std::size_t cls = target_classes[i];
        if (cls >= pred.cols)
            throw std::invalid_argument("cross_entropy_loss: class index " + std::to_string(cls) +
                                        " out of range for " + std::to_string(pred.cols) +
                                        " classes");
        const double* row = pred.row_ptr(i);
        double mx = row[0];
        for (std::size_t j = 1; j < pred.cols; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < pred.cols; ++j) z += std::exp(row[j] - mx);
        acc += -(row[cls] - mx - std::log(z));
        double* grow = res.grad.row_ptr(i);
        for (std::size_t j = 0; j < pred.cols; ++j) {
            const double p = std::exp(row[j] - mx) / z;
            grow[j] = (p - (j == cls ? 1.0 : 0.0)) / n;
        }
    }
    res.loss = acc / n;
    return res;
}

}  // namespace redolab
