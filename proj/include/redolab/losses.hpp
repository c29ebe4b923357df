#pragma once

#include <utility>
#include <vector>

#include "redolab/matrix.hpp"

namespace redolab {

enum class LossKind { mse, huber, cross_entropy };

struct LossResult {
    double loss = 0.0;
    Matrix grad;  // dL/dpred, same shape as pred
};

// Mean-reduced losses.
//   mse:   mean over all entries of (pred - target)^2
//   huber: mean over all entries of 0.5 r^2 for |r| <= delta, else
//          delta * (|r| - 0.5 delta)
LossResult mse_loss(const Matrix& pred, const Matrix& target);
LossResult huber_loss(const Matrix& pred, const Matrix& target, double delta = 1.0);

// Softmax cross entropy, mean over the batch. Targets are class indices,
// pred holds one row of logits per sample.
LossResult cross_entropy_loss(const Matrix& pred, const std::vector<std::size_t>& target_classes);

}  // namespace redolab
