#pragma once

#include "mcdl/model.hpp"

namespace mcdl {

struct OptimizerState {
    double base_lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0;
    std::size_t current_epoch = 0;
    std::size_t total_epochs = 1;
    ModelParams velocity;  // same shapes as the model

    static OptimizerState create(const ModelShape& shape, double base_lr, double momentum, std::size_t total_epochs,
                                 double weight_decay = 0.0);

    bool operator==(const OptimizerState&) const = default;
};

// base_lr * 0.5 * (1 + cos(pi * epoch / total))
double cosine_lr(const OptimizerState& state);

// Heavy-ball momentum SGD at the scheduled rate:
//   v <- momentum * v + (g + weight_decay * p);  p <- p - lr * v
void sgd_step(ModelParams& params, const ModelParams& grads, OptimizerState& state);

}  // namespace mcdl
