#include "mcdl/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "mcdl/error.hpp"

namespace mcdl {

OptimizerState OptimizerState::create(const ModelShape& shape, double base_lr, double momentum,
                                      std::size_t total_epochs, double weight_decay) {
    if (!(base_lr > 0.0)) throw InvalidInput("base_lr must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw InvalidInput("momentum must lie in [0, 1)");
    if (total_epochs == 0) throw InvalidInput("total_epochs must be positive");
    OptimizerState s;
    s.base_lr = base_lr;
    s.momentum = momentum;
    s.weight_decay = weight_decay;
    s.total_epochs = total_epochs;
    s.velocity = ModelParams::zeros(shape);
    return s;
}

double cosine_lr(const OptimizerState& s) {
    if (s.total_epochs == 0) throw InvalidInput("cosine_lr: total_epochs must be positive");
    const double t = static_cast<double>(s.current_epoch) / static_cast<double>(s.total_epochs);
    return s.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void sgd_step(ModelParams& params, const ModelParams& grads, OptimizerState& state) {
    if (!(params.shape == grads.shape) || !(params.shape == state.velocity.shape)) {
        throw InvalidInput("sgd_step: gradient or velocity shape does not match parameters");
    }
    const double lr = cosine_lr(state);
    auto ps = params.tensors();
    auto gs = grads.tensors();
    auto vs = state.velocity.tensors();
    for (std::size_t t = 0; t < ps.size(); ++t) {
        auto p = ps[t]->values();
        auto g = gs[t]->values();
        auto v = vs[t]->values();
        for (std::size_t i = 0; i < p.size(); ++i) {
            v[i] = state.momentum * v[i] + g[i] + state.weight_decay * p[i];
            p[i] -= lr * v[i];
        }
    }
}

}  // namespace mcdl
