#include "mcdl/objective.hpp"

#include <cmath>

#include "mcdl/error.hpp"

namespace mcdl {

namespace {

Matrix stack_probs(const std::vector<ForwardCache>& caches, std::size_t num_classes) {
    Matrix out(caches.size(), num_classes);
    for (std::size_t i = 0; i < caches.size(); ++i) {
        std::copy(caches[i].probs.begin(), caches[i].probs.end(), out.row(i).begin());
    }
    return out;
}

Matrix stack_features(const std::vector<ForwardCache>& caches, std::size_t dim) {
    Matrix out(caches.size(), dim);
    for (std::size_t i = 0; i < caches.size(); ++i) {
        std::copy(caches[i].z.begin(), caches[i].z.end(), out.row(i).begin());
    }
    return out;
}

void backprop_probs(const ModelParams& params, const std::vector<ForwardCache>& caches, const Matrix& grad_p,
                    double scale, ModelParams& grads) {
    std::vector<double> g(params.shape.num_classes);
    for (std::size_t i = 0; i < caches.size(); ++i) {
        auto row = grad_p.row(i);
        for (std::size_t c = 0; c < g.size(); ++c) g[c] = row[c] * scale;
        backprop(params, caches[i], {}, g, grads);
    }
}

}  // namespace

ObjectiveResult evaluate_objective(const ModelParams& params, const ObjectiveBatch& batch, const LossConfig& cfg,
                                   const BranchSwitches& branches, bool with_grad) {
    ObjectiveResult out;
    out.grads = ModelParams::zeros(params.shape);
    LossBreakdown& L = out.losses;
    const std::size_t C = params.shape.num_classes;

    // Contrastive terms share one forward pass over labeled + high rows.
    const bool want_lab = branches.labeled_sup && !batch.labeled_anchors.empty();
    const bool want_sup = branches.sup && !batch.high_anchors.empty();
    if ((want_lab || want_sup) && batch.contrastive_x.rows() >= 2) {
        if (batch.contrastive_labels.size() != batch.contrastive_x.rows()) {
            throw InvalidInput("objective: contrastive labels do not match rows");
        }
        const auto caches = forward_batch(params, batch.contrastive_x);
        const Matrix z = stack_features(caches, params.shape.feature_dim);
        Matrix grad_z(z.rows(), z.cols());

        const auto accumulate = [&](const ContrastiveResult& r) {
            if (!with_grad || r.active_anchors == 0) return;
            auto dst = grad_z.values();
            auto src = r.grad.values();
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        };
        if (want_lab) {
            auto r = sup_contrastive_loss(z, batch.contrastive_labels, batch.labeled_anchors, cfg.tau_s, with_grad);
            L.labeled_sup = r.value;
            accumulate(r);
        }
        if (want_sup) {
            auto r = sup_contrastive_loss(z, batch.contrastive_labels, batch.high_anchors, cfg.tau_s, with_grad);
            L.sup = r.value;
            accumulate(r);
        }
        if (with_grad) {
            for (std::size_t i = 0; i < caches.size(); ++i) backprop(params, caches[i], grad_z.row(i), {}, out.grads);
        }
    }

    if (branches.semi && (batch.mixed_high_x.rows() > 0 || batch.mixed_mid_x.rows() > 0)) {
        const auto high = forward_batch(params, batch.mixed_high_x);
        const auto mid = forward_batch(params, batch.mixed_mid_x);
        const Matrix ph = stack_probs(high, C);
        const Matrix pm = stack_probs(mid, C);
        auto r = semi_loss(ph, batch.mixed_high_y, pm, batch.mixed_mid_y, with_grad);
        L.semi = r.value;
        L.semi_ce = r.cross_entropy;
        L.semi_mse = r.squared_error;
        if (with_grad) {
            backprop_probs(params, high, r.grad_high, cfg.lambda, out.grads);
            backprop_probs(params, mid, r.grad_mid, cfg.lambda, out.grads);
        }
    }

    if (branches.self && batch.self_x.rows() > 0) {
        const auto caches = forward_batch(params, batch.self_x);
        const Matrix p = stack_probs(caches, C);
        auto r = self_loss(p, batch.self_targets, cfg.tau_u, with_grad);
        L.self = r.value;
        if (with_grad) backprop_probs(params, caches, r.grad, cfg.lambda, out.grads);
    }

    L.total = L.labeled_sup + total_loss(L.sup, L.semi, L.self, cfg.lambda);
    if (!std::isfinite(L.total)) throw NumericOverflow("objective.total", "loss is not finite");
    if (with_grad) {
        for (std::size_t t = 0; t < 6; ++t) {
            require_finite(out.grads.tensors()[t]->values(), std::string("grad.") + ModelParams::tensor_names[t]);
        }
    }
    return out;
}

}  // namespace mcdl
