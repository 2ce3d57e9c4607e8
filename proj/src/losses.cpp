#include "mcdl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "mcdl/error.hpp"

namespace mcdl {

void LossConfig::validate() const {
    if (!(tau_s > 0.0)) throw ConfigError("tau_s must be positive");
    if (!(tau_u > 0.0)) throw ConfigError("tau_u must be positive");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
}

ContrastiveResult sup_contrastive_loss(const Matrix& features, std::span<const std::size_t> labels, double tau,
                                       bool with_grad) {
    std::vector<std::size_t> all(features.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return sup_contrastive_loss(features, labels, all, tau, with_grad);
}

ContrastiveResult sup_contrastive_loss(const Matrix& z, std::span<const std::size_t> labels,
                                       std::span<const std::size_t> anchors, double tau, bool with_grad) {
    const std::size_t n = z.rows();
    if (n < 2) throw InsufficientBatch("contrastive loss needs at least two items, got " + std::to_string(n));
    if (labels.size() != n) throw InvalidInput("contrastive loss: one label per feature row required");
    if (!(tau > 0.0)) throw InvalidInput("contrastive loss: temperature must be positive");

    ContrastiveResult out;
    if (with_grad) out.grad = Matrix(n, z.cols());

    // Scaled similarities of anchor i against every row.
    std::vector<double> sim(n);
    std::vector<double> weight(n);
    std::vector<std::pair<std::size_t, std::vector<double>>> coeffs;  // anchor -> dl/ds_in

    for (std::size_t i : anchors) {
        if (i >= n) throw InvalidInput("contrastive loss: anchor index out of range");
        std::size_t positives = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && labels[j] == labels[i]) ++positives;
        }
        if (positives == 0) continue;
        ++out.active_anchors;

        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sim[j] = dot(z.row(i), z.row(j)) / tau;
            mx = std::max(mx, sim[j]);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            weight[j] = std::exp(sim[j] - mx);
            denom += weight[j];
        }
        const double lse = mx + std::log(denom);

        double term = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && labels[j] == labels[i]) term += lse - sim[j];
        }
        out.value += term / static_cast<double>(positives);

        if (with_grad) {
            std::vector<double> g(n, 0.0);
            const double inv_pos = 1.0 / static_cast<double>(positives);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                g[j] = weight[j] / denom - (labels[j] == labels[i] ? inv_pos : 0.0);
            }
            coeffs.emplace_back(i, std::move(g));
        }
    }

    if (out.active_anchors == 0) {
        if (!anchors.empty()) std::clog << "warning: contrastive loss has no anchor with a positive pair\n";
        return out;
    }
    const double scale = 1.0 / static_cast<double>(out.active_anchors);
    out.value *= scale;

    if (with_grad) {
        const std::size_t d = z.cols();
        for (const auto& [i, g] : coeffs) {
            auto gi = out.grad.row(i);
            auto zi = z.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || g[j] == 0.0) continue;
                const double c = g[j] * scale / tau;
                auto zj = z.row(j);
                auto gj = out.grad.row(j);
                for (std::size_t k = 0; k < d; ++k) {
                    gi[k] += c * zj[k];
                    gj[k] += c * zi[k];
                }
            }
        }
    }
    return out;
}

std::vector<double> soft_pseudo_label(const MemoryBankPair& bank, double tau_u, bool renormalize) {
    if (!bank.full()) {
        throw WarmUpError("soft pseudo label requested for sample " + std::to_string(bank.sample_id()) +
                          " before its bank is full");
    }
    if (!(tau_u > 0.0)) throw InvalidInput("tau_u must be positive");
    const std::size_t C = bank.num_classes();
    std::vector<double> mean_w(C, 0.0), mean_s(C, 0.0);
    for (const auto& p : bank.weak_history())
        for (std::size_t c = 0; c < C; ++c) mean_w[c] += p[c];
    for (const auto& p : bank.strong_history())
        for (std::size_t c = 0; c < C; ++c) mean_s[c] += p[c];
    const double len = static_cast<double>(bank.size());

    std::vector<double> y(C);
    for (std::size_t c = 0; c < C; ++c) y[c] = (mean_w[c] / len + mean_s[c] / len) / (2.0 * tau_u);
    if (renormalize) {
        const double s = std::accumulate(y.begin(), y.end(), 0.0);
        for (double& v : y) v /= s;
    }
    return y;
}

MixedSample mixmatch_mix(std::span<const double> x1, std::span<const double> y1, std::span<const double> x2,
                         std::span<const double> y2, double delta) {
    if (x1.size() != x2.size() || y1.size() != y2.size()) throw InvalidInput("mixmatch_mix: pair dimension mismatch");
    if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidInput("mixmatch_mix: delta must lie in [0, 1]");
    MixedSample m;
    m.weight = std::max(delta, 1.0 - delta);
    const double w = m.weight;
    m.x.resize(x1.size());
    m.y.resize(y1.size());
    for (std::size_t i = 0; i < x1.size(); ++i) m.x[i] = w * x1[i] + (1.0 - w) * x2[i];
    for (std::size_t i = 0; i < y1.size(); ++i) m.y[i] = w * y1[i] + (1.0 - w) * y2[i];
    return m;
}

double sample_beta(double alpha, std::mt19937_64& rng) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    const double a = gamma(rng);
    const double b = gamma(rng);
    if (a + b == 0.0) return 0.5;
    return a / (a + b);
}

SemiResult semi_loss(const Matrix& probs_high, const Matrix& targets_high, const Matrix& probs_mid,
                     const Matrix& targets_mid, bool with_grad) {
    if (probs_high.rows() != targets_high.rows() || probs_mid.rows() != targets_mid.rows()) {
        throw InvalidInput("semi_loss: prediction and target row counts differ");
    }
    SemiResult out;
    const std::size_t nh = probs_high.rows();
    const std::size_t nm = probs_mid.rows();
    out.empty = (nh == 0 && nm == 0);
    if (with_grad) {
        out.grad_high = Matrix(nh, probs_high.cols());
        out.grad_mid = Matrix(nm, probs_mid.cols());
    }

    if (nh > 0) {
        if (probs_high.cols() != targets_high.cols()) throw InvalidInput("semi_loss: high-set class count mismatch");
        const double inv = 1.0 / static_cast<double>(nh);
        for (std::size_t i = 0; i < nh; ++i) {
            for (std::size_t c = 0; c < probs_high.cols(); ++c) {
                const double p = probs_high(i, c);
                const double y = targets_high(i, c);
                if (y == 0.0) continue;
                out.cross_entropy -= y * std::log(std::max(p, kLogFloor)) * inv;
                if (with_grad && p >= kLogFloor) out.grad_high(i, c) = -y / p * inv;
            }
        }
    }
    if (nm > 0) {
        if (probs_mid.cols() != targets_mid.cols()) throw InvalidInput("semi_loss: mid-set class count mismatch");
        const double inv = 1.0 / static_cast<double>(nm);
        for (std::size_t i = 0; i < nm; ++i) {
            for (std::size_t c = 0; c < probs_mid.cols(); ++c) {
                const double diff = probs_mid(i, c) - targets_mid(i, c);
                out.squared_error += diff * diff * inv;
                if (with_grad) out.grad_mid(i, c) = 2.0 * diff * inv;
            }
        }
    }
    out.value = out.cross_entropy + out.squared_error;
    return out;
}

SelfResult self_loss(const Matrix& probs, const Matrix& targets, double tau_u, bool with_grad) {
    if (probs.rows() != targets.rows() || probs.cols() != targets.cols()) {
        throw InvalidInput("self_loss: prediction and target shapes differ");
    }
    if (!(tau_u > 0.0)) throw InvalidInput("self_loss: tau_u must be positive");
    SelfResult out;
    const std::size_t n = probs.rows();
    if (with_grad) out.grad = Matrix(n, probs.cols());
    if (n == 0) return out;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < probs.cols(); ++c) {
            const double p = probs(i, c);
            const double q = targets(i, c);
            out.value -= q / tau_u * std::log(std::max(p, kLogFloor)) * inv;
            if (with_grad && p >= kLogFloor) out.grad(i, c) = -q / (tau_u * p) * inv;
        }
    }
    return out;
}

double total_loss(double l_sup, double l_semi, double l_self, double lambda) {
    return l_sup + lambda * (l_semi + l_self);
}

}  // namespace mcdl
