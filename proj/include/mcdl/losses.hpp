#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mcdl/dcm.hpp"
#include "mcdl/matrix.hpp"

namespace mcdl {

struct LossConfig {
    double tau_s = 0.04;   // contrastive temperature
    double tau_u = 0.7;    // soft-target / self-distillation temperature
    double alpha = 0.5;    // Beta(alpha, alpha) mixing prior
    double lambda = 0.35;  // weight of the semi and self branches
    bool renormalize_soft_targets = true;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Supervised contrastive loss over unit-norm features.
//
// For each anchor i with a nonempty positive set P_i (other items sharing its
// label), the per-anchor term is
//
//     (1/|P_i|) sum_{q in P_i} -log( exp(z_i.z_q/tau) / sum_{n != i} exp(z_i.z_n/tau) )
//
// and the loss is the mean over those anchors. Anchors without positives are
// skipped; if none remain the loss is 0.
// ---------------------------------------------------------------------------
struct ContrastiveResult {
    double value = 0.0;
    Matrix grad;  // d value / d z, same shape as the feature batch (when requested)
    std::size_t active_anchors = 0;
};

ContrastiveResult sup_contrastive_loss(const Matrix& features, std::span<const std::size_t> labels, double tau,
                                       bool with_grad = false);

// Same loss with only the listed batch rows acting as anchors. Every row is
// still a candidate in the denominators and a potential positive.
ContrastiveResult sup_contrastive_loss(const Matrix& features, std::span<const std::size_t> labels,
                                       std::span<const std::size_t> anchors, double tau, bool with_grad = false);

// (mean(weak history) + mean(strong history)) / (2 tau_u), optionally
// rescaled to sum to one. The bank must be full.
std::vector<double> soft_pseudo_label(const MemoryBankPair& bank, double tau_u, bool renormalize);

struct MixedSample {
    std::vector<double> x;
    std::vector<double> y;
    double weight = 1.0;  // max(delta, 1 - delta)
};

// Convex combination dominated by the first pair.
MixedSample mixmatch_mix(std::span<const double> x1, std::span<const double> y1, std::span<const double> x2,
                         std::span<const double> y2, double delta);

// Beta(alpha, alpha) draw via two Gamma variates.
double sample_beta(double alpha, std::mt19937_64& rng);

// Cross-entropy on mixed high-credibility rows plus squared error on mixed
// medium-credibility rows. Gradients are w.r.t. the probability rows.
struct SemiResult {
    double value = 0.0;
    double cross_entropy = 0.0;
    double squared_error = 0.0;
    bool empty = false;  // both sets empty; value is 0
    Matrix grad_high;
    Matrix grad_mid;
};

SemiResult semi_loss(const Matrix& probs_high, const Matrix& targets_high, const Matrix& probs_mid,
                     const Matrix& targets_mid, bool with_grad = false);

// (1/N) sum_i sum_c -(q_c / tau_u) log max(p_c, eps). The targets q are
// constants; the gradient is w.r.t. p only.
struct SelfResult {
    double value = 0.0;
    Matrix grad;
};

inline constexpr double kLogFloor = 1e-12;

SelfResult self_loss(const Matrix& probs, const Matrix& targets, double tau_u, bool with_grad = false);

// L_sup + lambda (L_semi + L_self)
double total_loss(double l_sup, double l_semi, double l_self, double lambda);

}  // namespace mcdl
