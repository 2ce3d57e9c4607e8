#pragma once

#include <vector>

#include "mcdl/losses.hpp"
#include "mcdl/model.hpp"

namespace mcdl {

// Everything one optimization step needs, with every target already fixed.
// Targets (pseudo labels, soft labels, cross-view predictions) are constants
// here; gradients never flow into them.
struct ObjectiveBatch {
    // Labeled items followed by high-credibility items, all in the weak view.
    Matrix contrastive_x;
    std::vector<std::size_t> contrastive_labels;
    std::vector<std::size_t> labeled_anchors;  // rows of contrastive_x
    std::vector<std::size_t> high_anchors;     // rows of contrastive_x

    // Mixed inputs and their mixed targets.
    Matrix mixed_high_x, mixed_high_y;
    Matrix mixed_mid_x, mixed_mid_y;

    // Strong-view unlabeled inputs and the weak-view predictions they are
    // pulled towards.
    Matrix self_x, self_targets;
};

// Which loss terms participate. Disabled terms contribute neither value nor
// gradient.
struct BranchSwitches {
    bool labeled_sup = true;
    bool sup = true;
    bool semi = true;
    bool self = true;
};

struct LossBreakdown {
    double labeled_sup = 0.0;
    double sup = 0.0;
    double semi = 0.0;
    double semi_ce = 0.0;
    double semi_mse = 0.0;
    double self = 0.0;
    double total = 0.0;  // labeled_sup + sup + lambda (semi + self)
};

struct ObjectiveResult {
    LossBreakdown losses;
    ModelParams grads;  // zero-filled when gradients were not requested
};

// Scalar objective for the batch, optionally with exact parameter gradients.
ObjectiveResult evaluate_objective(const ModelParams& params, const ObjectiveBatch& batch, const LossConfig& cfg,
                                   const BranchSwitches& branches, bool with_grad);

// Loss value only.
inline LossBreakdown objective_value(const ModelParams& params, const ObjectiveBatch& batch, const LossConfig& cfg,
                                     const BranchSwitches& branches) {
    return evaluate_objective(params, batch, cfg, branches, false).losses;
}

// Analytic gradients of the selected loss terms.
inline ObjectiveResult backward(const ModelParams& params, const ObjectiveBatch& batch, const LossConfig& cfg,
                                const BranchSwitches& branches) {
    return evaluate_objective(params, batch, cfg, branches, true);
}

}  // namespace mcdl
