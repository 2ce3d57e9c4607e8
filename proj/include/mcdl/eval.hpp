#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mcdl/dcm.hpp"

namespace mcdl {

using CountMatrix = std::vector<std::vector<std::int64_t>>;

// Maximum-weight perfect matching on a square count matrix (rows: predicted
// clusters, columns: classes). Among optimal permutations the
// lexicographically smallest one is returned.
std::vector<std::size_t> hungarian_match(const CountMatrix& confusion);

struct AccReport {
    double acc_all = 0.0;
    double acc_old = 0.0;
    double acc_new = 0.0;
    double balanced_all = 0.0;
    double balanced_old = 0.0;
    double balanced_new = 0.0;
    std::size_t n_all = 0;
    std::size_t n_old = 0;
    std::size_t n_new = 0;
    std::vector<std::size_t> matching;  // predicted cluster -> class

    bool operator==(const AccReport&) const = default;
};

// One matching over all samples, reused for the old/new subsets. Subsets with
// no samples report 0 and a zero count.
AccReport clustering_acc(std::span<const std::size_t> predictions, std::span<const std::size_t> truth,
                         std::size_t num_classes, const std::vector<bool>& is_old_class);

struct SelectionStats {
    std::size_t epoch = 0;
    std::size_t n_high = 0;
    std::size_t n_mid = 0;
    std::size_t n_low = 0;
    std::optional<double> high_accuracy;  // absent when no sample is High
    std::optional<double> mid_accuracy;
    // Single-epoch cross-view agreement: samples whose latest weak and strong
    // argmax agree, labeled with the weak argmax.
    std::size_t n_cross_view = 0;
    std::optional<double> cross_view_accuracy;
};

struct SelectionOptions {
    double tau_u = 0.7;
    bool renormalize = true;
    // Predicted cluster -> class map (normally AccReport::matching); identity
    // when empty.
    std::vector<std::size_t> cluster_to_class;
};

// `banks[k]` and `assignments[k]` describe the same sample; its hidden class
// is `truth[banks[k].sample_id()]`.
SelectionStats selection_stats(std::span<const CredibilityAssignment> assignments,
                               std::span<const MemoryBankPair> banks, std::span<const std::size_t> truth,
                               std::size_t epoch, const SelectionOptions& options = {});

}  // namespace mcdl
