#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <span>
#include <vector>

namespace mcdl {

using ProbabilityVector = std::vector<double>;

enum class Credibility { Low = 0, Medium = 1, High = 2 };

const char* to_string(Credibility level);

// Ring buffers of the last `capacity` per-epoch predictions of one unlabeled
// sample, one buffer for each augmented view.
class MemoryBankPair {
public:
    MemoryBankPair() = default;
    MemoryBankPair(std::size_t sample_id, std::size_t capacity, std::size_t num_classes);

    // Appends one epoch's weak/strong predictions, evicting the oldest entry
    // once the buffers hold `capacity` items.
    void record_epoch(std::span<const double> p_weak, std::span<const double> p_strong);

    std::size_t sample_id() const noexcept { return sample_id_; }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t epochs_recorded() const noexcept { return epochs_recorded_; }
    std::size_t size() const noexcept { return weak_.size(); }
    bool full() const noexcept { return weak_.size() == capacity_; }

    // Oldest first.
    const std::deque<ProbabilityVector>& weak_history() const noexcept { return weak_; }
    const std::deque<ProbabilityVector>& strong_history() const noexcept { return strong_; }

    void write(std::ostream& os) const;
    static MemoryBankPair read(std::istream& is);

    bool operator==(const MemoryBankPair&) const = default;

private:
    std::size_t sample_id_ = 0;
    std::size_t capacity_ = 0;
    std::size_t num_classes_ = 0;
    std::size_t epochs_recorded_ = 0;
    std::deque<ProbabilityVector> weak_;
    std::deque<ProbabilityVector> strong_;
};

// Occurrence count of each predicted (argmax) class over a history.
struct CategoryCount {
    std::vector<std::size_t> counts;

    std::size_t total() const;
    std::size_t max() const;
    std::size_t argmax() const;  // lowest class index on ties
};

CategoryCount count_categories(const std::deque<ProbabilityVector>& history);
CategoryCount count_categories(std::span<const ProbabilityVector> history);

enum class BankMode { Both, WeakOnly, StrongOnly };

const char* to_string(BankMode mode);
BankMode bank_mode_from_string(const std::string& name);

struct CredibilityRules {
    BankMode bank_mode = BankMode::Both;
    // Apply the second threshold to the weak count (as printed) instead of
    // the strong count.
    bool floor_uses_weak_bank = false;
};

struct CredibilityAssignment {
    std::size_t sample_id = 0;
    Credibility level = Credibility::Low;
    std::optional<std::size_t> pseudo_label;  // set iff level == High
};

// High iff max(w) > 3mu/4, max(s) > mu/4 and argmax(w) == argmax(s);
// Medium iff only the first two hold; Low otherwise.
CredibilityAssignment assign_credibility(const CategoryCount& counts_w, const CategoryCount& counts_s, std::size_t mu,
                                         const CredibilityRules& rules = {});

// Banks that have not yet seen `capacity` epochs are Low. Single-bank modes
// evaluate every condition against the chosen bank.
CredibilityAssignment assess_bank(const MemoryBankPair& bank, const CredibilityRules& rules = {});

struct BatchPartition {
    std::vector<std::size_t> high;
    std::vector<std::size_t> mid;
    std::vector<std::size_t> low;
};

// Splits batch sample ids by level. Every id in `batch_ids` must have an
// entry in `assignments` (looked up by sample_id).
BatchPartition partition_batch(std::span<const std::size_t> batch_ids,
                               std::span<const CredibilityAssignment> assignments);

}  // namespace mcdl
