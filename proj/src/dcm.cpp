#include "mcdl/dcm.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "mcdl/binio.hpp"
#include "mcdl/error.hpp"
#include "mcdl/matrix.hpp"

namespace mcdl {

const char* to_string(Credibility level) {
    switch (level) {
        case Credibility::High: return "high";
        case Credibility::Medium: return "medium";
        case Credibility::Low: return "low";
    }
    return "?";
}

const char* to_string(BankMode mode) {
    switch (mode) {
        case BankMode::Both: return "both";
        case BankMode::WeakOnly: return "weak-only";
        case BankMode::StrongOnly: return "strong-only";
    }
    return "?";
}

BankMode bank_mode_from_string(const std::string& name) {
    if (name == "both") return BankMode::Both;
    if (name == "weak-only") return BankMode::WeakOnly;
    if (name == "strong-only") return BankMode::StrongOnly;
    throw ConfigError("unknown bank mode '" + name + "'");
}

namespace {

void validate_probability(std::span<const double> p, std::size_t num_classes, const char* which) {
    if (p.size() != num_classes) {
        throw InvalidInput(std::string(which) + " prediction has " + std::to_string(p.size()) +
                           " classes, bank expects " + std::to_string(num_classes));
    }
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidInput(std::string(which) + " prediction has an invalid entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw InvalidInput(std::string(which) + " prediction does not sum to 1");
}

}  // namespace

MemoryBankPair::MemoryBankPair(std::size_t sample_id, std::size_t capacity, std::size_t num_classes)
    : sample_id_(sample_id), capacity_(capacity), num_classes_(num_classes) {
    if (capacity == 0) throw InvalidInput("memory bank capacity must be positive");
    if (num_classes < 2) throw InvalidInput("memory bank needs at least two classes");
}

void MemoryBankPair::record_epoch(std::span<const double> p_weak, std::span<const double> p_strong) {
    validate_probability(p_weak, num_classes_, "weak");
    validate_probability(p_strong, num_classes_, "strong");
    weak_.emplace_back(p_weak.begin(), p_weak.end());
    strong_.emplace_back(p_strong.begin(), p_strong.end());
    if (weak_.size() > capacity_) {
        weak_.pop_front();
        strong_.pop_front();
    }
    ++epochs_recorded_;
}

void MemoryBankPair::write(std::ostream& os) const {
    binio::put<std::uint64_t>(os, sample_id_);
    binio::put<std::uint64_t>(os, capacity_);
    binio::put<std::uint64_t>(os, num_classes_);
    binio::put<std::uint64_t>(os, epochs_recorded_);
    binio::put<std::uint64_t>(os, weak_.size());
    for (std::size_t i = 0; i < weak_.size(); ++i) {
        binio::put_doubles(os, weak_[i]);
        binio::put_doubles(os, strong_[i]);
    }
}

MemoryBankPair MemoryBankPair::read(std::istream& is) {
    MemoryBankPair b;
    b.sample_id_ = binio::get<std::uint64_t>(is);
    b.capacity_ = binio::get<std::uint64_t>(is);
    b.num_classes_ = binio::get<std::uint64_t>(is);
    b.epochs_recorded_ = binio::get<std::uint64_t>(is);
    const auto n = binio::get<std::uint64_t>(is);
    if (n > b.capacity_) throw FormatError("memory bank holds more entries than its capacity");
    for (std::size_t i = 0; i < n; ++i) {
        b.weak_.push_back(binio::get_doubles(is));
        b.strong_.push_back(binio::get_doubles(is));
        if (b.weak_.back().size() != b.num_classes_ || b.strong_.back().size() != b.num_classes_) {
            throw FormatError("memory bank entry has the wrong class count");
        }
    }
    return b;
}

std::size_t CategoryCount::total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

std::size_t CategoryCount::max() const { return counts.empty() ? 0 : counts[argmax()]; }

std::size_t CategoryCount::argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] > counts[best]) best = i;
    }
    return best;
}

CategoryCount count_categories(std::span<const ProbabilityVector> history) {
    if (history.empty()) throw EmptyHistory("cannot count categories of an empty history");
    CategoryCount out;
    out.counts.assign(history.front().size(), 0);
    for (const auto& p : history) {
        if (p.size() != out.counts.size()) throw InvalidInput("history entries disagree on class count");
        ++out.counts[argmax(p)];
    }
    return out;
}

CategoryCount count_categories(const std::deque<ProbabilityVector>& history) {
    const std::vector<ProbabilityVector> flat(history.begin(), history.end());
    return count_categories(std::span<const ProbabilityVector>(flat));
}

CredibilityAssignment assign_credibility(const CategoryCount& counts_w, const CategoryCount& counts_s, std::size_t mu,
                                         const CredibilityRules& rules) {
    // Integer forms of  max > 3mu/4  and  max > mu/4.
    const auto dominant = [mu](std::size_t m) { return 4 * m > 3 * mu; };
    const auto present = [mu](std::size_t m) { return 4 * m > mu; };

    const bool cond_a = dominant(counts_w.max());
    const bool cond_b = present(rules.floor_uses_weak_bank ? counts_w.max() : counts_s.max());
    const bool cond_c = counts_w.argmax() == counts_s.argmax();

    CredibilityAssignment out;
    if (cond_a && cond_b && cond_c) {
        out.level = Credibility::High;
        out.pseudo_label = counts_w.argmax();
    } else if (cond_a && cond_b) {
        out.level = Credibility::Medium;
    }
    return out;
}

CredibilityAssignment assess_bank(const MemoryBankPair& bank, const CredibilityRules& rules) {
    CredibilityAssignment out;
    if (bank.full()) {
        switch (rules.bank_mode) {
            case BankMode::Both:
                out = assign_credibility(count_categories(bank.weak_history()),
                                         count_categories(bank.strong_history()), bank.capacity(), rules);
                break;
            case BankMode::WeakOnly: {
                const auto c = count_categories(bank.weak_history());
                out = assign_credibility(c, c, bank.capacity(), rules);
                break;
            }
            case BankMode::StrongOnly: {
                const auto c = count_categories(bank.strong_history());
                out = assign_credibility(c, c, bank.capacity(), rules);
                break;
            }
        }
    }
    out.sample_id = bank.sample_id();
    return out;
}

BatchPartition partition_batch(std::span<const std::size_t> batch_ids,
                               std::span<const CredibilityAssignment> assignments) {
    std::unordered_map<std::size_t, Credibility> level_of;
    level_of.reserve(assignments.size());
    for (const auto& a : assignments) level_of[a.sample_id] = a.level;

    BatchPartition out;
    for (std::size_t id : batch_ids) {
        auto it = level_of.find(id);
        if (it == level_of.end()) {
            throw InternalConsistency("no credibility assignment for unlabeled sample " + std::to_string(id));
        }
        switch (it->second) {
            case Credibility::High: out.high.push_back(id); break;
            case Credibility::Medium: out.mid.push_back(id); break;
            case Credibility::Low: out.low.push_back(id); break;
        }
    }
    return out;
}

}  // namespace mcdl
