#include "mcdl/eval.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "mcdl/error.hpp"
#include "mcdl/losses.hpp"
#include "mcdl/matrix.hpp"

namespace mcdl {

namespace {

struct Assignment {
    std::vector<std::size_t> col_of_row;
    std::int64_t cost = 0;
    std::vector<std::int64_t> row_potential;
    std::vector<std::int64_t> col_potential;
};

// O(n^3) shortest-augmenting-path Hungarian algorithm for square minimum-cost
// assignment. Potentials satisfy cost[i][j] - u[i] - v[j] >= 0 with equality
// on the returned assignment.
Assignment solve_min_cost(const std::vector<std::vector<std::int64_t>>& cost) {
    const std::size_t n = cost.size();
    constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
    // 1-based with a virtual column 0
    std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        row_of_col[0] = i;
        std::size_t j0 = 0;
        std::vector<std::int64_t> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = row_of_col[j0];
            std::int64_t delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of_col[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment a;
    a.col_of_row.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        if (row_of_col[j] != 0) a.col_of_row[row_of_col[j] - 1] = j - 1;
    }
    for (std::size_t i = 0; i < n; ++i) a.cost += cost[i][a.col_of_row[i]];
    a.row_potential.assign(u.begin() + 1, u.end());
    a.col_potential.assign(v.begin() + 1, v.end());
    return a;
}

// Optimal cost of assigning `rows` to `cols` (same size) in `cost`.
Assignment solve_sub(const std::vector<std::vector<std::int64_t>>& cost, const std::vector<std::size_t>& rows,
                     const std::vector<std::size_t>& cols) {
    std::vector<std::vector<std::int64_t>> sub(rows.size(), std::vector<std::int64_t>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b) sub[a][b] = cost[rows[a]][cols[b]];
    return solve_min_cost(sub);
}

}  // namespace

std::vector<std::size_t> hungarian_match(const CountMatrix& confusion) {
    const std::size_t n = confusion.size();
    for (const auto& row : confusion) {
        if (row.size() != n) throw InvalidInput("hungarian_match: confusion matrix must be square");
        for (auto v : row) {
            if (v < 0) throw InvalidInput("hungarian_match: counts must be nonnegative");
        }
    }
    if (n == 0) return {};

    std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost[i][j] = -confusion[i][j];

    const Assignment best = solve_min_cost(cost);
    std::vector<std::size_t> sigma = best.col_of_row;
    const auto tight = [&](std::size_t r, std::size_t c) {
        return cost[r][c] - best.row_potential[r] - best.col_potential[c] == 0;
    };

    // Lexicographic refinement: fix rows in order, each to the smallest column
    // that still admits an optimal completion. Only tight edges can appear in
    // an optimal assignment, which keeps the number of re-solves small.
    std::int64_t prefix_cost = 0;
    std::vector<bool> col_used(n, false);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < sigma[r]; ++c) {
            if (col_used[c] || !tight(r, c)) continue;
            std::vector<std::size_t> rows, cols;
            for (std::size_t rr = r + 1; rr < n; ++rr) rows.push_back(rr);
            for (std::size_t cc = 0; cc < n; ++cc) {
                if (!col_used[cc] && cc != c) cols.push_back(cc);
            }
            const Assignment rest = solve_sub(cost, rows, cols);
            if (prefix_cost + cost[r][c] + rest.cost == best.cost) {
                sigma[r] = c;
                for (std::size_t k = 0; k < rows.size(); ++k) sigma[rows[k]] = cols[rest.col_of_row[k]];
                break;
            }
        }
        col_used[sigma[r]] = true;
        prefix_cost += cost[r][sigma[r]];
    }
    return sigma;
}

AccReport clustering_acc(std::span<const std::size_t> predictions, std::span<const std::size_t> truth,
                         std::size_t num_classes, const std::vector<bool>& is_old_class) {
    if (predictions.size() != truth.size()) throw InvalidInput("clustering_acc: prediction/truth length mismatch");
    if (is_old_class.size() != num_classes) throw InvalidInput("clustering_acc: old-class mask length mismatch");
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= num_classes || predictions[i] >= num_classes) {
            throw InvalidInput("clustering_acc: label outside the declared class count");
        }
    }

    CountMatrix confusion(num_classes, std::vector<std::int64_t>(num_classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) ++confusion[predictions[i]][truth[i]];

    AccReport r;
    r.matching = hungarian_match(confusion);

    std::vector<std::size_t> per_class_total(num_classes, 0), per_class_hit(num_classes, 0);
    std::size_t hit_old = 0, hit_new = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const std::size_t t = truth[i];
        const bool hit = r.matching[predictions[i]] == t;
        ++per_class_total[t];
        if (hit) ++per_class_hit[t];
        if (is_old_class[t]) {
            ++r.n_old;
            hit_old += hit;
        } else {
            ++r.n_new;
            hit_new += hit;
        }
    }
    r.n_all = truth.size();
    const auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : double(a) / double(b); };
    r.acc_all = ratio(hit_old + hit_new, r.n_all);
    r.acc_old = ratio(hit_old, r.n_old);
    r.acc_new = ratio(hit_new, r.n_new);

    double bal_all = 0, bal_old = 0, bal_new = 0;
    std::size_t k_all = 0, k_old = 0, k_new = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (per_class_total[c] == 0) continue;
        const double a = ratio(per_class_hit[c], per_class_total[c]);
        bal_all += a;
        ++k_all;
        if (is_old_class[c]) {
            bal_old += a;
            ++k_old;
        } else {
            bal_new += a;
            ++k_new;
        }
    }
    r.balanced_all = k_all ? bal_all / double(k_all) : 0.0;
    r.balanced_old = k_old ? bal_old / double(k_old) : 0.0;
    r.balanced_new = k_new ? bal_new / double(k_new) : 0.0;
    return r;
}

SelectionStats selection_stats(std::span<const CredibilityAssignment> assignments,
                               std::span<const MemoryBankPair> banks, std::span<const std::size_t> truth,
                               std::size_t epoch, const SelectionOptions& options) {
    if (assignments.size() != banks.size()) throw InvalidInput("selection_stats: one assignment per bank required");
    const auto to_class = [&](std::size_t cluster) {
        if (options.cluster_to_class.empty()) return cluster;
        if (cluster >= options.cluster_to_class.size()) throw InvalidInput("selection_stats: cluster id out of range");
        return options.cluster_to_class[cluster];
    };

    SelectionStats s;
    s.epoch = epoch;
    std::size_t high_hit = 0, mid_hit = 0, cross_hit = 0;
    for (std::size_t k = 0; k < banks.size(); ++k) {
        const auto& a = assignments[k];
        const auto& bank = banks[k];
        if (a.sample_id != bank.sample_id()) throw InternalConsistency("selection_stats: assignment/bank order differs");
        if (bank.sample_id() >= truth.size()) throw InvalidInput("selection_stats: sample id outside ground truth");
        const std::size_t t = truth[bank.sample_id()];
        switch (a.level) {
            case Credibility::High:
                ++s.n_high;
                if (!a.pseudo_label) throw InternalConsistency("High assignment without a pseudo label");
                high_hit += to_class(*a.pseudo_label) == t;
                break;
            case Credibility::Medium: {
                ++s.n_mid;
                const auto y = soft_pseudo_label(bank, options.tau_u, options.renormalize);
                mid_hit += to_class(argmax(y)) == t;
                break;
            }
            case Credibility::Low: ++s.n_low; break;
        }
        if (bank.size() > 0) {
            const std::size_t w = argmax(bank.weak_history().back());
            if (w == argmax(bank.strong_history().back())) {
                ++s.n_cross_view;
                cross_hit += to_class(w) == t;
            }
        }
    }
    if (s.n_high) s.high_accuracy = double(high_hit) / double(s.n_high);
    if (s.n_mid) s.mid_accuracy = double(mid_hit) / double(s.n_mid);
    if (s.n_cross_view) s.cross_view_accuracy = double(cross_hit) / double(s.n_cross_view);
    return s;
}

}  // namespace mcdl
