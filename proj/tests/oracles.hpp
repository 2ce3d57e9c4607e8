#pragma once
// Independent reference implementations used by the unit and acceptance
// tests. They are deliberately written the slow, obvious way and share no code
// with the library beyond plain containers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "mcdl/matrix.hpp"
#include "mcdl/model.hpp"

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline Rows rows_of(const mcdl::Matrix& m) {
    Rows out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

// Best permutation by exhaustive search. Permutations are visited in
// lexicographic order and only a strictly better total replaces the incumbent,
// so the lexicographically smallest optimum wins.
inline std::vector<std::size_t> brute_force_matching(const std::vector<std::vector<std::int64_t>>& w) {
    const std::size_t n = w.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best = perm;
    std::int64_t best_total = -1;
    do {
        std::int64_t total = 0;
        for (std::size_t r = 0; r < n; ++r) total += w[r][perm[r]];
        if (total > best_total) {
            best_total = total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline std::int64_t matching_total(const std::vector<std::vector<std::int64_t>>& w,
                                   const std::vector<std::size_t>& m) {
    std::int64_t t = 0;
    for (std::size_t r = 0; r < m.size(); ++r) t += w[r][m[r]];
    return t;
}

// Level 0 = Low, 1 = Medium, 2 = High, evaluated straight from the three
// conditions with real-valued thresholds.
struct Level {
    int level = 0;
    std::size_t label = 0;
};

inline std::size_t first_max(const std::vector<std::size_t>& c) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < c.size(); ++k)
        if (c[k] > c[best]) best = k;
    return best;
}

inline Level credibility(const std::vector<std::size_t>& counts_w, const std::vector<std::size_t>& counts_s,
                         std::size_t mu, bool weak_floor = false) {
    const double max_w = static_cast<double>(counts_w[first_max(counts_w)]);
    const double max_s = static_cast<double>(counts_s[first_max(counts_s)]);
    const bool a = max_w > static_cast<double>(mu) * 3.0 / 4.0;
    const bool b = (weak_floor ? max_w : max_s) > static_cast<double>(mu) / 4.0;
    const bool c = first_max(counts_w) == first_max(counts_s);
    if (a && b && c) return {2, first_max(counts_w)};
    if (a && b) return {1, 0};
    return {0, 0};
}

// Every length-k vector of nonnegative integers summing to total.
inline void compositions(std::size_t total, std::size_t k, std::vector<std::vector<std::size_t>>& out,
                         std::vector<std::size_t> prefix = {}) {
    if (prefix.size() + 1 == k) {
        prefix.push_back(total);
        out.push_back(prefix);
        return;
    }
    for (std::size_t v = 0; v <= total; ++v) {
        auto next = prefix;
        next.push_back(v);
        compositions(total - v, k, out, next);
    }
}

// Contrastive loss by direct exponentials (no log-sum-exp).
inline double sup_contrastive(const Rows& z, const std::vector<std::size_t>& labels,
                              const std::vector<std::size_t>& anchors, double tau) {
    double total = 0.0;
    int used = 0;
    for (std::size_t i : anchors) {
        double denom = 0.0;
        for (std::size_t n = 0; n < z.size(); ++n) {
            if (n == i) continue;
            double s = 0.0;
            for (std::size_t k = 0; k < z[i].size(); ++k) s += z[i][k] * z[n][k];
            denom += std::exp(s / tau);
        }
        double sum = 0.0;
        int positives = 0;
        for (std::size_t q = 0; q < z.size(); ++q) {
            if (q == i || labels[q] != labels[i]) continue;
            double s = 0.0;
            for (std::size_t k = 0; k < z[i].size(); ++k) s += z[i][k] * z[q][k];
            sum += -std::log(std::exp(s / tau) / denom);
            ++positives;
        }
        if (positives == 0) continue;
        total += sum / positives;
        ++used;
    }
    return used == 0 ? 0.0 : total / used;
}

inline double semi(const Rows& p_high, const Rows& y_high, const Rows& p_mid, const Rows& y_mid) {
    double ce = 0.0;
    for (std::size_t i = 0; i < p_high.size(); ++i)
        for (std::size_t c = 0; c < p_high[i].size(); ++c)
            if (y_high[i][c] != 0.0) ce += -y_high[i][c] * std::log(std::max(p_high[i][c], 1e-12));
    if (!p_high.empty()) ce /= static_cast<double>(p_high.size());
    double mse = 0.0;
    for (std::size_t i = 0; i < p_mid.size(); ++i)
        for (std::size_t c = 0; c < p_mid[i].size(); ++c) mse += (y_mid[i][c] - p_mid[i][c]) * (y_mid[i][c] - p_mid[i][c]);
    if (!p_mid.empty()) mse /= static_cast<double>(p_mid.size());
    return ce + mse;
}

inline double self(const Rows& p, const Rows& q, double tau_u) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t c = 0; c < p[i].size(); ++c) total += -(q[i][c] / tau_u) * std::log(std::max(p[i][c], 1e-12));
    return p.empty() ? 0.0 : total / static_cast<double>(p.size());
}

inline double soft_label_entry(const Rows& weak, const Rows& strong, std::size_t c, double tau_u) {
    double a = 0.0, b = 0.0;
    for (const auto& p : weak) a += p[c];
    for (const auto& p : strong) b += p[c];
    return (a / weak.size() + b / strong.size()) / (2.0 * tau_u);
}

// Central finite differences over every parameter coordinate.
struct GradCheck {
    double max_rel_error = 0.0;
    double max_abs_error_small = 0.0;  // coordinates where both gradients are tiny
    std::size_t coordinates = 0;
};

inline GradCheck finite_difference(mcdl::ModelParams params, const mcdl::ModelParams& analytic,
                                   const std::function<double(const mcdl::ModelParams&)>& f, double step = 1e-5,
                                   double tiny = 1e-6) {
    GradCheck out;
    auto tensors = params.tensors();
    auto grads = analytic.tensors();
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        auto vals = tensors[t]->values();
        auto g = grads[t]->values();
        for (std::size_t k = 0; k < vals.size(); ++k) {
            const double keep = vals[k];
            vals[k] = keep + step;
            const double up = f(params);
            vals[k] = keep - step;
            const double down = f(params);
            vals[k] = keep;
            const double numeric = (up - down) / (2.0 * step);
            const double a = g[k];
            const double scale = std::max(std::abs(a), std::abs(numeric));
            if (scale < tiny) {
                out.max_abs_error_small = std::max(out.max_abs_error_small, std::abs(a - numeric));
            } else {
                out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / scale);
            }
            ++out.coordinates;
        }
    }
    return out;
}

inline std::vector<double> random_simplex(std::size_t c, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(c);
    double s = 0.0;
    for (double& x : v) s += (x = e(rng));
    for (double& x : v) x /= s;
    return v;
}

inline std::vector<double> random_unit(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(d);
    double s = 0.0;
    for (double& x : v) s += (x = n(rng)) * x;
    s = std::sqrt(s);
    for (double& x : v) x /= s;
    return v;
}

}  // namespace oracle
