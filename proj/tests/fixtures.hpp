#pragma once

#include <random>
#include <vector>

#include "mcdl/model.hpp"
#include "mcdl/objective.hpp"
#include "oracles.hpp"

namespace fixture {

// Small random model; width kept <= 32.
inline mcdl::ModelParams small_model(std::mt19937_64& rng, std::size_t input = 5, std::size_t classes = 4) {
    std::uniform_int_distribution<std::size_t> hidden(4, 12);
    std::uniform_int_distribution<std::size_t> feat(3, 8);
    mcdl::ModelShape s;
    s.input_dim = input;
    s.hidden_dim = hidden(rng);
    s.feature_dim = feat(rng);
    s.num_classes = classes;
    auto p = mcdl::ModelParams::init(s, rng());
    // nonzero biases so their gradients are exercised too
    std::normal_distribution<double> n(0.0, 0.3);
    for (double& v : p.b1.values()) v = n(rng);
    for (double& v : p.bc.values()) v = n(rng);
    return p;
}

inline mcdl::Matrix random_inputs(std::size_t rows, std::size_t dims, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.5);
    mcdl::Matrix m(rows, dims);
    for (double& v : m.values()) v = n(rng);
    return m;
}

inline mcdl::Matrix random_distributions(std::size_t rows, std::size_t classes, std::mt19937_64& rng) {
    mcdl::Matrix m(rows, classes);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto v = oracle::random_simplex(classes, rng);
        std::copy(v.begin(), v.end(), m.row(i).begin());
    }
    return m;
}

inline mcdl::Matrix one_hot_rows(std::size_t rows, std::size_t classes, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, classes - 1);
    mcdl::Matrix m(rows, classes);
    for (std::size_t i = 0; i < rows; ++i) m(i, pick(rng)) = 1.0;
    return m;
}

// A batch that exercises every loss branch: labeled and High anchors sharing
// classes, mixed High/Medium samples and self-distillation rows.
inline mcdl::ObjectiveBatch random_batch(const mcdl::ModelShape& s, std::mt19937_64& rng) {
    const std::size_t C = s.num_classes;
    mcdl::ObjectiveBatch b;
    std::uniform_int_distribution<std::size_t> n_lab(2, 4), n_high(1, 3), n_mix(1, 3), n_self(1, 4);
    std::uniform_int_distribution<std::size_t> cls(0, 1);  // few classes so positives exist
    const std::size_t nl = n_lab(rng), nh = n_high(rng);
    b.contrastive_x = random_inputs(nl + nh, s.input_dim, rng);
    for (std::size_t i = 0; i < nl + nh; ++i) b.contrastive_labels.push_back(cls(rng));
    for (std::size_t i = 0; i < nl; ++i) b.labeled_anchors.push_back(i);
    for (std::size_t i = nl; i < nl + nh; ++i) b.high_anchors.push_back(i);

    const std::size_t mh = n_mix(rng), mm = n_mix(rng);
    b.mixed_high_x = random_inputs(mh, s.input_dim, rng);
    // mixed one-hot labels: convex combination of two one-hots
    b.mixed_high_y = mcdl::Matrix(mh, C);
    std::uniform_real_distribution<double> w(0.5, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, C - 1);
    for (std::size_t i = 0; i < mh; ++i) {
        const double d = w(rng);
        b.mixed_high_y(i, pick(rng)) += d;
        b.mixed_high_y(i, pick(rng)) += 1.0 - d;
    }
    b.mixed_mid_x = random_inputs(mm, s.input_dim, rng);
    b.mixed_mid_y = random_distributions(mm, C, rng);

    const std::size_t ns = n_self(rng);
    b.self_x = random_inputs(ns, s.input_dim, rng);
    b.self_targets = random_distributions(ns, C, rng);
    return b;
}

}  // namespace fixture
