#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mcdl/matrix.hpp"

namespace mcdl {

struct ModelShape {
    std::size_t input_dim = 16;
    std::size_t hidden_dim = 64;
    std::size_t feature_dim = 32;
    std::size_t num_classes = 10;

    bool operator==(const ModelShape&) const = default;
};

// Encoder f: x -> normalize(W2 tanh(W1 x + b1) + b2)
// Classifier g: z -> softmax(Wc^T z + bc)
//
// The same struct doubles as the gradient container (see backprop).
struct ModelParams {
    ModelShape shape;
    Matrix w1;  // hidden x input
    Matrix b1;  // 1 x hidden
    Matrix w2;  // feature x hidden
    Matrix b2;  // 1 x feature
    Matrix wc;  // feature x classes
    Matrix bc;  // 1 x classes

    static ModelParams zeros(const ModelShape& shape);

    // Xavier-uniform weights, zero biases except b2 (small uniform so the
    // encoder output never starts at the origin).
    static ModelParams init(const ModelShape& shape, std::uint64_t seed);

    std::array<Matrix*, 6> tensors();
    std::array<const Matrix*, 6> tensors() const;
    static constexpr std::array<const char*, 6> tensor_names = {"w1", "b1", "w2", "b2", "wc", "bc"};

    std::size_t parameter_count() const;

    bool operator==(const ModelParams&) const = default;
};

// Per-sample intermediates kept for the backward pass.
struct ForwardCache {
    std::vector<double> x;
    std::vector<double> hidden;  // tanh activations
    std::vector<double> pre_norm;
    double norm = 0.0;
    std::vector<double> z;
    std::vector<double> logits;
    std::vector<double> probs;
};

std::vector<double> encode(const ModelParams& params, std::span<const double> x);
std::vector<double> classify(const ModelParams& params, std::span<const double> z);

ForwardCache forward(const ModelParams& params, std::span<const double> x);
std::vector<ForwardCache> forward_batch(const ModelParams& params, const Matrix& x);

// Probability rows for a batch of inputs.
Matrix predict_proba(const ModelParams& params, const Matrix& x);

// Accumulates into `grads` the parameter gradient of one sample, given the
// loss gradient w.r.t. its feature z (grad_z) and its probability vector
// (grad_p). Either upstream span may be empty, meaning zero.
void backprop(const ModelParams& params, const ForwardCache& cache, std::span<const double> grad_z,
              std::span<const double> grad_p, ModelParams& grads);

}  // namespace mcdl
