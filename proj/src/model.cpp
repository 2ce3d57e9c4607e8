#include "mcdl/model.hpp"

#include <cmath>
#include <string>

#include "mcdl/error.hpp"

namespace mcdl {

namespace {

void check_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw InvalidInput(std::string(what) + ": expected dimension " + std::to_string(want) + ", got " +
                           std::to_string(got));
    }
}

void xavier(Matrix& m, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : m.values()) v = dist(rng);
}

std::vector<double> classifier_logits(const ModelParams& p, std::span<const double> z) {
    const std::size_t C = p.shape.num_classes;
    std::vector<double> logits(p.bc.values().begin(), p.bc.values().end());
    for (std::size_t f = 0; f < z.size(); ++f) {
        auto wrow = p.wc.row(f);
        for (std::size_t k = 0; k < C; ++k) logits[k] += z[f] * wrow[k];
    }
    require_finite(logits, "classifier.logits");
    return logits;
}

}  // namespace

ModelParams ModelParams::zeros(const ModelShape& s) {
    ModelParams p;
    p.shape = s;
    p.w1 = Matrix(s.hidden_dim, s.input_dim);
    p.b1 = Matrix(1, s.hidden_dim);
    p.w2 = Matrix(s.feature_dim, s.hidden_dim);
    p.b2 = Matrix(1, s.feature_dim);
    p.wc = Matrix(s.feature_dim, s.num_classes);
    p.bc = Matrix(1, s.num_classes);
    return p;
}

ModelParams ModelParams::init(const ModelShape& s, std::uint64_t seed) {
    if (s.input_dim == 0 || s.hidden_dim == 0 || s.feature_dim == 0 || s.num_classes < 2) {
        throw InvalidInput("model shape has a zero dimension or fewer than two classes");
    }
    ModelParams p = zeros(s);
    std::mt19937_64 rng(seed);
    xavier(p.w1, s.input_dim, s.hidden_dim, rng);
    xavier(p.w2, s.hidden_dim, s.feature_dim, rng);
    xavier(p.wc, s.feature_dim, s.num_classes, rng);
    std::uniform_real_distribution<double> small(-0.1, 0.1);
    for (double& v : p.b2.values()) v = small(rng);
    return p;
}

std::array<Matrix*, 6> ModelParams::tensors() { return {&w1, &b1, &w2, &b2, &wc, &bc}; }

std::array<const Matrix*, 6> ModelParams::tensors() const { return {&w1, &b1, &w2, &b2, &wc, &bc}; }

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* t : tensors()) n += t->size();
    return n;
}

ForwardCache forward(const ModelParams& p, std::span<const double> x) {
    const ModelShape& s = p.shape;
    check_dim(x.size(), s.input_dim, "encode");

    ForwardCache c;
    c.x.assign(x.begin(), x.end());

    c.hidden.resize(s.hidden_dim);
    for (std::size_t h = 0; h < s.hidden_dim; ++h) {
        c.hidden[h] = std::tanh(dot(p.w1.row(h), x) + p.b1(0, h));
    }

    c.pre_norm.resize(s.feature_dim);
    for (std::size_t f = 0; f < s.feature_dim; ++f) {
        c.pre_norm[f] = dot(p.w2.row(f), c.hidden) + p.b2(0, f);
    }
    require_finite(c.pre_norm, "encoder.pre_norm");
    c.norm = l2_norm(c.pre_norm);
    if (!(c.norm > 0.0)) throw NumericOverflow("encoder.pre_norm", "zero-norm feature cannot be normalized");

    c.z.resize(s.feature_dim);
    for (std::size_t f = 0; f < s.feature_dim; ++f) c.z[f] = c.pre_norm[f] / c.norm;

    c.logits = classifier_logits(p, c.z);
    c.probs = softmax(c.logits);
    return c;
}

std::vector<double> encode(const ModelParams& p, std::span<const double> x) { return forward(p, x).z; }

std::vector<double> classify(const ModelParams& p, std::span<const double> z) {
    check_dim(z.size(), p.shape.feature_dim, "classify");
    return softmax(classifier_logits(p, z));
}

std::vector<ForwardCache> forward_batch(const ModelParams& p, const Matrix& x) {
    std::vector<ForwardCache> out;
    out.reserve(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out.push_back(forward(p, x.row(i)));
    return out;
}

Matrix predict_proba(const ModelParams& p, const Matrix& x) {
    Matrix out(x.rows(), p.shape.num_classes);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto probs = classify(p, encode(p, x.row(i)));
        std::copy(probs.begin(), probs.end(), out.row(i).begin());
    }
    return out;
}

void backprop(const ModelParams& p, const ForwardCache& c, std::span<const double> grad_z,
              std::span<const double> grad_p, ModelParams& g) {
    const ModelShape& s = p.shape;
    const std::size_t C = s.num_classes;
    const std::size_t F = s.feature_dim;
    const std::size_t H = s.hidden_dim;

    std::vector<double> dz(F, 0.0);
    if (!grad_z.empty()) {
        check_dim(grad_z.size(), F, "backprop.grad_z");
        std::copy(grad_z.begin(), grad_z.end(), dz.begin());
    }

    if (!grad_p.empty()) {
        check_dim(grad_p.size(), C, "backprop.grad_p");
        // softmax Jacobian: dl_k = p_k (dp_k - sum_j dp_j p_j)
        const double inner = dot(grad_p, c.probs);
        std::vector<double> dlogits(C);
        for (std::size_t k = 0; k < C; ++k) dlogits[k] = c.probs[k] * (grad_p[k] - inner);
        require_finite(dlogits, "backprop.dlogits");

        for (std::size_t k = 0; k < C; ++k) g.bc(0, k) += dlogits[k];
        for (std::size_t f = 0; f < F; ++f) {
            auto wrow = p.wc.row(f);
            auto grow = g.wc.row(f);
            double acc = 0.0;
            for (std::size_t k = 0; k < C; ++k) {
                grow[k] += c.z[f] * dlogits[k];
                acc += wrow[k] * dlogits[k];
            }
            dz[f] += acc;
        }
    }

    // z = u / |u|  =>  du = (dz - z (z . dz)) / |u|
    const double zdz = dot(c.z, dz);
    std::vector<double> du(F);
    for (std::size_t f = 0; f < F; ++f) du[f] = (dz[f] - c.z[f] * zdz) / c.norm;
    require_finite(du, "backprop.d_pre_norm");

    std::vector<double> dh(H, 0.0);
    for (std::size_t f = 0; f < F; ++f) {
        g.b2(0, f) += du[f];
        auto wrow = p.w2.row(f);
        auto grow = g.w2.row(f);
        for (std::size_t h = 0; h < H; ++h) {
            grow[h] += du[f] * c.hidden[h];
            dh[h] += du[f] * wrow[h];
        }
    }

    for (std::size_t h = 0; h < H; ++h) {
        const double da = dh[h] * (1.0 - c.hidden[h] * c.hidden[h]);
        g.b1(0, h) += da;
        auto grow = g.w1.row(h);
        for (std::size_t i = 0; i < s.input_dim; ++i) grow[i] += da * c.x[i];
    }
}

}  // namespace mcdl
