#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "mcdl/error.hpp"
#include "mcdl/losses.hpp"
#include "mcdl/objective.hpp"
#include "oracles.hpp"

using namespace mcdl;

namespace {

Matrix unit_rows(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = oracle::random_unit(d, rng);
        std::copy(v.begin(), v.end(), m.row(i).begin());
    }
    return m;
}

}  // namespace

TEST_CASE("contrastive loss of two identical samples is zero") {
    const Matrix z = from_rows({{0.6, 0.8}, {0.6, 0.8}});
    const std::vector<std::size_t> labels = {4, 4};
    CHECK(std::abs(sup_contrastive_loss(z, labels, 0.04).value) < 1e-12);
}

TEST_CASE("contrastive loss without positives is zero") {
    const Matrix z = from_rows({{1.0, 0.0}, {0.0, 1.0}, {0.6, 0.8}});
    const std::vector<std::size_t> labels = {0, 1, 2};
    const auto r = sup_contrastive_loss(z, labels, 0.04, true);
    CHECK(r.value == 0.0);
    CHECK(r.active_anchors == 0);
    for (double v : r.grad.values()) CHECK(v == 0.0);
}

TEST_CASE("contrastive loss needs two samples") {
    const Matrix z = from_rows({{1.0, 0.0}});
    const std::vector<std::size_t> labels = {0};
    CHECK_THROWS_AS(sup_contrastive_loss(z, labels, 0.04), InsufficientBatch);
}

TEST_CASE("contrastive loss three-item example") {
    const Matrix z = from_rows({{1.0, 0.0}, {0.8, 0.6}, {0.0, 1.0}});
    const std::vector<std::size_t> labels = {0, 0, 1};
    // anchor 0: -log(e^{.8/t} / (e^{.8/t} + e^{0}))
    // anchor 1: -log(e^{.8/t} / (e^{.8/t} + e^{.6/t}))
    // anchor 2: no positive
    const double t = 0.04;
    const double a0 = -std::log(std::exp(0.8 / t) / (std::exp(0.8 / t) + 1.0));
    const double a1 = -std::log(std::exp(0.8 / t) / (std::exp(0.8 / t) + std::exp(0.6 / t)));
    const auto r = sup_contrastive_loss(z, labels, t);
    CHECK(r.value == doctest::Approx((a0 + a1) / 2.0).epsilon(1e-13));
    CHECK(r.active_anchors == 2);
}

TEST_CASE("contrastive loss matches the direct oracle") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
        const auto z = unit_rows(n, 5, rng);
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) l = std::uniform_int_distribution<std::size_t>(0, 2)(rng);
        std::vector<std::size_t> anchors;
        for (std::size_t i = 0; i < n; ++i)
            if (rng() % 2) anchors.push_back(i);
        const double got = sup_contrastive_loss(z, labels, anchors, 0.04).value;
        CHECK(got == doctest::Approx(oracle::sup_contrastive(oracle::rows_of(z), labels, anchors, 0.04)).epsilon(1e-11));
    }
}

TEST_CASE("contrastive loss is nonnegative") {
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 50; ++trial) {
        const auto z = unit_rows(6, 4, rng);
        std::vector<std::size_t> labels = {0, 0, 1, 1, 2, 0};
        CHECK(sup_contrastive_loss(z, labels, 0.1).value >= 0.0);
    }
}

TEST_CASE("soft pseudo labels") {
    const double tau = 0.7;
    SUBCASE("uniform banks") {
        MemoryBankPair bank(0, 4, 5);
        for (int e = 0; e < 4; ++e) bank.record_epoch(std::vector<double>(5, 0.2), std::vector<double>(5, 0.2));
        for (double v : soft_pseudo_label(bank, tau, false)) CHECK(v == doctest::Approx(1.0 / (tau * 5)).epsilon(1e-15));
        for (double v : soft_pseudo_label(bank, tau, true)) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
    }
    SUBCASE("one-hot banks") {
        MemoryBankPair bank(0, 3, 4);
        const std::vector<double> e2 = {0, 0, 1, 0};
        for (int e = 0; e < 3; ++e) bank.record_epoch(e2, e2);
        const auto lit = soft_pseudo_label(bank, tau, false);
        CHECK(lit[2] == doctest::Approx(1.0 / 0.7).epsilon(1e-15));
        CHECK(lit[2] == doctest::Approx(1.4286).epsilon(1e-4));
        CHECK(lit[0] == 0.0);
        CHECK(soft_pseudo_label(bank, tau, true) == e2);
    }
    SUBCASE("mixed histories match direct averaging") {
        std::mt19937_64 rng(3);
        MemoryBankPair bank(0, 6, 4);
        oracle::Rows w, s;
        for (int e = 0; e < 9; ++e) {
            auto a = oracle::random_simplex(4, rng), b = oracle::random_simplex(4, rng);
            bank.record_epoch(a, b);
            w.push_back(a);
            s.push_back(b);
            if (w.size() > 6) {
                w.erase(w.begin());
                s.erase(s.begin());
            }
        }
        const auto y = soft_pseudo_label(bank, tau, false);
        for (std::size_t c = 0; c < 4; ++c)
            CHECK(y[c] == doctest::Approx(oracle::soft_label_entry(w, s, c, tau)).epsilon(1e-14));
    }
    SUBCASE("bank not full") {
        MemoryBankPair bank(0, 4, 2);
        bank.record_epoch(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5});
        CHECK_THROWS_AS(soft_pseudo_label(bank, tau, true), WarmUpError);
    }
}

TEST_CASE("mixmatch interpolation") {
    const std::vector<double> x1 = {1.0, 2.0, -4.0}, x2 = {3.0, -2.0, 0.0};
    const std::vector<double> y1 = {1.0, 0.0}, y2 = {0.25, 0.75};
    const auto mid = mixmatch_mix(x1, y1, x2, y2, 0.5);
    CHECK(mid.x == std::vector<double>{2.0, 0.0, -2.0});
    CHECK(mid.y == std::vector<double>{0.625, 0.375});
    CHECK(mid.weight == 0.5);

    const auto m = mixmatch_mix(x1, y1, x2, y2, 0.2);
    CHECK(m.weight == doctest::Approx(0.8));
    for (std::size_t i = 0; i < 3; ++i) CHECK(m.x[i] == doctest::Approx(0.8 * x1[i] + 0.2 * x2[i]).epsilon(1e-15));
    // delta and 1 - delta give the same sample
    const auto m2 = mixmatch_mix(x1, y1, x2, y2, 0.8);
    CHECK(m2.x == m.x);

    std::mt19937_64 rng(0);
    for (int t = 0; t < 20; ++t) {
        const double d = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const auto same = mixmatch_mix(x1, y1, x1, y1, d);
        for (std::size_t i = 0; i < 3; ++i) CHECK(same.x[i] == doctest::Approx(x1[i]).epsilon(1e-15));
    }
    CHECK_THROWS_AS(mixmatch_mix(x1, y1, y1, y2, 0.5), InvalidInput);
}

TEST_CASE("beta sampling stays in range with mean one half") {
    std::mt19937_64 rng(12);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double d = sample_beta(0.5, rng);
        REQUIRE(d >= 0.0);
        REQUIRE(d <= 1.0);
        sum += d;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("semi loss") {
    SUBCASE("exact predictions give zero") {
        const Matrix p = from_rows({{0.0, 1.0, 0.0}});
        const Matrix q = from_rows({{0.2, 0.3, 0.5}});
        const auto r = semi_loss(p, p, q, q);
        CHECK(r.cross_entropy == 0.0);
        CHECK(r.squared_error == 0.0);
    }
    SUBCASE("two-sample hand computation") {
        const Matrix ph = from_rows({{0.5, 0.25, 0.25}});
        const Matrix yh = from_rows({{1.0, 0.0, 0.0}});
        const Matrix pm = from_rows({{0.5, 0.5, 0.0}});
        const Matrix ym = from_rows({{0.0, 1.0, 0.0}});
        const auto r = semi_loss(ph, yh, pm, ym);
        CHECK(r.cross_entropy == doctest::Approx(std::log(2.0)).epsilon(1e-15));
        CHECK(r.squared_error == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(r.value == doctest::Approx(std::log(2.0) + 0.5).epsilon(1e-15));
    }
    SUBCASE("both sets empty") {
        const auto r = semi_loss(Matrix(0, 3), Matrix(0, 3), Matrix(0, 3), Matrix(0, 3));
        CHECK(r.empty);
        CHECK(r.value == 0.0);
    }
    SUBCASE("random batches match the oracle") {
        std::mt19937_64 rng(21);
        for (int t = 0; t < 100; ++t) {
            const std::size_t nh = rng() % 5, nm = rng() % 5;
            const auto ph = fixture::random_distributions(nh, 4, rng), yh = fixture::one_hot_rows(nh, 4, rng);
            const auto pm = fixture::random_distributions(nm, 4, rng), ym = fixture::random_distributions(nm, 4, rng);
            const double want = oracle::semi(oracle::rows_of(ph), oracle::rows_of(yh), oracle::rows_of(pm),
                                             oracle::rows_of(ym));
            CHECK(semi_loss(ph, yh, pm, ym).value == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("self loss") {
    const Matrix uniform(3, 10, 0.1);
    const auto r = self_loss(uniform, uniform, 0.7);
    CHECK(std::abs(r.value - std::log(10.0) / 0.7) < 1e-12);
    CHECK(r.value == doctest::Approx(3.2894).epsilon(1e-4));

    const Matrix hot = from_rows({{0.0, 1.0, 0.0}});
    CHECK(self_loss(hot, hot, 0.7).value == 0.0);

    // zero probability hits the floor instead of producing infinity
    const Matrix p = from_rows({{1.0, 0.0}});
    const Matrix q = from_rows({{0.0, 1.0}});
    CHECK(self_loss(p, q, 0.5).value == doctest::Approx(-std::log(1e-12) / 0.5));

    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng() % 8;
        const auto pp = fixture::random_distributions(n, 5, rng), qq = fixture::random_distributions(n, 5, rng);
        CHECK(self_loss(pp, qq, 0.7).value ==
              doctest::Approx(oracle::self(oracle::rows_of(pp), oracle::rows_of(qq), 0.7)).epsilon(1e-12));
    }
}

TEST_CASE("total loss composition") {
    CHECK(total_loss(1.0, 2.0, 3.0, 0.5) == 3.5);
    CHECK(total_loss(1.25, 2.0, 3.0, 0.0) == 1.25);
    CHECK(LossConfig{}.lambda == 0.35);
}

TEST_CASE("loss config validation") {
    LossConfig c;
    CHECK_NOTHROW(c.validate());
    c.tau_s = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = LossConfig{};
    c.lambda = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("each loss branch passes the finite-difference check") {
    std::mt19937_64 rng(99);
    const LossConfig cfg;
    const BranchSwitches branches[] = {
        {true, false, false, false}, {false, true, false, false}, {false, false, true, false}, {false, false, false, true}};
    for (const auto& sw : branches) {
        for (int trial = 0; trial < 3; ++trial) {
            const auto p = fixture::small_model(rng);
            const auto batch = fixture::random_batch(p.shape, rng);
            const auto res = evaluate_objective(p, batch, cfg, sw, true);
            const auto chk = oracle::finite_difference(
                p, res.grads, [&](const ModelParams& q) { return objective_value(q, batch, cfg, sw).total; });
            CHECK(chk.max_rel_error < 1e-4);
        }
    }
}

TEST_CASE("objective total equals the weighted branch sum") {
    std::mt19937_64 rng(7);
    LossConfig cfg;
    cfg.lambda = 0.6;
    for (int t = 0; t < 10; ++t) {
        const auto p = fixture::small_model(rng);
        const auto b = fixture::random_batch(p.shape, rng);
        const auto l = objective_value(p, b, cfg, BranchSwitches{});
        CHECK(std::abs(l.total - (l.labeled_sup + l.sup + 0.6 * (l.semi + l.self))) < 1e-12);
        CHECK(std::abs(l.semi - (l.semi_ce + l.semi_mse)) < 1e-12);
    }
}
