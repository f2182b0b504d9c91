#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "doctest.h"
#include "hanecg/errors.hpp"
#include "hanecg/gradcheck.hpp"
#include "hanecg/layers.hpp"
#include "hanecg/rng.hpp"

using namespace hanecg;

namespace {

Tensor2 random_tensor(size_t rows, size_t cols, Rng& rng, double scale = 1.0) {
    Tensor2 t(rows, cols);
    for (double& v : t.values) v = rng.uniform(-scale, scale);
    return t;
}

std::vector<double> random_vec(size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-scale, scale);
    return v;
}

double dot_all(const Tensor2& a, const Tensor2& b) {
    REQUIRE(a.values.size() == b.values.size());
    return std::inner_product(a.values.begin(), a.values.end(), b.values.begin(), 0.0);
}

constexpr double kFdTol = 1e-4;

}  // namespace

TEST_SUITE("layers") {
    TEST_CASE("conv1d reproduces the hand example") {
        Tensor2 x(5, 1);
        x.values = {1, 2, 3, 4, 5};
        Conv1dParams p = Conv1dParams::zeros(1, 1, 3, 1);
        p.kernels = {1.0, 0.0, -1.0};
        Tensor2 y = conv1d_forward(x, p);
        REQUIRE(y.rows == 3);
        REQUIRE(y.cols == 1);
        CHECK(y.at(0, 0) == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(y.at(1, 0) == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(y.at(2, 0) == doctest::Approx(-2.0).epsilon(1e-12));
    }

    TEST_CASE("conv1d stride and bias") {
        Tensor2 x(6, 1);
        x.values = {1, 2, 3, 4, 5, 6};
        Conv1dParams p = Conv1dParams::zeros(1, 1, 2, 2);
        p.kernels = {1.0, 1.0};
        p.bias = {10.0};
        Tensor2 y = conv1d_forward(x, p);
        REQUIRE(y.rows == 3);  // (6-2)/2 + 1
        CHECK(y.at(0, 0) == doctest::Approx(13.0));
        CHECK(y.at(1, 0) == doctest::Approx(17.0));
        CHECK(y.at(2, 0) == doctest::Approx(21.0));
    }

    TEST_CASE("conv1d input validation") {
        Conv1dParams p = Conv1dParams::zeros(1, 2, 3, 1);
        Tensor2 wrong_channels(8, 1);
        CHECK_THROWS_AS(conv1d_forward(wrong_channels, p), ShapeError);
        Tensor2 too_short(2, 2);
        CHECK_THROWS_AS(conv1d_forward(too_short, p), ShapeError);
        Tensor2 bad(8, 2);
        bad.at(3, 1) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(conv1d_forward(bad, p), NumericError);
        Tensor2 ok(8, 2);
        Conv1dParams degenerate = p;
        degenerate.kernel_size = 0;
        CHECK_THROWS_AS(conv1d_forward(ok, degenerate), ConfigError);
        degenerate = p;
        degenerate.stride = 0;
        CHECK_THROWS_AS(conv1d_forward(ok, degenerate), ConfigError);
    }

    TEST_CASE("conv1d gradients match finite differences") {
        for (int inst = 0; inst < 20; ++inst) {
            Rng rng(1000 + inst);
            const size_t cin = 1 + rng.index(3);
            const size_t cout = 1 + rng.index(3);
            const size_t ksize = 2 + rng.index(4);
            const size_t stride = 1 + rng.index(2);
            const size_t t_in = ksize + rng.index(8);
            Conv1dParams p = Conv1dParams::zeros(cout, cin, ksize, stride);
            p.kernels = random_vec(p.kernels.size(), rng);
            p.bias = random_vec(p.bias.size(), rng);
            Tensor2 x = random_tensor(t_in, cin, rng);
            Tensor2 coeffs = random_tensor(p.out_steps(t_in), cout, rng);

            auto loss = [&]() { return dot_all(conv1d_forward(x, p), coeffs); };
            Conv1dGrad g = conv1d_backward(x, p, coeffs);

            CHECK(max_relative_fd_error(loss, p.kernels, g.kernels) < kFdTol);
            CHECK(max_relative_fd_error(loss, p.bias, g.bias) < kFdTol);
            CHECK(max_relative_fd_error(loss, x.values, g.input.values) < kFdTol);
        }
    }

    TEST_CASE("lstm shapes and state propagation") {
        Rng rng(5);
        LstmParams p = LstmParams::zeros(3, 4);
        p.wx = random_vec(p.wx.size(), rng, 0.5);
        p.wh = random_vec(p.wh.size(), rng, 0.5);
        p.b = random_vec(p.b.size(), rng, 0.5);
        Tensor2 x = random_tensor(6, 3, rng);
        std::vector<double> h0(4, 0.0), c0(4, 0.0);
        Tensor2 h = lstm_forward(x, p, h0, c0);
        REQUIRE(h.rows == 6);
        REQUIRE(h.cols == 4);
        CHECK(h.all_finite());

        // the last hidden state must depend on the first input
        Tensor2 x2 = x;
        x2.at(0, 0) += 1.0;
        Tensor2 h2 = lstm_forward(x2, p, h0, c0);
        double diff = 0.0;
        for (size_t j = 0; j < 4; ++j) diff += std::abs(h2.at(5, j) - h.at(5, j));
        CHECK(diff > 1e-8);
    }

    TEST_CASE("lstm with zero weights is silent") {
        LstmParams p = LstmParams::zeros(2, 3);
        Tensor2 x(4, 2, 1.0);
        std::vector<double> zero(3, 0.0);
        Tensor2 h = lstm_forward(x, p, zero, zero);
        // all gates sigmoid(0)=0.5, candidate tanh(0)=0 -> c stays 0
        for (double v : h.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
    }

    TEST_CASE("lstm gradients match finite differences") {
        for (int inst = 0; inst < 20; ++inst) {
            Rng rng(2000 + inst);
            const size_t d = 1 + rng.index(3);
            const size_t hdim = 1 + rng.index(4);
            const size_t t = 2 + rng.index(4);
            LstmParams p = LstmParams::zeros(d, hdim);
            p.wx = random_vec(p.wx.size(), rng, 0.7);
            p.wh = random_vec(p.wh.size(), rng, 0.7);
            p.b = random_vec(p.b.size(), rng, 0.7);
            Tensor2 x = random_tensor(t, d, rng);
            std::vector<double> h0 = random_vec(hdim, rng, 0.5);
            std::vector<double> c0 = random_vec(hdim, rng, 0.5);
            Tensor2 coeffs = random_tensor(t, hdim, rng);

            auto loss = [&]() {
                return dot_all(lstm_forward(x, p, h0, c0), coeffs);
            };
            LstmCache cache;
            lstm_forward(x, p, h0, c0, &cache);
            LstmGrad g = lstm_backward(p, cache, coeffs);

            CHECK(max_relative_fd_error(loss, p.wx, g.wx) < kFdTol);
            CHECK(max_relative_fd_error(loss, p.wh, g.wh) < kFdTol);
            CHECK(max_relative_fd_error(loss, p.b, g.b) < kFdTol);
            CHECK(max_relative_fd_error(loss, x.values, g.input.values) < kFdTol);
            CHECK(max_relative_fd_error(loss, h0, g.h0) < kFdTol);
            CHECK(max_relative_fd_error(loss, c0, g.c0) < kFdTol);
        }
    }

    TEST_CASE("attention matches a direct recomputation") {
        Tensor2 x(2, 1);
        x.values = {1.0, 2.0};
        AttentionParams p = AttentionParams::zeros(1);
        p.w = {0.3};
        p.b = -0.1;
        AttentionResult r = attention_pool(x, p);

        const double s0 = std::tanh(0.3 * 1.0 - 0.1);
        const double s1 = std::tanh(0.3 * 2.0 - 0.1);
        const double z = std::exp(s0) + std::exp(s1);
        const double a0 = std::exp(s0) / z, a1 = std::exp(s1) / z;
        REQUIRE(r.weights.size() == 2);
        CHECK(r.weights[0] == doctest::Approx(a0).epsilon(1e-12));
        CHECK(r.weights[1] == doctest::Approx(a1).epsilon(1e-12));
        CHECK(r.pooled[0] == doctest::Approx(a0 * 1.0 + a1 * 2.0).epsilon(1e-12));
    }

    TEST_CASE("attention weights form a probability vector") {
        for (int inst = 0; inst < 100; ++inst) {
            Rng rng(3000 + inst);
            const size_t n = 2 + rng.index(8);
            const size_t d = 1 + rng.index(6);
            Tensor2 x = random_tensor(n, d, rng, 3.0);
            AttentionParams p = AttentionParams::zeros(d);
            p.w = random_vec(d, rng);
            p.b = rng.uniform(-1, 1);
            AttentionResult r = attention_pool(x, p);
            double sum = 0.0;
            for (double a : r.weights) {
                CHECK(a >= 0.0);
                sum += a;
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }

    TEST_CASE("attention is permutation covariant") {
        for (int inst = 0; inst < 50; ++inst) {
            Rng rng(4000 + inst);
            const size_t n = 3 + rng.index(6);
            const size_t d = 1 + rng.index(4);
            Tensor2 x = random_tensor(n, d, rng, 2.0);
            AttentionParams p = AttentionParams::zeros(d);
            p.w = random_vec(d, rng);
            p.b = rng.uniform(-1, 1);

            std::vector<size_t> perm(n);
            for (size_t i = 0; i < n; ++i) perm[i] = i;
            shuffle(perm, rng);
            Tensor2 xp(n, d);
            for (size_t i = 0; i < n; ++i)
                for (size_t j = 0; j < d; ++j) xp.at(i, j) = x.at(perm[i], j);

            AttentionResult r = attention_pool(x, p);
            AttentionResult rp = attention_pool(xp, p);
            for (size_t i = 0; i < n; ++i)
                CHECK(std::abs(rp.weights[i] - r.weights[perm[i]]) < 1e-12);
            for (size_t j = 0; j < d; ++j)
                CHECK(std::abs(rp.pooled[j] - r.pooled[j]) < 1e-12);
        }
    }

    TEST_CASE("attention gradients match finite differences") {
        for (int inst = 0; inst < 20; ++inst) {
            Rng rng(5000 + inst);
            const size_t n = 2 + rng.index(5);
            const size_t d = 1 + rng.index(5);
            Tensor2 x = random_tensor(n, d, rng);
            AttentionParams p = AttentionParams::zeros(d);
            p.w = random_vec(d, rng);
            p.b = rng.uniform(-1, 1);
            std::vector<double> coeffs = random_vec(d, rng);

            auto loss = [&]() {
                AttentionResult r = attention_pool(x, p);
                return std::inner_product(coeffs.begin(), coeffs.end(), r.pooled.begin(), 0.0);
            };
            AttentionCache cache;
            attention_pool(x, p, &cache);
            AttentionGrad g = attention_backward(p, cache, coeffs);

            CHECK(max_relative_fd_error(loss, p.w, g.w) < kFdTol);
            CHECK(max_relative_fd_error(loss, std::span<double>(&p.b, 1),
                                        std::span<const double>(&g.b, 1)) < kFdTol);
            CHECK(max_relative_fd_error(loss, x.values, g.input.values) < kFdTol);
        }
    }

    TEST_CASE("dense matches the hand example") {
        DenseParams p = DenseParams::zeros(2, 2);
        p.weights = {1.0, 1.0, 1.0, 3.0};
        std::vector<double> x = {1.0, 2.0};
        std::vector<double> y = dense_forward(x, p);
        REQUIRE(y.size() == 2);
        CHECK(y[0] == doctest::Approx(3.0));
        CHECK(y[1] == doctest::Approx(7.0));
        p.bias = {0.5, -0.5};
        y = dense_forward(x, p);
        CHECK(y[0] == doctest::Approx(3.5));
        CHECK(y[1] == doctest::Approx(6.5));
    }

    TEST_CASE("dense gradients match finite differences") {
        for (int inst = 0; inst < 20; ++inst) {
            Rng rng(6000 + inst);
            const size_t in = 1 + rng.index(6);
            const size_t out = 1 + rng.index(6);
            DenseParams p = DenseParams::zeros(in, out);
            p.weights = random_vec(p.weights.size(), rng);
            p.bias = random_vec(p.bias.size(), rng);
            std::vector<double> x = random_vec(in, rng);
            std::vector<double> coeffs = random_vec(out, rng);

            auto loss = [&]() {
                std::vector<double> y = dense_forward(x, p);
                return std::inner_product(coeffs.begin(), coeffs.end(), y.begin(), 0.0);
            };
            DenseGrad g = dense_backward(p, x, coeffs);

            CHECK(max_relative_fd_error(loss, p.weights, g.weights) < kFdTol);
            CHECK(max_relative_fd_error(loss, p.bias, g.bias) < kFdTol);
            CHECK(max_relative_fd_error(loss, x, g.input) < kFdTol);
        }
    }

    TEST_CASE("softmax cross-entropy frozen values") {
        std::vector<double> logits = {1.0, 2.0, 3.0};
        SoftmaxCeResult r = softmax_cross_entropy(logits, 2);
        CHECK(r.loss == doctest::Approx(0.40760596444438079).epsilon(1e-10));
        CHECK(r.probs[0] == doctest::Approx(0.090030573170380462).epsilon(1e-10));
        CHECK(r.probs[1] == doctest::Approx(0.24472847105479764).epsilon(1e-10));
        CHECK(r.probs[2] == doctest::Approx(0.66524095577482178).epsilon(1e-10));
        CHECK(r.grad_logits[0] == doctest::Approx(r.probs[0]).epsilon(1e-12));
        CHECK(r.grad_logits[1] == doctest::Approx(r.probs[1]).epsilon(1e-12));
        CHECK(r.grad_logits[2] == doctest::Approx(r.probs[2] - 1.0).epsilon(1e-12));

        std::vector<double> uniform(5, 0.7);
        SoftmaxCeResult u = softmax_cross_entropy(uniform, 3);
        CHECK(u.loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));
        for (double pr : u.probs) CHECK(pr == doctest::Approx(0.2).epsilon(1e-12));
    }

    TEST_CASE("softmax cross-entropy is shift invariant and stable") {
        std::vector<double> a = {1.0, -2.0, 0.5, 3.0};
        std::vector<double> b = {1001.0, 998.0, 1000.5, 1003.0};
        SoftmaxCeResult ra = softmax_cross_entropy(a, 1);
        SoftmaxCeResult rb = softmax_cross_entropy(b, 1);
        CHECK(ra.loss == doctest::Approx(rb.loss).epsilon(1e-9));
        CHECK(std::isfinite(rb.loss));
        CHECK_THROWS_AS(softmax_cross_entropy(a, 4), ShapeError);
    }

    TEST_CASE("softmax cross-entropy gradient matches finite differences") {
        for (int inst = 0; inst < 20; ++inst) {
            Rng rng(7000 + inst);
            const size_t n = 2 + rng.index(5);
            std::vector<double> logits = random_vec(n, rng, 3.0);
            const size_t label = rng.index(n);
            auto loss = [&]() { return softmax_cross_entropy(logits, label).loss; };
            SoftmaxCeResult r = softmax_cross_entropy(logits, label);
            CHECK(max_relative_fd_error(loss, logits, r.grad_logits) < kFdTol);
        }
    }

    TEST_CASE("dropout modes") {
        Rng rng(8);
        std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
        CHECK(dropout(x, 0.0, true, rng) == x);
        CHECK(dropout(x, 0.5, false, rng) == x);
        CHECK_THROWS_AS(dropout(x, 1.0, true, rng), ConfigError);
        CHECK_THROWS_AS(dropout(x, -0.1, true, rng), ConfigError);

        // train mode: coordinates are zero or rescaled by 1/(1-rate)
        std::vector<double> big(10000, 1.0);
        std::vector<double> mask;
        std::vector<double> y = dropout(big, 0.25, true, rng, &mask);
        size_t zeros = 0;
        for (size_t i = 0; i < y.size(); ++i) {
            if (y[i] == 0.0) {
                ++zeros;
                CHECK(mask[i] == 0.0);
            } else {
                CHECK(y[i] == doctest::Approx(1.0 / 0.75).epsilon(1e-12));
                CHECK(mask[i] == doctest::Approx(1.0 / 0.75).epsilon(1e-12));
            }
        }
        CHECK(zeros > 2000);
        CHECK(zeros < 3000);
    }
}
