#include <doctest.h>

#include <cmath>

#include "cnnaa/ops.hpp"
#include "cnnaa/rng.hpp"
#include "oracles.hpp"

using namespace cnnaa;

TEST_CASE("conv2d degenerate 1x1 size") {
    Tensor in({1, 1, 1}, {3.0f});
    Tensor k({1, 1, 1, 1}, {2.0f});
    Tensor b({1}, {0.5f});
    Tensor out = conv2d(in, k, b);
    CHECK(out.shape == std::vector<int>{1, 1, 1});
    CHECK(out.data[0] == doctest::Approx(3.0 * 2.0 + 0.5));
}

TEST_CASE("conv2d of an all-zero input is the bias plane") {
    Rng rng(7);
    Tensor in({5, 5, 3});
    Tensor k({3, 3, 3, 4});
    oracles::fill_random(k, rng);
    Tensor b({4}, {0.1f, -0.2f, 0.3f, 0.0f});
    Tensor out = conv2d(in, k, b);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            for (int c = 0; c < 4; ++c) CHECK(out.at3(y, x, c) == doctest::Approx(b.data[c]));
}

TEST_CASE("conv2d matches the naive nested-loop oracle") {
    Rng rng(11);
    Tensor in({7, 7, 3});
    Tensor k({3, 3, 3, 5});
    Tensor b({5});
    oracles::fill_random(in, rng);
    oracles::fill_random(k, rng);
    oracles::fill_random(b, rng);
    Tensor fast = conv2d(in, k, b);
    Tensor slow = oracles::conv2d_naive(in, k, b);
    REQUIRE(fast.shape == slow.shape);
    for (std::size_t i = 0; i < fast.data.size(); ++i) {
        CHECK(fast.data[i] == doctest::Approx(slow.data[i]).epsilon(1e-5));
    }
}

TEST_CASE("conv2d rejects channel mismatch and even kernels") {
    Tensor in({4, 4, 3});
    Tensor b({2});
    CHECK_THROWS_AS(conv2d(in, Tensor({3, 3, 2, 2}), b), ShapeError);
    CHECK_THROWS_AS(conv2d(in, Tensor({2, 3, 3, 2}), b), ShapeError);
}

TEST_CASE("maxpool output dims follow floor((n-3)/2)+1") {
    Tensor in({53, 39, 1});
    Tensor out = maxpool3x3s2(in);
    CHECK(out.dim(0) == 26);
    CHECK(out.dim(1) == 19);

    // property over the documented range
    for (int n = 3; n <= 200; ++n) {
        Tensor t({n, 3, 1});
        CHECK(maxpool3x3s2(t).dim(0) == (n - 3) / 2 + 1);
    }
}

TEST_CASE("maxpool of a constant input is constant") {
    Tensor in({9, 11, 2});
    in.fill(4.25f);
    Tensor out = maxpool3x3s2(in);
    for (float v : out.data) CHECK(v == 4.25f);
}

TEST_CASE("maxpool chained three times: 128x52 -> 63x25 -> 31x12 -> 15x5") {
    int h = 128, w = 52;
    Tensor t({h, w, 1});
    t = maxpool3x3s2(t);
    CHECK(t.dim(0) == 63);
    CHECK(t.dim(1) == 25);
    t = maxpool3x3s2(t);
    CHECK(t.dim(0) == 31);
    CHECK(t.dim(1) == 12);
    t = maxpool3x3s2(t);
    CHECK(t.dim(0) == 15);
    CHECK(t.dim(1) == 5);
}

TEST_CASE("maxpool rejects inputs smaller than the window") {
    CHECK_THROWS_AS(maxpool3x3s2(Tensor({2, 8, 1})), ShapeError);
    CHECK_THROWS_AS(maxpool3x3s2(Tensor({8, 2, 1})), ShapeError);
}

TEST_CASE("maxpool backward routes to the first argmax on ties") {
    Tensor in({3, 3, 1});
    in.fill(1.0f);  // all tied
    Tensor g({1, 1, 1}, {2.5f});
    Tensor gin = maxpool3x3s2_backward(in, g);
    CHECK(gin.at3(0, 0, 0) == 2.5f);
    float rest = 0.0f;
    for (std::size_t i = 1; i < gin.data.size(); ++i) rest += std::abs(gin.data[i]);
    CHECK(rest == 0.0f);
}

TEST_CASE("dense identity and zero weight") {
    Tensor in({3}, {1.0f, 2.0f, 3.0f});
    Tensor eye({3, 3});
    for (int i = 0; i < 3; ++i) eye.at2(i, i) = 1.0f;
    Tensor zero_b({3});
    Tensor out = dense(in, eye, &zero_b);
    for (int i = 0; i < 3; ++i) CHECK(out.data[i] == in.data[i]);

    Tensor zeros({3, 2});
    Tensor b({2}, {5.0f, -1.0f});
    out = dense(in, zeros, &b);
    CHECK(out.data[0] == 5.0f);
    CHECK(out.data[1] == -1.0f);
}

TEST_CASE("dense matches the explicit dot-product oracle") {
    Rng rng(3);
    Tensor in({8});
    Tensor w({8, 4});
    Tensor b({4});
    oracles::fill_random(in, rng);
    oracles::fill_random(w, rng);
    oracles::fill_random(b, rng);
    Tensor fast = dense(in, w, &b);
    Tensor slow = oracles::dense_naive(in, w, &b);
    for (int i = 0; i < 4; ++i) CHECK(fast.data[i] == doctest::Approx(slow.data[i]).epsilon(1e-6));
}

TEST_CASE("dense rejects dimension mismatch") {
    CHECK_THROWS_AS(dense(Tensor({3}), Tensor({4, 2}), nullptr), ShapeError);
}

TEST_CASE("softmax_xent equal logits give ln 2") {
    Tensor logits({2}, {0.0f, 0.0f});
    auto [loss, grad] = softmax_xent(logits, 1);
    CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(grad.data[0] == doctest::Approx(0.5));
    CHECK(grad.data[1] == doctest::Approx(-0.5));
}

TEST_CASE("softmax_xent saturated case is ~0") {
    Tensor logits({2}, {20.0f, -20.0f});
    auto [loss, grad] = softmax_xent(logits, 0);
    CHECK(loss < 1e-8);
    CHECK(loss >= 0.0);
}

TEST_CASE("softmax_xent loss is non-negative, ln2 iff equal logits") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor logits({2});
        oracles::fill_random(logits, rng, -4.0, 4.0);
        auto [loss, grad] = softmax_xent(logits, trial % 2);
        CHECK(loss >= 0.0);
        if (logits.data[0] != logits.data[1]) {
            CHECK(loss != doctest::Approx(std::log(2.0)).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax_xent gradient matches central finite differences") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor logits({2});
        oracles::fill_random(logits, rng, -3.0, 3.0);
        const int label = trial % 2;
        auto [loss, grad] = softmax_xent(logits, label);
        for (int i = 0; i < 2; ++i) {
            const double numeric = oracles::central_diff(
                [&]() { return softmax_xent(logits, label).first; }, logits.data[i]);
            CHECK(oracles::grad_rel_error(grad.data[i], numeric) < 1e-4);
        }
    }
}

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng(23);
    Tensor in({5, 4, 2});
    Tensor k({3, 3, 2, 3});
    Tensor b({3});
    oracles::fill_random(in, rng);
    oracles::fill_random(k, rng);
    oracles::fill_random(b, rng);
    Tensor gout({5, 4, 3});
    oracles::fill_random(gout, rng);

    auto scalar = [&]() { return oracles::conv2d_scalar_double(in, k, b, gout); };
    Conv2dGrads g = conv2d_backward(in, k, gout);
    for (std::size_t i = 0; i < k.data.size(); i += 7) {
        const double numeric = oracles::central_diff(scalar, k.data[i]);
        CHECK(oracles::grad_rel_error(g.kernel.data[i], numeric) < 1e-4);
    }
    for (std::size_t i = 0; i < in.data.size(); i += 5) {
        const double numeric = oracles::central_diff(scalar, in.data[i]);
        CHECK(oracles::grad_rel_error(g.input.data[i], numeric) < 1e-4);
    }
    for (std::size_t i = 0; i < b.data.size(); ++i) {
        const double numeric = oracles::central_diff(scalar, b.data[i]);
        CHECK(oracles::grad_rel_error(g.bias.data[i], numeric) < 1e-4);
    }
}

TEST_CASE("maxpool gradients match finite differences") {
    Rng rng(41);
    Tensor in({7, 9, 2});
    oracles::fill_random(in, rng);
    Tensor gout({3, 4, 2});
    oracles::fill_random(gout, rng);
    auto scalar = [&]() { return oracles::maxpool_scalar_double(in, gout); };
    Tensor gin = maxpool3x3s2_backward(in, gout);
    for (std::size_t i = 0; i < in.data.size(); i += 3) {
        const double numeric = oracles::central_diff(scalar, in.data[i], 1e-5);
        CHECK(oracles::grad_rel_error(gin.data[i], numeric) < 1e-4);
    }
}

TEST_CASE("dense and relu gradients match finite differences") {
    Rng rng(29);
    Tensor in({6});
    Tensor w({6, 3});
    oracles::fill_random(in, rng);
    oracles::fill_random(w, rng);
    Tensor gout({3});
    oracles::fill_random(gout, rng);

    auto scalar = [&]() { return oracles::dense_relu_scalar_double(in, w, gout); };
    const Tensor pre = dense(in, w, nullptr);
    const Tensor dpre = relu_backward(pre, gout);
    DenseGrads g = dense_backward(in, w, false, dpre);
    for (std::size_t i = 0; i < w.data.size(); ++i) {
        const double numeric = oracles::central_diff(scalar, w.data[i]);
        CHECK(oracles::grad_rel_error(g.weight.data[i], numeric) < 1e-4);
    }
    for (std::size_t i = 0; i < in.data.size(); ++i) {
        const double numeric = oracles::central_diff(scalar, in.data[i]);
        CHECK(oracles::grad_rel_error(g.input.data[i], numeric) < 1e-4);
    }
}
