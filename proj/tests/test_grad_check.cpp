// Finite-difference verification of every differentiable op, run in double
// precision. relu and the L1 term are probed away from their kinks.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "demo/bilinear.hpp"
#include "demo/grad_check.hpp"
#include "demo/trainer.hpp"

using namespace demo;

namespace {

TensorD rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    TensorD t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Values bounded away from zero by `margin` (for kinked ops).
TensorD rand_tensor_off_zero(Shape shape, Rng& rng, double margin) {
    TensorD t(std::move(shape));
    for (auto& v : t.data) {
        const double mag = margin + (1.0 - margin) * rng.uniform();
        v = rng.uniform() < 0.5 ? -mag : mag;
    }
    return t;
}

// Fixed random projection so the scalarized objective is sensitive to every
// output element.
TensorD probe_like(const Shape& shape, Rng& rng) { return rand_tensor(shape, rng); }

constexpr double kEps = 1e-3;
constexpr double kTol = 1e-4;

}  // namespace

TEST_CASE("linear passes the finite-difference check") {
    Rng rng(101);
    for (int it = 0; it < 10; ++it) {
        auto x = rand_tensor({3, 5}, rng);
        auto w = rand_tensor({4, 5}, rng);
        auto b = rand_tensor({4}, rng);
        const auto probe = probe_like({3, 4}, rng);
        const double err = grad_check(
            [&](GraphD& g, const std::vector<Var>& in) {
                Var y = linear(g, in[0], in[1], in[2]);
                return sum(g, mul(g, y, g.constant(probe)));
            },
            {x, w, b}, kEps);
        CHECK(err < kTol);
    }
}

TEST_CASE("conv2d passes the finite-difference check") {
    Rng rng(102);
    for (int it = 0; it < 10; ++it) {
        const int stride = it % 2 ? 2 : 1;
        auto x = rand_tensor({2, 2, 5, 4}, rng);
        auto w = rand_tensor({3, 2, 3, 3}, rng);
        auto b = rand_tensor({3}, rng);
        const int ho = (5 + 2 - 3) / stride + 1, wo = (4 + 2 - 3) / stride + 1;
        const auto probe = probe_like({2, 3, ho, wo}, rng);
        const double err = grad_check(
            [&](GraphD& g, const std::vector<Var>& in) {
                Var y = conv2d(g, in[0], in[1], in[2], stride, 1);
                return sum(g, mul(g, y, g.constant(probe)));
            },
            {x, w, b}, kEps);
        CHECK(err < kTol);
    }
}

TEST_CASE("relu passes the finite-difference check away from the kink") {
    Rng rng(103);
    for (int it = 0; it < 10; ++it) {
        auto x = rand_tensor_off_zero({4, 6}, rng, 10.0 * kEps + 1e-3);
        const auto probe = probe_like({4, 6}, rng);
        const double err = grad_check(
            [&](GraphD& g, const std::vector<Var>& in) {
                return sum(g, mul(g, relu(g, in[0]), g.constant(probe)));
            },
            {x}, kEps);
        CHECK(err < kTol);
    }
}

TEST_CASE("global_avg_pool passes the finite-difference check") {
    Rng rng(104);
    for (int it = 0; it < 10; ++it) {
        auto x = rand_tensor({2, 3, 4, 5}, rng);
        const auto probe = probe_like({2, 3}, rng);
        const double err = grad_check(
            [&](GraphD& g, const std::vector<Var>& in) {
                return sum(g, mul(g, global_avg_pool(g, in[0]), g.constant(probe)));
            },
            {x}, kEps);
        CHECK(err < kTol);
    }
}

TEST_CASE("combined L1+L2 loss gradient matches finite differences off the kinks") {
    Rng rng(105);
    for (int it = 0; it < 10; ++it) {
        auto pred = rand_tensor({4, 3}, rng);
        TensorD target(Shape{4, 3});
        // keep every error term at least 10*eps away from zero
        for (std::size_t i = 0; i < target.data.size(); ++i) {
            const double off = 0.05 + rng.uniform();
            target.data[i] = pred.data[i] + (rng.uniform() < 0.5 ? -off : off);
        }
        const double err = grad_check(
            [&](GraphD& g, const std::vector<Var>& in) {
                return l1l2_loss(g, in[0], g.constant(target), 2.0);
            },
            {pred}, kEps);
        CHECK(err < kTol);
    }
}

TEST_CASE("elementwise graph ops pass the finite-difference check") {
    Rng rng(106);
    auto a = rand_tensor({3, 3}, rng);
    auto b = rand_tensor({3, 3}, rng);
    const auto probe = probe_like({3, 3}, rng);
    const double err = grad_check(
        [&](GraphD& g, const std::vector<Var>& in) {
            Var s = add(g, in[0], in[1]);
            Var d = sub(g, s, in[1]);
            Var m = mul(g, d, in[0]);
            return sum(g, mul(g, m, g.constant(probe)));
        },
        {a, b}, kEps);
    CHECK(err < kTol);
}

TEST_CASE("signed_sqrt passes the finite-difference check away from zero") {
    Rng rng(107);
    for (int it = 0; it < 10; ++it) {
        auto x = rand_tensor_off_zero({3, 4}, rng, 0.2);
        const auto probe = probe_like({3, 4}, rng);
        const double err = grad_check(
            [&](GraphD& g, const std::vector<Var>& in) {
                return sum(g, mul(g, signed_sqrt(g, in[0]), g.constant(probe)));
            },
            {x}, kEps);
        CHECK(err < kTol);
    }
}
