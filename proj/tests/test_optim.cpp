#include <doctest.h>

#include <cmath>
#include <limits>

#include "gcnh/error.hpp"
#include "gcnh/optim.hpp"
#include "helpers.hpp"

using namespace gcnh;
using namespace gcnh::testing;

TEST_CASE("zero gradient and zero decay leave parameters unchanged") {
    Rng rng(1);
    Tensor p = Tensor::parameter(random_matrix(3, 2, rng));
    const Matrix before = p.value();
    std::vector<Tensor> params{p};
    AdamState state;
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    for (int i = 0; i < 5; ++i) {
        p.zero_grad();
        adam_step(params, state, cfg);
    }
    CHECK(p.value() == before);
    CHECK(state.step == 5);
    REQUIRE(state.first_moment.size() == 1);
    CHECK(state.first_moment[0].same_shape(before));
}

TEST_CASE("first step with a constant gradient moves by the learning rate") {
    Tensor p = Tensor::parameter(Matrix(1, 1, 2.0));
    std::vector<Tensor> params{p};
    AdamState state;
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    p.grad()[0] = 1.0;
    adam_step(params, state, cfg);
    // m_hat = 1, v_hat = 1: step = lr / (1 + eps).
    CHECK(p.value()[0] == doctest::Approx(2.0 - 5e-3 / (1.0 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("weight decay is added to the gradient") {
    Tensor a = Tensor::parameter(Matrix(1, 1, 4.0));
    Tensor b = Tensor::parameter(Matrix(1, 1, 4.0));
    std::vector<Tensor> pa{a}, pb{b};
    AdamState sa, sb;
    AdamConfig with;
    with.weight_decay = 0.5;
    AdamConfig without;
    without.weight_decay = 0.0;
    for (int i = 0; i < 3; ++i) {
        a.grad()[0] = 0.3;
        b.grad()[0] = 0.3 + 0.5 * b.value()[0];
        adam_step(pa, sa, with);
        adam_step(pb, sb, without);
        CHECK(a.value()[0] == b.value()[0]);
    }
}

TEST_CASE("Adam minimizes a quadratic") {
    Tensor w = Tensor::parameter(Matrix(1, 1, 0.0));
    std::vector<Tensor> params{w};
    AdamState state;
    AdamConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    for (int i = 0; i < 500; ++i) {
        w.grad()[0] = 2.0 * (w.value()[0] - 3.0);
        adam_step(params, state, cfg);
    }
    CHECK(std::abs(w.value()[0] - 3.0) < 1e-2);
}

TEST_CASE("finite differences on a quadratic are essentially exact") {
    Rng rng(2);
    Tensor x = Tensor::parameter(random_matrix(1, 4, rng));
    const Tensor a = Tensor::constant(random_matrix(4, 1, rng));
    std::vector<Tensor> params{x};
    // (x a)^2
    const auto r = finite_diff_check(
        [&](Tape& t) {
            const Tensor s = matmul(t, x, a);
            return matmul(t, s, s);
        },
        params);
    CHECK(r.coords_checked == 4);
    CHECK(r.max_relative_error < 1e-7);
}

TEST_CASE("gradient checker detects a wrong gradient and rejects non-finite losses") {
    Tensor x = Tensor::parameter(Matrix(1, 1, 1.5));
    std::vector<Tensor> params{x};
    // Loss x^2 whose backward is deliberately scaled by 2.
    const auto bad = finite_diff_check(
        [&](Tape& t) {
            const double v = x.value()[0];
            return t.record(Matrix(1, 1, v * v), true, [x, v](const Matrix& g) { x.grad()[0] += 4.0 * v * g[0]; });
        },
        params);
    CHECK(bad.max_relative_error > 0.3);

    const auto good = finite_diff_check(
        [&](Tape& t) {
            const double v = x.value()[0];
            return t.record(Matrix(1, 1, v * v), true, [x, v](const Matrix& g) { x.grad()[0] += 2.0 * v * g[0]; });
        },
        params);
    CHECK(good.max_relative_error < 1e-7);

    CHECK_THROWS_AS(finite_diff_check(
                        [&](Tape& t) {
                            return t.record(Matrix(1, 1, std::numeric_limits<double>::quiet_NaN()), true,
                                            [](const Matrix&) {});
                        },
                        params),
                    NonFiniteError);
}

TEST_CASE("gradient checker samples coordinates when asked") {
    Rng rng(3);
    Tensor x = Tensor::parameter(random_matrix(10, 10, rng));
    std::vector<Tensor> params{x};
    GradCheckOptions opt;
    opt.max_coords_per_tensor = 7;
    const auto r = finite_diff_check(
        [&](Tape& t) {
            const Tensor ones = Tensor::constant(Matrix(1, 10, 1.0));
            const Tensor col = Tensor::constant(Matrix(10, 1, 1.0));
            const Tensor s = matmul(t, matmul(t, ones, x), col);
            return matmul(t, s, s);
        },
        params, opt);
    CHECK(r.coords_checked == 7);
    CHECK(r.max_relative_error < 1e-7);
}
