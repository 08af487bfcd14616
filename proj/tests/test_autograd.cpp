// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "chgen/autograd.hpp"
#include "chgen/error.hpp"
#include "chgen/ppgc.hpp"
#include "chgen/rng.hpp"
#include "doctest.h"
#include "gradcheck.hpp"

using namespace chgen;
using namespace chgen::autograd;

namespace {

Matrix row(std::initializer_list<double> values) {
    Matrix m(1, static_cast<Eigen::Index>(values.size()));
    Eigen::Index k = 0;
    for (double v : values) m(0, k++) = v;
    return m;
}

Matrix random(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale = 1.0) {
    rng::Stream s(seed, {});
    Matrix m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = scale * s.normal();
    return m;
}

}  // namespace

TEST_CASE("relu forward and backward") {
    Tape tape;
    auto x = Tensor::parameter(row({-1.0, 2.0}));
    auto y = tape.relu(x);
    CHECK(y.value() == row({0.0, 2.0}));
    tape.backward(tape.sum(y));
    CHECK(x.grad() == row({0.0, 1.0}));
}

TEST_CASE("matmul with identity") {
    Tape tape;
    const Matrix a = random(2, 3, 1);
    auto y = tape.matmul(Tensor::constant(Matrix::Identity(2, 2)), Tensor::constant(a));
    CHECK(y.value() == a);
}

TEST_CASE("abs has zero subgradient at zero") {
    Tape tape;
    auto x = Tensor::parameter(row({-2.0, 0.0, 3.0}));
    tape.backward(tape.sum(tape.abs(x)));
    CHECK(x.grad() == row({-1.0, 0.0, 1.0}));
}

TEST_CASE("sum of squares gradient") {
    Tape tape;
    auto x = Tensor::parameter(row({1.0, 2.0, 3.0}));
    auto p = Tensor::parameter(row({5.0}));
    tape.backward(tape.sum(tape.square(x)));
    CHECK(x.grad() == row({2.0, 4.0, 6.0}));
    CHECK(p.grad() == row({0.0}));
}

TEST_CASE("gradients are reset between backward passes") {
    auto x = Tensor::parameter(row({1.0, 2.0}));
    for (int i = 0; i < 2; ++i) {
        Tape tape;
        tape.backward(tape.sum(tape.scale(x, 3.0)));
        CHECK(x.grad() == row({3.0, 3.0}));
    }
}

TEST_CASE("backward rejects non-scalar and foreign losses") {
    Tape tape, other;
    auto x = Tensor::parameter(row({1.0, 2.0}));
    CHECK_THROWS_AS(tape.backward(tape.square(x)), ValidationError);
    auto l = other.sum(x);
    CHECK_THROWS_AS(tape.backward(l), ValidationError);
}

TEST_CASE("shape mismatches name both shapes") {
    Tape tape;
    auto a = Tensor::constant(Matrix::Zero(2, 3));
    auto b = Tensor::constant(Matrix::Zero(3, 2));
    try {
        tape.add(a, b);
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("3x2") != std::string::npos);
    }
    CHECK_THROWS_AS(tape.matmul(a, a), ValidationError);
    CHECK_THROWS_AS(tape.multiply(a, b), ValidationError);
    CHECK_THROWS_AS(tape.reshape(a, 4, 2), ValidationError);
    CHECK_THROWS_AS(tape.concatenate(a, b, 0), ValidationError);
    CHECK_THROWS_AS(tape.slice_cols(a, 2, 2), ValidationError);
}

TEST_CASE("elementwise primitives match finite differences") {
    auto x = Tensor::parameter(random(3, 4, 2));
    auto y = Tensor::parameter(random(3, 4, 3));
    auto b = Tensor::parameter(random(1, 4, 4));
    std::vector<Tensor> params{x, y, b};
    auto result = test_support::gradient_check(params, [&](Tape& t, bool run_backward) {
        auto u = t.multiply(t.tanh(x), t.exp(t.scale(y, 0.3)));
        auto v = t.add(t.leaky_relu(t.sub(u, y), 0.1), b);
        auto w = t.concatenate(t.square(v), t.reshape(t.abs(t.add_scalar(x, 0.05)), 3, 4), 0);
        auto s = t.slice_cols(w, 1, 2);
        auto loss = t.add(t.mean(w), t.sum(t.relu(s)));
        if (run_backward) t.backward(loss);
        return loss.item();
    });
    CHECK(result.max_relative_error < 1e-6);
}

TEST_CASE("random three-layer MLP matches finite differences") {
    std::vector<Dense> layers{Dense::init(5, 7, 1), Dense::init(7, 6, 2), Dense::init(6, 3, 3)};
    std::vector<Tensor> params;
    for (auto& l : layers) {
        params.push_back(l.weight);
        params.push_back(l.bias);
    }
    const auto input = Tensor::constant(random(4, 5, 9));
    const auto target = Tensor::constant(random(4, 3, 10));
    auto result = test_support::gradient_check(params, [&](Tape& t, bool run_backward) {
        auto h = t.tanh(layers[0].forward(t, input));
        h = t.leaky_relu(layers[1].forward(t, h), 0.01);
        auto out = layers[2].forward(t, h);
        auto loss = t.sum(t.square(t.sub(out, target)));
        if (run_backward) t.backward(loss);
        return loss.item();
    });
    CHECK(result.entries == 5 * 7 + 7 + 7 * 6 + 6 + 6 * 3 + 3);
    CHECK(result.max_relative_error < 1e-6);
}

TEST_CASE("linear map and matmul gradients") {
    auto x = Tensor::parameter(random(3, 5, 1));
    auto m = Tensor::parameter(random(5, 2, 2));
    const auto op = std::make_shared<const Matrix>(random(5, 4, 3));
    std::vector<Tensor> params{x, m};
    auto result = test_support::gradient_check(params, [&](Tape& t, bool run_backward) {
        auto loss = t.add(t.sum(t.square(t.linear_map(x, op))), t.sum(t.tanh(t.matmul(x, m))));
        if (run_backward) t.backward(loss);
        return loss.item();
    });
    CHECK(result.max_relative_error < 1e-6);
}

TEST_CASE("fused multipath synthesis matches the channel model and its gradients") {
    ppgc::ArrayConfig array;
    array.n_r = 4;
    array.n_t = 3;
    const Matrix g = random(2, 2, 5);
    const Matrix ta = random(2, 2, 6, 0.8);
    const Matrix td = random(2, 2, 7, 0.8);
    Tape tape;
    auto h = tape.ppgc_synthesize(Tensor::constant(g), Tensor::constant(ta), Tensor::constant(td), array);
    REQUIRE(h.rows() == 2);
    REQUIRE(h.cols() == 24);
    for (Eigen::Index b = 0; b < 2; ++b) {
        const std::vector<ppgc::PathParams> paths{{g(b, 0), ta(b, 0), td(b, 0)}, {g(b, 1), ta(b, 1), td(b, 1)}};
        const auto ref = ppgc::synthesize_channel(paths, array);
        for (std::size_t e = 0; e < 12; ++e) {
            CHECK(std::abs(h.value()(b, static_cast<Eigen::Index>(e)) - ref.data()[e].real()) < 1e-14);
            CHECK(std::abs(h.value()(b, static_cast<Eigen::Index>(12 + e)) - ref.data()[e].imag()) < 1e-14);
        }
    }

    auto gp = Tensor::parameter(g), ap = Tensor::parameter(ta), dp = Tensor::parameter(td);
    const auto target = Tensor::constant(random(2, 24, 8, 0.3));
    std::vector<Tensor> params{gp, ap, dp};
    auto result = test_support::gradient_check(params, [&](Tape& t, bool run_backward) {
        auto loss = t.sum(t.square(t.sub(t.ppgc_synthesize(gp, ap, dp, array), target)));
        if (run_backward) t.backward(loss);
        return loss.item();
    });
    CHECK(result.max_relative_error < 1e-6);
}

TEST_CASE("reparameterization") {
    Tape tape;
    const Matrix mu = row({0.5, -1.0});
    const Matrix noise = row({1.5, 2.0});
    auto z = reparameterize(tape, Tensor::constant(mu), Tensor::constant(Matrix::Constant(1, 2, -100.0)),
                            Tensor::constant(noise));
    CHECK((z.value() - mu).cwiseAbs().maxCoeff() < 1e-20);

    auto z0 = reparameterize(tape, Tensor::constant(Matrix::Zero(1, 2)), Tensor::constant(Matrix::Zero(1, 2)),
                             Tensor::constant(noise));
    CHECK(z0.value() == noise);

    auto m = Tensor::parameter(mu);
    auto lv = Tensor::parameter(row({0.3, -0.2}));
    Tape t2;
    t2.backward(t2.sum(reparameterize(t2, m, lv, Tensor::constant(noise))));
    CHECK(m.grad() == row({1.0, 1.0}));
    CHECK(lv.grad()(0, 0) == doctest::Approx(0.5 * std::exp(0.15) * 1.5));
    CHECK_THROWS_AS(reparameterize(t2, m, lv, Tensor::constant(Matrix::Zero(2, 2))), ValidationError);
}

TEST_CASE("KL divergence to the standard normal") {
    Tape tape;
    auto kl = [&](Matrix mu, Matrix lv) {
        return kl_to_standard_normal(tape, Tensor::constant(std::move(mu)), Tensor::constant(std::move(lv))).item();
    };
    CHECK(kl(Matrix::Zero(2, 3), Matrix::Zero(2, 3)) == 0.0);
    CHECK(kl(row({1.0}), row({0.0})) == doctest::Approx(0.5));
    CHECK(kl(row({0.0}), row({std::log(4.0)})) == doctest::Approx(0.5 * (4.0 - 1.0 - std::log(4.0))));
    CHECK(kl(row({0.0}), row({std::log(4.0)})) == doctest::Approx(0.8069).epsilon(1e-4));

    rng::Stream s(4, {});
    for (int i = 0; i < 100; ++i) CHECK(kl(random(2, 4, 100 + i, 2.0), random(2, 4, 200 + i, 2.0)) >= 0.0);
}

TEST_CASE("Adam update rules") {
    auto p = Tensor::parameter(row({1.0, -2.0}));
    std::vector<Tensor> params{p};
    auto state = make_adam_state(params);
    adam_step(params, state);
    CHECK(state.step == 1);
    CHECK(p.value() == row({1.0, -2.0}));

    auto q = Tensor::parameter(row({1.0, -2.0}));
    std::vector<Tensor> fresh{q};
    auto first = make_adam_state(fresh);
    q.mutable_grad() = row({0.3, -5.0});
    adam_step(fresh, first);
    CHECK(q.value()(0, 0) == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
    CHECK(q.value()(0, 1) == doctest::Approx(-2.0 + 1e-3).epsilon(1e-6));
}

TEST_CASE("Adam minimizes a scalar quadratic") {
    auto x = Tensor::parameter(row({1.0}));
    std::vector<Tensor> params{x};
    auto state = make_adam_state(params, {0.01});
    for (int i = 0; i < 1000; ++i) {
        Tape tape;
        tape.backward(tape.sum(tape.square(x)));
        adam_step(params, state);
    }
    CHECK(std::abs(x.value()(0, 0)) < 1e-3);
}

TEST_CASE("backward is bit-for-bit deterministic") {
    auto run = [] {
        Dense layer = Dense::init(6, 4, 11);
        Tape tape;
        auto out = tape.tanh(layer.forward(tape, Tensor::constant(random(3, 6, 12))));
        tape.backward(tape.sum(tape.square(out)));
        return std::make_pair(layer.weight.grad(), layer.bias.grad());
    };
    CHECK(run() == run());
}

TEST_CASE("Glorot initialization bounds") {
    const auto d = Dense::init(30, 20, 7);
    const double bound = std::sqrt(6.0 / 50.0);
    CHECK(d.weight.value().cwiseAbs().maxCoeff() <= bound);
    CHECK(d.weight.value().cwiseAbs().maxCoeff() > 0.8 * bound);
    CHECK(d.bias.value().isZero());
    CHECK(Dense::init(30, 20, 7).weight.value() == d.weight.value());
}
