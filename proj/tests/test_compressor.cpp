// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "chgen/compressor.hpp"
#include "chgen/error.hpp"
#include "chgen/genmodel.hpp"
#include "doctest.h"

using namespace chgen;
using namespace chgen::compressor;

namespace {

datasets::ScenarioSpec scenario(double lo, std::uint64_t seed, std::size_t n = 4) {
    datasets::ScenarioSpec s;
    s.seed = seed;
    s.array.n_r = n;
    s.array.n_t = n;
    s.paths = {{{lo, lo + 0.3}, {lo - 0.2, lo + 0.1}, {0.5, 1.0}}, {{lo + 0.2, lo + 0.4}, {lo, lo + 0.2}, {0.2, 0.6}}};
    return s;
}

CompressorConfig small() {
    CompressorConfig c;
    c.code_dim = 8;
    c.hidden = {32};
    c.epochs = 20;
    c.batch_size = 16;
    c.seed = 3;
    return c;
}

}  // namespace

TEST_CASE("config validation") {
    CompressorConfig c;
    CHECK(c.code_dim == 32);
    CHECK_NOTHROW(c.validate(512));
    CHECK_THROWS_AS(c.validate(32), ValidationError);
    c.code_dim = 0;
    CHECK_THROWS_AS(c.validate(512), ValidationError);
    c = CompressorConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(512), ValidationError);
}

TEST_CASE("code length equals code_dim") {
    const auto ds = datasets::generate_dataset(scenario(0.2, 1), 5);
    const auto model = make_compressor(ds.array, small());
    const auto codes = model.encode(genmodel::to_planes(ds.samples));
    CHECK(codes.rows() == 5);
    CHECK(codes.cols() == 8);
    CHECK(model.decode(codes).cols() == 32);
}

TEST_CASE("overfits a ten-sample dataset") {
    const auto ds = datasets::generate_dataset(scenario(0.2, 2, 16), 10);
    CompressorConfig c;
    c.epochs = 300;
    c.batch_size = 10;
    c.seed = 1;
    const auto model = train_compressor(ds, c);
    CHECK(model.loss_history.size() == 300);
    CHECK(model.loss_history.back() < model.loss_history.front());
    CHECK(model.train_nmse < 1e-2);
    CHECK(eval_nmse(model, ds) <= model.train_nmse + 1e-6);
}

TEST_CASE("training is reproducible") {
    const auto ds = datasets::generate_dataset(scenario(0.2, 3), 60);
    const auto a = train_compressor(ds, small());
    const auto b = train_compressor(ds, small());
    CHECK(a.weights() == b.weights());
    CHECK(a.loss_history == b.loss_history);
    auto other = small();
    other.seed = 4;
    CHECK_FALSE(train_compressor(ds, other).weights() == a.weights());
}

TEST_CASE("zero decoder reconstructs nothing") {
    const auto ds = datasets::generate_dataset(scenario(0.2, 4), 20);
    auto model = make_compressor(ds.array, small());
    for (auto& l : model.decoder) {
        l.weight.mutable_value().setZero();
        l.bias.mutable_value().setZero();
    }
    CHECK(eval_nmse(model, ds) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(eval_nmse(model, datasets::ChannelDataset{}), ValidationError);
    CHECK_THROWS_AS(eval_nmse(model, datasets::generate_dataset(scenario(0.2, 4, 8), 2)), ValidationError);
}

TEST_CASE("cross evaluation tables") {
    const auto a = datasets::generate_dataset(scenario(0.2, 5), 300);
    const auto b = datasets::generate_dataset(scenario(-1.1, 6), 300);
    const auto [a_train, a_test] = datasets::split(a, 0.8, 1);
    const auto [b_train, b_test] = datasets::split(b, 0.8, 1);

    auto cfg = small();
    cfg.code_dim = 4;
    const auto one = cross_eval({{"A", a_train}}, {{"A", a_test}}, cfg);
    CHECK(one.nmse.rows() == 1);
    CHECK(one.nmse.cols() == 1);

    const auto table = cross_eval({{"A", a_train}, {"B", b_train}}, {{"A", a_test}, {"B", b_test}}, cfg);
    CHECK(table.nmse(0, 0) < table.nmse(0, 1));
    CHECK(table.nmse(1, 1) < table.nmse(1, 0));
    const auto again = cross_eval({{"A", a_train}, {"B", b_train}}, {{"A", a_test}, {"B", b_test}}, cfg);
    CHECK(again.nmse == table.nmse);

    const auto csv = table.to_csv();
    CHECK(csv.rfind("train\\test,A,B\n", 0) == 0);
    CHECK(std::ranges::count(csv, '\n') == 3);
    const auto json = table.to_json();
    CHECK(json.find("\"train\"") != std::string::npos);
    CHECK(json.find("\"nmse\"") != std::string::npos);

    CHECK_THROWS_AS(cross_eval({}, {{"A", a_test}}, cfg), ValidationError);
}
