// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chgen/datasets.hpp"
#include "chgen/error.hpp"
#include "chgen/metrics.hpp"
#include "chgen/rng.hpp"
#include "doctest.h"

using namespace chgen;
using namespace chgen::metrics;

namespace {

VectorizedSet gaussian_set(std::size_t count, std::size_t dim, double mean, double sd, std::uint64_t seed) {
    rng::Stream s(seed, {});
    VectorizedSet out{RealMatrix(count, dim)};
    for (auto& x : out.rows.data()) x = mean + sd * s.normal();
    return out;
}

VectorizedSet permuted(const VectorizedSet& in, std::uint64_t seed) {
    std::vector<std::size_t> order(in.count());
    std::iota(order.begin(), order.end(), 0);
    rng::Stream s(seed, {});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[s.below(i)]);
    VectorizedSet out{RealMatrix(in.count(), in.dim())};
    for (std::size_t r = 0; r < in.count(); ++r) std::ranges::copy(in.rows.row(order[r]), out.rows.row(r).begin());
    return out;
}

datasets::ScenarioSpec scenario(double lo, std::uint64_t seed) {
    datasets::ScenarioSpec s;
    s.seed = seed;
    s.paths = {{{lo, lo + 0.3}, {lo - 0.2, lo + 0.1}, {0.5, 1.0}}, {{lo + 0.2, lo + 0.4}, {lo, lo + 0.2}, {0.2, 0.6}}};
    return s;
}

}  // namespace

TEST_CASE("nmse examples") {
    rng::Stream s(1, {});
    linalg::ComplexMatrix h(4, 4);
    for (auto& x : h.data()) x = {s.normal(), s.normal()};
    CHECK(nmse(h, h) == 0.0);
    CHECK(nmse(h, linalg::ComplexMatrix(4, 4)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(nmse(h, 2.0 * h) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(nmse(linalg::ComplexMatrix(4, 4), h), ValidationError);
    CHECK_THROWS_AS(nmse(h, linalg::ComplexMatrix(4, 3)), ValidationError);
}

TEST_CASE("mean nmse over datasets") {
    const auto ds = datasets::generate_dataset(scenario(0.2, 3), 20);
    CHECK(mean_nmse(ds, ds) == 0.0);
    auto zeros = ds;
    for (auto& h : zeros.samples) h = linalg::ComplexMatrix(h.rows(), h.cols());
    CHECK(mean_nmse(ds, zeros) == doctest::Approx(1.0));
    // Scale is applied before comparing: a normalized copy matches the original.
    CHECK(mean_nmse(ds, datasets::normalize(ds)) < 1e-24);
    auto shorter = ds;
    shorter.samples.pop_back();
    CHECK_THROWS_AS(mean_nmse(ds, shorter), ValidationError);
}

TEST_CASE("vectorize examples") {
    const std::vector<linalg::ComplexMatrix> one{linalg::ComplexMatrix(1, 1, {linalg::Complex(3.0, 4.0)})};
    const auto v = vectorize(one);
    REQUIRE(v.count() == 1);
    REQUIRE(v.dim() == 2);
    CHECK(v.rows(0, 0) == 3.0);
    CHECK(v.rows(0, 1) == 4.0);

    const auto ds = datasets::generate_dataset(scenario(0.2, 4), 30);
    const auto big = vectorize(ds);
    CHECK(big.dim() == 512);
    CHECK(big.count() == 30);
    const auto back = unvectorize(big, 16, 16);
    CHECK(back == ds.samples);
}

TEST_CASE("W2 identities and one-dimensional closed forms") {
    const auto a = gaussian_set(300, 6, 0.0, 1.0, 1);
    CHECK(w2_gaussian(a, a) <= 1e-6);
    const auto ds = datasets::generate_dataset(scenario(0.2, 5), 600);
    const auto v = vectorize(ds);
    CHECK(w2_gaussian(v, v) <= 1e-6);

    const auto n0 = gaussian_set(10000, 1, 0.0, 1.0, 2);
    const auto n2 = gaussian_set(10000, 1, 2.0, 1.0, 3);
    const auto n9 = gaussian_set(10000, 1, 0.0, 3.0, 4);
    CHECK(w2_gaussian(n0, n2) == doctest::Approx(2.0).epsilon(0.02));
    CHECK(w2_gaussian(n0, n9) == doctest::Approx(2.0).epsilon(0.02));

    // Independent draws of the same law, in several dimensions, stay close to 0.
    CHECK(w2_gaussian(gaussian_set(5000, 3, 1.0, 2.0, 5), gaussian_set(5000, 3, 1.0, 2.0, 6)) < 0.15);
    CHECK(w2_gaussian(a, gaussian_set(300, 6, 0.0, 1.0, 7)) == doctest::Approx(w2_gaussian(gaussian_set(300, 6, 0.0, 1.0, 7), a)).epsilon(1e-9));

    CHECK_THROWS_AS(w2_gaussian(a, gaussian_set(300, 5, 0.0, 1.0, 1)), ValidationError);
    CHECK_THROWS_AS(w2_gaussian(gaussian_set(1, 6, 0.0, 1.0, 1), a), ValidationError);
}

TEST_CASE("MMD identities") {
    const auto a = gaussian_set(500, 4, 0.0, 1.0, 10);
    const auto b = gaussian_set(500, 4, 0.0, 1.0, 11);
    const auto far = gaussian_set(500, 4, 5.0, 1.0, 12);
    CHECK(mmd_rbf(a, a) == 0.0);
    CHECK(std::abs(mmd_rbf(a, b)) < 3.0 / std::sqrt(500.0));
    CHECK(mmd_rbf(a, far) > 0.5);
    CHECK(mmd_rbf(a, far) == mmd_rbf(far, a));
    CHECK(mmd_rbf(a, b) == mmd_rbf(b, a));
    CHECK_THROWS_AS(mmd_rbf(gaussian_set(1, 4, 0.0, 1.0, 1), a), ValidationError);
}

TEST_CASE("metrics are permutation invariant") {
    const auto a = gaussian_set(200, 5, 0.0, 1.0, 20);
    const auto b = gaussian_set(150, 5, 0.5, 1.5, 21);
    const auto pa = permuted(a, 1);
    const auto pb = permuted(b, 2);
    CHECK(mmd_rbf(pa, pb) == doctest::Approx(mmd_rbf(a, b)).epsilon(1e-12));
    CHECK(w2_gaussian(pa, pb) == doctest::Approx(w2_gaussian(a, b)).epsilon(1e-9));
}

TEST_CASE("metrics separate scenarios with disjoint angle ranges") {
    const auto same = datasets::generate_dataset(scenario(0.2, 30), 2000);
    std::vector<std::size_t> first(1000), second(1000);
    std::iota(first.begin(), first.end(), 0);
    std::iota(second.begin(), second.end(), 1000);
    const auto a = vectorize(datasets::subset(same, first));
    const auto b = vectorize(datasets::subset(same, second));
    const auto c = vectorize(datasets::generate_dataset(scenario(-1.2, 31), 1000));
    CHECK(w2_gaussian(a, b) < w2_gaussian(a, c) / 5.0);
    CHECK(mmd_rbf(a, b) < mmd_rbf(a, c) / 5.0);
}

TEST_CASE("metric results serialize to JSON") {
    const std::vector<MetricResult> r{{"w2", 0.5, 10, 12, 512}};
    const auto text = to_json(r);
    CHECK(text.find("\"metric\": \"w2\"") != std::string::npos);
    CHECK(text.find("\"count_b\": 12") != std::string::npos);
}
