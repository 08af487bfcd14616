// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

#include "chgen/error.hpp"
#include "chgen/linalg.hpp"
#include "chgen/rng.hpp"
#include "doctest.h"

using namespace chgen;
using namespace chgen::linalg;

namespace {

constexpr Complex j{0.0, 1.0};

RealMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    rng::Stream s(seed, {rows, cols});
    RealMatrix m(rows, cols);
    for (auto& x : m.data()) x = s.normal();
    return m;
}

RealMatrix random_psd(std::size_t n, std::size_t rank, std::uint64_t seed) {
    const auto g = random_matrix(n, rank, seed);
    return g * g.transposed();
}

double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
    return m;
}

RealMatrix reconstruct(const EigenDecomposition& e) {
    const RealMatrix d = RealMatrix::diagonal(e.values);
    return e.vectors * d * e.vectors.transposed();
}

}  // namespace

TEST_CASE("outer product conjugates the right factor") {
    const std::vector<Complex> u1{1.0, j}, v1{1.0, 1.0};
    const auto a = outer_product(u1, v1);
    CHECK(a == ComplexMatrix(2, 2, {1.0, 1.0, j, j}));

    const std::vector<Complex> u2{1.0}, v2{j};
    CHECK(outer_product(u2, v2)(0, 0) == -j);

    // Hand-multiplied entries.
    const std::vector<Complex> u3{1.0 + j, 2.0}, v3{1.0 - j, j};
    const auto c = outer_product(u3, v3);
    CHECK(c(0, 0) == 2.0 * j);
    CHECK(c(0, 1) == 1.0 - j);
    CHECK(c(1, 0) == 2.0 + 2.0 * j);
    CHECK(c(1, 1) == -2.0 * j);

    CHECK_THROWS_AS(outer_product(std::vector<Complex>{}, v1), ValidationError);
}

TEST_CASE("outer product norm is the product of vector norms") {
    rng::Stream s(3, {});
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Complex> u(1 + trial % 7), v(1 + trial % 5);
        for (auto& x : u) x = {s.normal(), s.normal()};
        for (auto& x : v) x = {s.normal(), s.normal()};
        auto norm = [](const std::vector<Complex>& w) {
            double t = 0.0;
            for (auto x : w) t += std::norm(x);
            return std::sqrt(t);
        };
        const double expected = norm(u) * norm(v);
        CHECK(std::abs(frobenius_norm(outer_product(u, v)) - expected) <= 1e-12 * expected);
    }
}

TEST_CASE("frobenius norm") {
    CHECK(frobenius_norm(ComplexMatrix(2, 2)) == 0.0);
    CHECK(frobenius_norm(ComplexMatrix(1, 1, {Complex{3.0, 4.0}})) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(frobenius_norm(ComplexMatrix(2, 2, {1.0, 1.0, 1.0, 1.0})) == 2.0);
    CHECK(squared_frobenius_norm(ComplexMatrix(1, 1, {Complex{3.0, 4.0}})) == doctest::Approx(25.0));
}

TEST_CASE("complex matrix arithmetic and shape checks") {
    ComplexMatrix a(1, 2, {1.0, j});
    ComplexMatrix b(1, 2, {2.0, 1.0});
    CHECK((a + b) == ComplexMatrix(1, 2, {3.0, 1.0 + j}));
    CHECK((a - b) == ComplexMatrix(1, 2, {-1.0, j - 1.0}));
    CHECK((2.0 * a) == ComplexMatrix(1, 2, {2.0, 2.0 * j}));
    CHECK(frobenius_inner(a, b) == Complex(2.0, -1.0));
    CHECK(conjugate(a) == ComplexMatrix(1, 2, {1.0, -j}));
    CHECK_THROWS_AS(a += ComplexMatrix(2, 1), ValidationError);
    CHECK_THROWS_AS(ComplexMatrix(2, 2, {1.0}), ValidationError);
}

TEST_CASE("eigendecomposition of small closed-form cases") {
    const auto id = symmetric_eigendecomposition(RealMatrix::identity(3));
    CHECK(id.values == std::vector<double>{1.0, 1.0, 1.0});

    const auto d = symmetric_eigendecomposition(RealMatrix::diagonal(std::vector<double>{4.0, 1.0}));
    CHECK(d.values[0] == doctest::Approx(4.0));
    CHECK(d.values[1] == doctest::Approx(1.0));
    CHECK(std::abs(d.vectors(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(d.vectors(1, 1)) == doctest::Approx(1.0));
    CHECK(std::abs(d.vectors(0, 1)) < 1e-15);

    const auto t = symmetric_eigendecomposition(RealMatrix(2, 2, {2.0, 1.0, 1.0, 2.0}));
    CHECK(t.values[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(t.values[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("eigendecomposition rejects asymmetric input and symmetrizes tiny asymmetry") {
    CHECK_THROWS_AS(symmetric_eigendecomposition(RealMatrix(2, 2, {1.0, 0.5, 0.0, 1.0})), ValidationError);
    CHECK_THROWS_AS(symmetric_eigendecomposition(RealMatrix(2, 3)), ValidationError);
    const auto e = symmetric_eigendecomposition(RealMatrix(2, 2, {2.0, 1.0 + 1e-12, 1.0, 2.0}));
    CHECK(e.values[0] == doctest::Approx(3.0));
}

TEST_CASE("eigendecomposition properties on random symmetric matrices") {
    for (std::size_t n : {1u, 2u, 5u, 17u, 40u}) {
        const auto g = random_matrix(n, n, n);
        const RealMatrix a = g + g.transposed();
        const auto e = symmetric_eigendecomposition(a);
        const double norm = frobenius_norm(a);
        CHECK(frobenius_norm(reconstruct(e) - a) <= 1e-8 * norm);
        CHECK(max_abs_diff(e.vectors.transposed() * e.vectors, RealMatrix::identity(n)) <= 1e-9);
        const double sum = std::accumulate(e.values.begin(), e.values.end(), 0.0);
        CHECK(std::abs(sum - a.trace()) <= 1e-9 * std::max(1.0, std::abs(a.trace())));
        CHECK(std::is_sorted(e.values.rbegin(), e.values.rend()));
    }
}

TEST_CASE("eigenvalues agree with an independent solver") {
    const std::size_t n = 30;
    const auto a = random_psd(n, 12, 9);
    const auto e = symmetric_eigendecomposition(a);
    Eigen::MatrixXd m(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = a(r, c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(m);
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(std::abs(e.values[k] - ref.eigenvalues()(static_cast<Eigen::Index>(n - 1 - k))) <= 1e-10 * e.values[0]);
    }
}

TEST_CASE("psd square root") {
    const auto s = psd_sqrt(RealMatrix::diagonal(std::vector<double>{4.0, 9.0}));
    CHECK(max_abs_diff(s, RealMatrix::diagonal(std::vector<double>{2.0, 3.0})) < 1e-15);
    CHECK(psd_sqrt(RealMatrix(3, 3)) == RealMatrix(3, 3));

    const RealMatrix a(2, 2, {2.0, 1.0, 1.0, 2.0});
    const auto r = psd_sqrt(a);
    CHECK(max_abs_diff(r * r, a) < 1e-14);
    CHECK(r(0, 0) == doctest::Approx((std::sqrt(3.0) + 1.0) / 2.0));
    CHECK(r(0, 1) == doctest::Approx((std::sqrt(3.0) - 1.0) / 2.0));

    CHECK_THROWS_AS(psd_sqrt(RealMatrix::diagonal(std::vector<double>{1.0, -1e-3})), NumericError);
    const auto clamped = psd_sqrt(RealMatrix::diagonal(std::vector<double>{1.0, -1e-9}));
    CHECK(clamped(1, 1) == 0.0);
}

TEST_CASE("psd square root reconstructs random PSD matrices up to 512x512") {
    for (std::size_t n : {8u, 64u, 512u}) {
        const RealMatrix a = random_psd(n, n / 2 + 1, 100 + n);
        const auto s = psd_sqrt(a);
        CHECK(max_abs_diff(s, s.transposed()) <= 1e-12 * frobenius_norm(a));
        CHECK(frobenius_norm(s * s - a) <= 1e-7 * frobenius_norm(a));
    }
}

TEST_CASE("singular values match eigenvalues of the Gram matrix") {
    const auto a = random_matrix(12, 7, 4);
    auto sv = singular_values(a);
    const auto e = symmetric_eigendecomposition(a.transposed() * a);
    REQUIRE(sv.size() == 7);
    for (std::size_t k = 0; k < 7; ++k) CHECK(sv[k] == doctest::Approx(std::sqrt(e.values[k])).epsilon(1e-10));
}
