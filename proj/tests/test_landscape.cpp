// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chgen/error.hpp"
#include "chgen/landscape.hpp"
#include "doctest.h"

using namespace chgen;
using namespace chgen::landscape;
using std::numbers::pi;

namespace {

ppgc::ArrayConfig square(std::size_t n) {
    ppgc::ArrayConfig a;
    a.n_r = n;
    a.n_t = n;
    return a;
}

const ppgc::PathParams kReference{1.0, 1.0, 1.0};
const datasets::Range kHalfCircle{-pi / 2, pi / 2};

double min_value(const LossSurface& s) { return *std::ranges::min_element(s.values.data()); }

}  // namespace

TEST_CASE("anchored axis") {
    const auto axis = anchored_axis(1.0, kHalfCircle, 256);
    REQUIRE(axis.size() == 256);
    CHECK(std::ranges::find(axis, 1.0) != axis.end());
    const double h = pi / 255.0;
    for (std::size_t k = 1; k < axis.size(); ++k) CHECK(axis[k] - axis[k - 1] == doctest::Approx(h).epsilon(1e-12));
    CHECK(std::abs(axis.front() - kHalfCircle.low) <= h / 2);

    const auto outside = anchored_axis(3.0, kHalfCircle, 5);
    CHECK(outside.front() == kHalfCircle.low);
    CHECK_THROWS_AS(anchored_axis(0.0, kHalfCircle, 2), ValidationError);
    CHECK_THROWS_AS(anchored_axis(0.0, {1.0, 1.0}, 8), ValidationError);
}

TEST_CASE("surface vanishes at the reference and is nonnegative") {
    for (std::size_t n : {4u, 16u}) {
        const auto s = compute_surface(kReference, square(n), 64, kHalfCircle);
        const auto a = std::ranges::find(s.theta_a, 1.0) - s.theta_a.begin();
        const auto d = std::ranges::find(s.theta_d, 1.0) - s.theta_d.begin();
        REQUIRE(a < 64);
        REQUIRE(d < 64);
        CHECK(s.values(a, d) <= 1e-12);
        for (double v : s.values.data()) CHECK(v >= 0.0);
    }
}

TEST_CASE("surface matches the inner-product expansion") {
    const auto array = square(8);
    const auto s = compute_surface(kReference, array, 32, kHalfCircle);
    const ppgc::PathParams ref[] = {kReference};
    const auto h_ref = ppgc::synthesize_channel(ref, array);
    const double ref_norm = linalg::squared_frobenius_norm(h_ref);
    for (std::size_t a = 0; a < 32; ++a) {
        for (std::size_t d = 0; d < 32; ++d) {
            const ppgc::PathParams p[] = {{1.0, s.theta_a[a], s.theta_d[d]}};
            const auto h = ppgc::synthesize_channel(p, array);
            double inner = 0.0;
            for (std::size_t k = 0; k < h.size(); ++k) inner += (std::conj(h_ref.data()[k]) * h.data()[k]).real();
            const double expected = ref_norm + linalg::squared_frobenius_norm(h) - 2.0 * inner;
            CHECK(std::abs(s.values(a, d) - expected) <= 1e-12);
        }
    }
}

TEST_CASE("strict local minima on simple surfaces") {
    CHECK(count_strict_local_minima(linalg::RealMatrix(16, 16, 2.0)) == 0);
    linalg::RealMatrix bowl(21, 21);
    for (std::size_t i = 0; i < 21; ++i)
        for (std::size_t j = 0; j < 21; ++j) bowl(i, j) = std::pow(i - 7.0, 2) + 0.5 * std::pow(j - 12.0, 2);
    CHECK(count_strict_local_minima(bowl) == 1);
    CHECK_THROWS_AS(count_strict_local_minima(linalg::RealMatrix(2, 5)), ValidationError);
}

TEST_CASE("ruggedness grows with the array size") {
    std::vector<std::size_t> counts;
    std::vector<double> far;
    for (std::size_t n : {4u, 16u, 64u}) {
        const auto s = compute_surface(kReference, square(n), 256, kHalfCircle);
        counts.push_back(count_strict_local_minima(s));
        CHECK(min_value(s) <= 1e-12);
        const auto bins = gradient_magnitude_stats(s, 16);
        REQUIRE(bins.back().count > 0);
        far.push_back(bins.back().mean);
    }
    CHECK(counts[0] < counts[1]);
    CHECK(counts[1] < counts[2]);
    CHECK(far[2] < far[0]);
    CHECK(far[2] < far[1]);
}

TEST_CASE("gradient statistics") {
    const auto s = compute_surface(kReference, square(16), 256, kHalfCircle);
    // Bins narrower than the grid step isolate the reference point.
    const auto fine = gradient_magnitude_stats(s, 2000);
    REQUIRE(fine.front().count == 1);
    // Compared with the ring of nearest neighbours, the gradient at the minimum vanishes.
    const auto ring = std::ranges::find_if(fine.begin() + 1, fine.end(), [](const GradientBin& b) { return b.count > 0; });
    REQUIRE(ring != fine.end());
    CHECK(fine.front().mean < 0.05 * ring->mean);
    std::size_t total = 0;
    for (const auto& b : gradient_magnitude_stats(s, 16)) total += b.count;
    CHECK(total == 254 * 254);
    CHECK_THROWS_AS(gradient_magnitude_stats(s, 0), ValidationError);

    // With equal arrays and equal axes the surface is symmetric in (theta_a, theta_d).
    const auto axis = anchored_axis(1.0, kHalfCircle, 128);
    auto sym = compute_surface(kReference, square(8), axis, axis);
    auto swapped = sym;
    for (std::size_t a = 0; a < 128; ++a)
        for (std::size_t d = 0; d < 128; ++d) swapped.values(a, d) = sym.values(d, a);
    const auto x = gradient_magnitude_stats(sym, 12);
    const auto y = gradient_magnitude_stats(swapped, 12);
    for (std::size_t b = 0; b < x.size(); ++b) {
        CHECK(x[b].count == y[b].count);
        CHECK(x[b].mean == doctest::Approx(y[b].mean).epsilon(1e-9));
    }
}

TEST_CASE("surface is invariant under theta -> pi - theta") {
    // An axis centred on pi/2 maps onto itself reversed.
    const std::size_t g = 101;
    std::vector<double> axis(g);
    for (std::size_t k = 0; k < g; ++k) axis[k] = pi / 2 + (static_cast<double>(k) - 50.0) * 0.02;
    const auto s = compute_surface(kReference, square(16), axis, axis);
    for (std::size_t a = 0; a < g; ++a)
        for (std::size_t d = 0; d < g; ++d) CHECK(std::abs(s.values(a, d) - s.values(g - 1 - a, g - 1 - d)) <= 1e-10);
}

TEST_CASE("minima counts are deterministic and grid stable") {
    for (std::size_t n : {4u, 16u}) {
        std::size_t previous = 0;
        for (std::size_t grid : {64u, 128u, 256u}) {
            const auto s = compute_surface(kReference, square(n), grid, kHalfCircle);
            const auto count = count_strict_local_minima(s);
            CHECK(count == count_strict_local_minima(compute_surface(kReference, square(n), grid, kHalfCircle)));
            CHECK(count >= previous);
            previous = count;
        }
    }
}

TEST_CASE("surface CSV and summary JSON") {
    const auto s = compute_surface(kReference, square(4), 3, kHalfCircle);
    const auto csv = surface_csv(s);
    CHECK(csv.rfind("theta_a,theta_d,loss\n", 0) == 0);
    CHECK(std::ranges::count(csv, '\n') == 10);
    const SweepEntry e{4, 9, 0.0, gradient_magnitude_stats(s, 2)};
    const auto json = summary_json({e}, 3);
    CHECK(json.find("\"minima_count\": 9") != std::string::npos);
    CHECK(json.find("\"gradient_bins\"") != std::string::npos);
}
