// SPDX-License-Identifier: Apache-2.0
//
// Single-path reconstruction loss over a grid of (theta_a, theta_d), used to
// study how rugged the direct-parameter objective is as the arrays grow.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "chgen/datasets.hpp"
#include "chgen/linalg.hpp"
#include "chgen/ppgc.hpp"

namespace chgen::landscape {

struct LossSurface {
    ppgc::PathParams reference;
    ppgc::ArrayConfig array;
    std::vector<double> theta_a;  // row axis
    std::vector<double> theta_d;  // column axis
    linalg::RealMatrix values;    // values(a, d) = ||H_ref - M(1, theta_a[a], theta_d[d])||_F^2

    std::size_t grid_size() const noexcept { return theta_a.size(); }
};

// G evenly spaced angles with spacing (hi - lo) / (G - 1), shifted so that
// `anchor` is a grid point when it lies in [lo, hi].
std::vector<double> anchored_axis(double anchor, datasets::Range range, std::size_t grid_size);

LossSurface compute_surface(const ppgc::PathParams& reference, const ppgc::ArrayConfig& array,
                            std::size_t grid_size, datasets::Range theta_range);
LossSurface compute_surface(const ppgc::PathParams& reference, const ppgc::ArrayConfig& array,
                            std::vector<double> theta_a, std::vector<double> theta_d);

// Interior points strictly below all eight neighbours.
std::size_t count_strict_local_minima(const linalg::RealMatrix& values);
inline std::size_t count_strict_local_minima(const LossSurface& s) { return count_strict_local_minima(s.values); }

struct GradientBin {
    double lower = 0.0;  // angular distance to the reference, radians
    double upper = 0.0;
    std::size_t count = 0;
    double mean = 0.0;   // mean |grad loss| / max loss
};

// Central-difference gradient magnitudes at interior points, bucketed into
// `bins` equal-width distance bins from the reference angle pair.
std::vector<GradientBin> gradient_magnitude_stats(const LossSurface& surface, std::size_t bins);

std::string surface_csv(const LossSurface& surface);

struct SweepEntry {
    std::size_t antennas = 0;
    std::size_t minima_count = 0;
    double min_loss = 0.0;
    std::vector<GradientBin> gradient_bins;
};

std::string summary_json(const std::vector<SweepEntry>& entries, std::size_t grid_size);

}  // namespace chgen::landscape
