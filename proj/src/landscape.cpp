// SPDX-License-Identifier: Apache-2.0

#include "chgen/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "chgen/error.hpp"
#include "json.hpp"

namespace chgen::landscape {

std::vector<double> anchored_axis(double anchor, datasets::Range range, std::size_t grid_size) {
    if (grid_size < 3) throw ValidationError("landscape: grid size must be >= 3");
    if (!(range.low < range.high)) throw ValidationError("landscape: range low must be below high");
    const double h = (range.high - range.low) / static_cast<double>(grid_size - 1);
    const double offset = std::round((anchor - range.low) / h);
    const auto max_index = static_cast<double>(grid_size - 1);
    std::vector<double> axis(grid_size);
    if (offset < 0.0 || offset > max_index) {
        for (std::size_t k = 0; k < grid_size; ++k) axis[k] = range.low + static_cast<double>(k) * h;
        return axis;
    }
    for (std::size_t k = 0; k < grid_size; ++k) axis[k] = anchor + (static_cast<double>(k) - offset) * h;
    return axis;
}

LossSurface compute_surface(const ppgc::PathParams& reference, const ppgc::ArrayConfig& array,
                            std::size_t grid_size, datasets::Range theta_range) {
    return compute_surface(reference, array, anchored_axis(reference.theta_a, theta_range, grid_size),
                           anchored_axis(reference.theta_d, theta_range, grid_size));
}

LossSurface compute_surface(const ppgc::PathParams& reference, const ppgc::ArrayConfig& array,
                            std::vector<double> theta_a, std::vector<double> theta_d) {
    array.validate();
    if (theta_a.size() < 3 || theta_d.size() < 3) throw ValidationError("landscape: grid size must be >= 3");
    const ppgc::PathParams ref[] = {reference};
    const auto h_ref = ppgc::synthesize_channel(ref, array);

    std::vector<std::vector<linalg::Complex>> ar, at;
    for (double t : theta_a) ar.push_back(ppgc::array_response(t, array.n_r, array.u));
    for (double t : theta_d) {
        auto v = ppgc::array_response(t, array.n_t, array.u);
        for (auto& x : v) x = std::conj(x);
        at.push_back(std::move(v));
    }

    LossSurface s{reference, array, std::move(theta_a), std::move(theta_d), {}};
    s.values = linalg::RealMatrix(s.theta_a.size(), s.theta_d.size());
    for (std::size_t a = 0; a < s.theta_a.size(); ++a) {
        for (std::size_t d = 0; d < s.theta_d.size(); ++d) {
            double loss = 0.0;
            for (std::size_t i = 0; i < array.n_r; ++i) {
                const auto ai = ar[a][i];
                for (std::size_t j = 0; j < array.n_t; ++j) loss += std::norm(h_ref(i, j) - 1.0 * ai * at[d][j]);
            }
            s.values(a, d) = loss;
        }
    }
    return s;
}

std::size_t count_strict_local_minima(const linalg::RealMatrix& values) {
    if (values.rows() < 3 || values.cols() < 3) throw ValidationError("landscape: grid size must be >= 3");
    std::size_t count = 0;
    for (std::size_t a = 1; a + 1 < values.rows(); ++a) {
        for (std::size_t d = 1; d + 1 < values.cols(); ++d) {
            const double v = values(a, d);
            bool minimum = true;
            for (int da = -1; da <= 1 && minimum; ++da) {
                for (int dd = -1; dd <= 1; ++dd) {
                    if (da == 0 && dd == 0) continue;
                    if (!(v < values(a + da, d + dd))) {
                        minimum = false;
                        break;
                    }
                }
            }
            if (minimum) ++count;
        }
    }
    return count;
}

std::vector<GradientBin> gradient_magnitude_stats(const LossSurface& s, std::size_t bins) {
    if (bins < 1) throw ValidationError("landscape: need at least one distance bin");
    const std::size_t ga = s.theta_a.size();
    const std::size_t gd = s.theta_d.size();
    double peak = 0.0;
    for (double v : s.values.data()) peak = std::max(peak, v);
    const double norm = peak > 0.0 ? 1.0 / peak : 1.0;

    struct Sample {
        double distance;
        double magnitude;
    };
    std::vector<Sample> samples;
    double max_distance = 0.0;
    for (std::size_t a = 1; a + 1 < ga; ++a) {
        for (std::size_t d = 1; d + 1 < gd; ++d) {
            const double da = (s.values(a + 1, d) - s.values(a - 1, d)) / (s.theta_a[a + 1] - s.theta_a[a - 1]);
            const double dd = (s.values(a, d + 1) - s.values(a, d - 1)) / (s.theta_d[d + 1] - s.theta_d[d - 1]);
            const double dist = std::hypot(s.theta_a[a] - s.reference.theta_a, s.theta_d[d] - s.reference.theta_d);
            samples.push_back({dist, std::hypot(da, dd) * norm});
            max_distance = std::max(max_distance, dist);
        }
    }

    std::vector<GradientBin> out(bins);
    const double width = max_distance > 0.0 ? max_distance / static_cast<double>(bins) : 1.0;
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lower = static_cast<double>(b) * width;
        out[b].upper = static_cast<double>(b + 1) * width;
    }
    for (const auto& smp : samples) {
        auto b = static_cast<std::size_t>(smp.distance / width);
        b = std::min(b, bins - 1);
        out[b].count += 1;
        out[b].mean += smp.magnitude;
    }
    for (auto& b : out)
        if (b.count > 0) b.mean /= static_cast<double>(b.count);
    return out;
}

std::string surface_csv(const LossSurface& s) {
    std::string out = "theta_a,theta_d,loss\n";
    char line[96];
    for (std::size_t a = 0; a < s.theta_a.size(); ++a) {
        for (std::size_t d = 0; d < s.theta_d.size(); ++d) {
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", s.theta_a[a], s.theta_d[d], s.values(a, d));
            out += line;
        }
    }
    return out;
}

std::string summary_json(const std::vector<SweepEntry>& entries, std::size_t grid_size) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json bins = nlohmann::json::array();
        for (const auto& b : e.gradient_bins) {
            bins.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}, {"mean", b.mean}});
        }
        runs.push_back({{"antennas", e.antennas},
                        {"grid", grid_size},
                        {"minima_count", e.minima_count},
                        {"min_loss", e.min_loss},
                        {"gradient_bins", bins}});
    }
    return runs.dump(2);
}

}  // namespace chgen::landscape
