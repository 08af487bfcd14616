// SPDX-License-Identifier: Apache-2.0

#include "chgen/ppgc.hpp"

#include <cmath>
#include <string>

#include "chgen/error.hpp"

namespace chgen::ppgc {

void ArrayConfig::validate() const {
    if (n_t < 1 || n_r < 1) throw ValidationError("array: antenna counts must be >= 1");
    if (!(u > 0.0) || !std::isfinite(u)) throw ValidationError("array: u must be positive and finite");
}

void DictionaryConfig::validate() const {
    if (resolution < 1) throw ValidationError("dictionary: resolution must be >= 1");
    if (!(theta_min < theta_max)) throw ValidationError("dictionary: theta_min must be below theta_max");
    array.validate();
}

std::vector<Complex> array_response(double theta, std::size_t n, double u) {
    if (n < 1) throw ValidationError("array_response: n must be >= 1");
    const double phase = u * std::sin(theta);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<Complex> a(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double arg = static_cast<double>(k) * phase;
        a[k] = Complex{scale * std::cos(arg), scale * std::sin(arg)};
    }
    return a;
}

ComplexMatrix synthesize_channel(std::span<const PathParams> paths, const ArrayConfig& array) {
    if (paths.empty()) throw ValidationError("synthesize_channel: at least one path is required");
    ComplexMatrix h(array.n_r, array.n_t);
    for (const auto& p : paths) {
        const auto ar = array_response(p.theta_a, array.n_r, array.u);
        const auto at = array_response(p.theta_d, array.n_t, array.u);
        for (std::size_t i = 0; i < array.n_r; ++i)
            for (std::size_t j = 0; j < array.n_t; ++j) h(i, j) += p.gain * ar[i] * std::conj(at[j]);
    }
    return h;
}

double grid_angle(std::size_t k, const DictionaryConfig& config) {
    if (k < 1 || k > config.resolution) {
        throw ValidationError("grid_angle: bin " + std::to_string(k) + " outside [1, " +
                              std::to_string(config.resolution) + "]");
    }
    if (k == config.resolution) return config.theta_max;
    return config.theta_min + static_cast<double>(k) * config.step();
}

GainMatrix::GainMatrix(std::size_t resolution) : resolution_(resolution), weights_(resolution * resolution, 0.0) {}

GainMatrix::GainMatrix(std::size_t resolution, std::vector<double> weights)
    : resolution_(resolution), weights_(std::move(weights)) {
    if (weights_.size() != resolution_ * resolution_) {
        throw ValidationError("GainMatrix: expected " + std::to_string(resolution_ * resolution_) + " weights, got " +
                              std::to_string(weights_.size()));
    }
}

Dictionary::Dictionary(DictionaryConfig config) : config_(std::move(config)) {
    config_.validate();
    const std::size_t r = config_.resolution;
    const std::size_t nr = config_.array.n_r;
    const std::size_t nt = config_.array.n_t;
    const std::size_t block = nr * nt;

    std::vector<std::vector<Complex>> arrival(r), departure(r);
    for (std::size_t k = 0; k < r; ++k) {
        const double theta = grid_angle(k + 1, config_);
        arrival[k] = array_response(theta, nr, config_.array.u);
        departure[k] = array_response(theta, nt, config_.array.u);
    }

    atoms_.resize(r * r * block);
    real_operator_.resize(r * r * 2 * block);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            Complex* dst = atoms_.data() + (i * r + j) * block;
            double* row = real_operator_.data() + (i * r + j) * 2 * block;
            for (std::size_t a = 0; a < nr; ++a) {
                for (std::size_t b = 0; b < nt; ++b) {
                    const Complex v = arrival[i][a] * std::conj(departure[j][b]);
                    dst[a * nt + b] = v;
                    row[a * nt + b] = v.real();
                    row[block + a * nt + b] = v.imag();
                }
            }
        }
    }
}

ComplexMatrix Dictionary::atom(std::size_t i, std::size_t j) const {
    auto d = atom_data(i, j);
    return ComplexMatrix(config_.array.n_r, config_.array.n_t, std::vector<Complex>(d.begin(), d.end()));
}

std::span<const Complex> Dictionary::atom_data(std::size_t i, std::size_t j) const {
    const std::size_t r = config_.resolution;
    if (i >= r || j >= r) throw ValidationError("Dictionary::atom: index out of range");
    return {atoms_.data() + (i * r + j) * atom_size(), atom_size()};
}

std::vector<double> Dictionary::complex_operator() const {
    // [Re w, Im w] -> [Re H, Im H]: Re H = Re w Re D - Im w Im D, Im H = Re w Im D + Im w Re D.
    const std::size_t atoms = config_.resolution * config_.resolution;
    const std::size_t block = atom_size();
    const std::size_t width = 2 * block;
    std::vector<double> op(2 * atoms * width);
    for (std::size_t k = 0; k < atoms; ++k) {
        const double* src = real_operator_.data() + k * width;
        double* re_row = op.data() + k * width;
        double* im_row = op.data() + (atoms + k) * width;
        for (std::size_t e = 0; e < block; ++e) {
            re_row[e] = src[e];
            re_row[block + e] = src[block + e];
            im_row[e] = -src[block + e];
            im_row[block + e] = src[e];
        }
    }
    return op;
}

Dictionary build_dictionary(const DictionaryConfig& config) { return Dictionary(config); }

ComplexMatrix synthesize_from_gains(const GainMatrix& w, const Dictionary& dict) {
    if (w.resolution() != dict.resolution()) {
        throw ValidationError("synthesize_from_gains: gain resolution " + std::to_string(w.resolution()) +
                              " != dictionary resolution " + std::to_string(dict.resolution()));
    }
    const auto& arr = dict.config().array;
    ComplexMatrix h(arr.n_r, arr.n_t);
    auto out = h.data();
    for (std::size_t i = 0; i < w.resolution(); ++i) {
        for (std::size_t j = 0; j < w.resolution(); ++j) {
            const double g = w(i, j);
            if (g == 0.0) continue;
            auto atom = dict.atom_data(i, j);
            for (std::size_t e = 0; e < out.size(); ++e) out[e] += g * atom[e];
        }
    }
    return h;
}

ComplexMatrix synthesize_from_complex_gains(const GainMatrix& real, const GainMatrix& imag, const Dictionary& dict) {
    if (real.resolution() != dict.resolution() || imag.resolution() != dict.resolution()) {
        throw ValidationError("synthesize_from_complex_gains: resolution mismatch");
    }
    const auto& arr = dict.config().array;
    ComplexMatrix h(arr.n_r, arr.n_t);
    auto out = h.data();
    for (std::size_t i = 0; i < dict.resolution(); ++i) {
        for (std::size_t j = 0; j < dict.resolution(); ++j) {
            const Complex g{real(i, j), imag(i, j)};
            if (g == Complex{0.0, 0.0}) continue;
            auto atom = dict.atom_data(i, j);
            for (std::size_t e = 0; e < out.size(); ++e) out[e] += g * atom[e];
        }
    }
    return h;
}

}  // namespace chgen::ppgc
