// SPDX-License-Identifier: Apache-2.0
//
// Geometric multipath channel model for uniform linear arrays in the azimuth
// plane, and its dictionary-based linearization over a grid of angle pairs.

#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "chgen/linalg.hpp"

namespace chgen::ppgc {

using linalg::Complex;
using linalg::ComplexMatrix;

struct ArrayConfig {
    std::size_t n_t = 16;
    std::size_t n_r = 16;
    double u = std::numbers::pi;  // 2*pi*d/lambda; pi is half-wavelength spacing

    void validate() const;
    friend bool operator==(const ArrayConfig&, const ArrayConfig&) = default;
};

struct PathParams {
    double gain = 0.0;
    double theta_a = 0.0;  // arrival, radians
    double theta_d = 0.0;  // departure, radians

    friend bool operator==(const PathParams&, const PathParams&) = default;
};

struct DictionaryConfig {
    std::size_t resolution = 64;
    double theta_min = -std::numbers::pi / 2.0;
    double theta_max = std::numbers::pi / 2.0;
    ArrayConfig array;

    void validate() const;
    double step() const { return (theta_max - theta_min) / static_cast<double>(resolution); }
    friend bool operator==(const DictionaryConfig&, const DictionaryConfig&) = default;
};

// Unit-norm ULA steering vector: element k is exp(j k u sin(theta)) / sqrt(n).
std::vector<Complex> array_response(double theta, std::size_t n, double u);

ComplexMatrix synthesize_channel(std::span<const PathParams> paths, const ArrayConfig& array);

// Grid angle for a 1-based bin index k in [1, R]: theta_min + k * step.
double grid_angle(std::size_t k, const DictionaryConfig& config);

// Real-valued gain matrix. Rows index arrival bins, columns departure bins,
// both 0-based here (row r corresponds to grid_angle(r + 1)).
class GainMatrix {
public:
    GainMatrix() = default;
    explicit GainMatrix(std::size_t resolution);
    GainMatrix(std::size_t resolution, std::vector<double> weights);

    std::size_t resolution() const noexcept { return resolution_; }
    double& operator()(std::size_t i, std::size_t j) { return weights_[i * resolution_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return weights_[i * resolution_ + j]; }
    std::span<double> weights() noexcept { return weights_; }
    std::span<const double> weights() const noexcept { return weights_; }

    friend bool operator==(const GainMatrix&, const GainMatrix&) = default;

private:
    std::size_t resolution_ = 0;
    std::vector<double> weights_;
};

// R x R precomputed atoms a_r(theta_i) a_t(theta_j)^H, immutable after construction.
class Dictionary {
public:
    explicit Dictionary(DictionaryConfig config);

    const DictionaryConfig& config() const noexcept { return config_; }
    std::size_t resolution() const noexcept { return config_.resolution; }
    std::size_t atom_size() const noexcept { return config_.array.n_r * config_.array.n_t; }

    // 0-based (i, j).
    ComplexMatrix atom(std::size_t i, std::size_t j) const;
    std::span<const Complex> atom_data(std::size_t i, std::size_t j) const;

    // Real synthesis operator of shape (R*R) x (2*n_r*n_t). Row i*R + j holds
    // [Re(vec D_ij), Im(vec D_ij)], so H_planes = w_flat * operator.
    const std::vector<double>& real_operator() const noexcept { return real_operator_; }

    // Complex-gain variant, shape (2*R*R) x (2*n_r*n_t), acting on [Re w, Im w].
    std::vector<double> complex_operator() const;

private:
    DictionaryConfig config_;
    std::vector<Complex> atoms_;  // R*R blocks of n_r*n_t, row-major within a block
    std::vector<double> real_operator_;
};

Dictionary build_dictionary(const DictionaryConfig& config);

ComplexMatrix synthesize_from_gains(const GainMatrix& w, const Dictionary& dict);

// Complex gain matrix as two real planes (real, imaginary).
ComplexMatrix synthesize_from_complex_gains(const GainMatrix& real, const GainMatrix& imag, const Dictionary& dict);

}  // namespace chgen::ppgc
