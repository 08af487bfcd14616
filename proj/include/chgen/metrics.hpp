// SPDX-License-Identifier: Apache-2.0
//
// Pointwise and distributional comparisons between channel datasets.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "chgen/datasets.hpp"
#include "chgen/linalg.hpp"

namespace chgen::metrics {

using linalg::ComplexMatrix;
using linalg::RealMatrix;

// One row per channel: [Re vec H, Im vec H], row-major vec.
struct VectorizedSet {
    RealMatrix rows;

    std::size_t count() const noexcept { return rows.rows(); }
    std::size_t dim() const noexcept { return rows.cols(); }
};

// ||H - H_hat||_F^2 / ||H||_F^2.
double nmse(const ComplexMatrix& h, const ComplexMatrix& h_hat);

// Mean nmse over paired samples of two equally sized datasets.
double mean_nmse(const datasets::ChannelDataset& reference, const datasets::ChannelDataset& estimate);

VectorizedSet vectorize(const datasets::ChannelDataset& ds);
VectorizedSet vectorize(std::span<const ComplexMatrix> channels);
std::vector<ComplexMatrix> unvectorize(const VectorizedSet& set, std::size_t n_r, std::size_t n_t);

inline constexpr double kCovarianceRidge = 1e-9;

// 2-Wasserstein distance between Gaussians fitted to the two sets.
double w2_gaussian(const VectorizedSet& a, const VectorizedSet& b);

// Unbiased MMD^2 with an RBF kernel, bandwidth from the pooled median squared distance.
double mmd_rbf(const VectorizedSet& a, const VectorizedSet& b);

struct MetricResult {
    std::string metric;
    double value = 0.0;
    std::size_t count_a = 0;
    std::size_t count_b = 0;
    std::size_t dim = 0;
};

std::string to_json(const std::vector<MetricResult>& results);

}  // namespace chgen::metrics
