// SPDX-License-Identifier: Apache-2.0
//
// Dense channel-compression autoencoder and the train-on-X / test-on-Y
// cross-evaluation protocol used to compare real and generated datasets.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chgen/autograd.hpp"
#include "chgen/datasets.hpp"
#include "chgen/linalg.hpp"

namespace chgen::compressor {

struct CompressorConfig {
    std::size_t code_dim = 32;
    std::vector<std::size_t> hidden = {256};  // encoder side; the decoder mirrors it
    std::size_t epochs = 100;
    std::size_t batch_size = 256;
    double lr = 1e-3;
    double leaky_slope = 0.01;
    std::uint64_t seed = 0;

    void validate(std::size_t input_dim) const;
};

struct Compressor {
    CompressorConfig config;
    ppgc::ArrayConfig array;
    std::vector<autograd::Dense> encoder;  // last layer emits the code
    std::vector<autograd::Dense> decoder;  // last layer emits the channel planes
    double scale = 1.0;                    // training-set normalization
    std::vector<double> loss_history;  // per-epoch mean squared error on normalized planes
    double train_nmse = 0.0;           // eval_nmse on the training set after the last epoch

    autograd::Matrix encode(const autograd::Matrix& planes) const;
    autograd::Matrix decode(const autograd::Matrix& codes) const;
    std::vector<autograd::Matrix> weights() const;
};

Compressor make_compressor(const ppgc::ArrayConfig& array, const CompressorConfig& config);

Compressor train_compressor(const datasets::ChannelDataset& train_set, const CompressorConfig& config);

// Mean over samples of nmse(H, decode(encode(H))).
double eval_nmse(const Compressor& model, const datasets::ChannelDataset& test_set);

struct NamedDataset {
    std::string name;
    datasets::ChannelDataset data;
};

struct CrossEvalTable {
    std::vector<std::string> train_names;
    std::vector<std::string> test_names;
    linalg::RealMatrix nmse;  // train x test

    std::string to_csv() const;
    std::string to_json() const;
};

// Trains one compressor per training set and evaluates it on every test set.
CrossEvalTable cross_eval(const std::vector<NamedDataset>& train_sets, const std::vector<NamedDataset>& test_sets,
                          const CompressorConfig& config);

}  // namespace chgen::compressor
