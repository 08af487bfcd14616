// SPDX-License-Identifier: Apache-2.0

#include "chgen/compressor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "chgen/error.hpp"
#include "chgen/genmodel.hpp"
#include "chgen/metrics.hpp"
#include "chgen/rng.hpp"
#include "json.hpp"

namespace chgen::compressor {

using autograd::Matrix;
using autograd::Tape;
using autograd::Tensor;

namespace {

Tensor run_stack(Tape& tape, const std::vector<autograd::Dense>& layers, Tensor x, double slope) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        x = layers[i].forward(tape, x);
        if (i + 1 < layers.size()) x = tape.leaky_relu(x, slope);
    }
    return x;
}

void check_shape(const ppgc::ArrayConfig& expected, const datasets::ChannelDataset& ds, const char* who) {
    if (ds.array.n_r != expected.n_r || ds.array.n_t != expected.n_t) {
        throw ValidationError(std::string(who) + ": dataset is " + std::to_string(ds.array.n_r) + "x" +
                              std::to_string(ds.array.n_t) + ", expected " + std::to_string(expected.n_r) + "x" +
                              std::to_string(expected.n_t));
    }
}

}  // namespace

void CompressorConfig::validate(std::size_t input_dim) const {
    if (code_dim < 1) throw ValidationError("code_dim: must be >= 1");
    if (code_dim >= input_dim) {
        throw ValidationError("code_dim: " + std::to_string(code_dim) + " does not compress a " +
                              std::to_string(input_dim) + "-dimensional channel");
    }
    for (auto h : hidden)
        if (h < 1) throw ValidationError("hidden: sizes must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size: must be >= 1");
    if (!(lr > 0.0)) throw ValidationError("lr: must be positive");
}

Matrix Compressor::encode(const Matrix& planes) const {
    Tape tape;
    return run_stack(tape, encoder, Tensor::constant(planes), config.leaky_slope).value();
}

Matrix Compressor::decode(const Matrix& codes) const {
    Tape tape;
    return run_stack(tape, decoder, Tensor::constant(codes), config.leaky_slope).value();
}

std::vector<Matrix> Compressor::weights() const {
    std::vector<Matrix> out;
    for (const auto* stack : {&encoder, &decoder}) {
        for (const auto& l : *stack) {
            out.push_back(l.weight.value());
            out.push_back(l.bias.value());
        }
    }
    return out;
}

Compressor make_compressor(const ppgc::ArrayConfig& array, const CompressorConfig& config) {
    array.validate();
    const std::size_t input = 2 * array.n_r * array.n_t;
    config.validate(input);
    Compressor c;
    c.config = config;
    c.array = array;
    std::uint64_t layer = 0;
    auto seed = [&] { return rng::derive_seed(config.seed, {0xC0DEULL, layer++}); };

    std::vector<std::size_t> widths = {input};
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(config.code_dim);
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) c.encoder.push_back(autograd::Dense::init(widths[i], widths[i + 1], seed()));
    std::reverse(widths.begin(), widths.end());
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) c.decoder.push_back(autograd::Dense::init(widths[i], widths[i + 1], seed()));
    return c;
}

Compressor train_compressor(const datasets::ChannelDataset& train_set, const CompressorConfig& config) {
    if (train_set.empty()) throw ValidationError("train_compressor: dataset is empty");
    Compressor model = make_compressor(train_set.array, config);
    const auto normalized = datasets::normalize(train_set);
    model.scale = normalized.scale;
    const Matrix all = genmodel::to_planes(normalized.samples);
    const std::size_t n = normalized.size();

    std::vector<Tensor> params;
    for (auto* stack : {&model.encoder, &model.decoder}) {
        for (auto& l : *stack) {
            params.push_back(l.weight);
            params.push_back(l.bias);
        }
    }
    auto adam = autograd::make_adam_state(params, {config.lr});

    std::vector<std::size_t> order(n);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng::Stream shuffle(config.seed, {0xC0DE5ULL, epoch});
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

        double total = 0.0;
        for (std::size_t begin = 0, b = 0; begin < n; begin += config.batch_size, ++b) {
            const std::size_t count = std::min(config.batch_size, n - begin);
            Matrix x(static_cast<Eigen::Index>(count), all.cols());
            for (std::size_t k = 0; k < count; ++k)
                x.row(static_cast<Eigen::Index>(k)) = all.row(static_cast<Eigen::Index>(order[begin + k]));
            Tape tape;
            auto target = Tensor::constant(std::move(x));
            auto code = run_stack(tape, model.encoder, target, config.leaky_slope);
            auto recon = run_stack(tape, model.decoder, code, config.leaky_slope);
            auto loss = tape.scale(tape.sum(tape.square(tape.sub(target, recon))), 1.0 / static_cast<double>(count));
            const double value = loss.item();
            if (!std::isfinite(value)) {
                throw NumericError("train_compressor: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(b + 1));
            }
            tape.backward(loss);
            autograd::adam_step(params, adam);
            total += value * static_cast<double>(count);
        }
        model.loss_history.push_back(total / static_cast<double>(n));
    }
    model.train_nmse = eval_nmse(model, train_set);
    return model;
}

double eval_nmse(const Compressor& model, const datasets::ChannelDataset& test_set) {
    if (test_set.empty()) throw ValidationError("eval_nmse: dataset is empty");
    check_shape(model.array, test_set, "eval_nmse");
    const std::size_t nr = model.array.n_r;
    const std::size_t nt = model.array.n_t;
    // Test samples in physical units are fed at the training normalization.
    const double to_model = test_set.scale / model.scale;
    constexpr std::size_t kBatch = 256;
    double total = 0.0;
    for (std::size_t begin = 0; begin < test_set.size(); begin += kBatch) {
        const std::size_t rows = std::min(kBatch, test_set.size() - begin);
        const Matrix x = genmodel::to_planes(std::span(test_set.samples).subspan(begin, rows)) * to_model;
        const Matrix y = model.decode(model.encode(x));
        for (std::size_t k = 0; k < rows; ++k) {
            const auto r = static_cast<Eigen::Index>(k);
            total += metrics::nmse(genmodel::from_planes(x, r, nr, nt), genmodel::from_planes(y, r, nr, nt));
        }
    }
    return total / static_cast<double>(test_set.size());
}

CrossEvalTable cross_eval(const std::vector<NamedDataset>& train_sets, const std::vector<NamedDataset>& test_sets,
                          const CompressorConfig& config) {
    if (train_sets.empty() || test_sets.empty()) throw ValidationError("cross_eval: need at least one train and one test set");
    const auto& array = train_sets.front().data.array;
    for (const auto* list : {&train_sets, &test_sets}) {
        for (const auto& s : *list) check_shape(array, s.data, ("cross_eval: " + s.name).c_str());
    }
    CrossEvalTable table;
    table.nmse = linalg::RealMatrix(train_sets.size(), test_sets.size());
    for (const auto& s : train_sets) table.train_names.push_back(s.name);
    for (const auto& s : test_sets) table.test_names.push_back(s.name);
    for (std::size_t i = 0; i < train_sets.size(); ++i) {
        const auto model = train_compressor(train_sets[i].data, config);
        for (std::size_t j = 0; j < test_sets.size(); ++j) table.nmse(i, j) = eval_nmse(model, test_sets[j].data);
    }
    return table;
}

std::string CrossEvalTable::to_csv() const {
    std::string out = "train\\test";
    for (const auto& n : test_names) out += "," + n;
    out += "\n";
    char cell[32];
    for (std::size_t i = 0; i < train_names.size(); ++i) {
        out += train_names[i];
        for (std::size_t j = 0; j < test_names.size(); ++j) {
            std::snprintf(cell, sizeof cell, ",%.17g", nmse(i, j));
            out += cell;
        }
        out += "\n";
    }
    return out;
}

std::string CrossEvalTable::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < train_names.size(); ++i) {
        std::vector<double> r(nmse.row(i).begin(), nmse.row(i).end());
        rows.push_back(r);
    }
    return nlohmann::json{{"train", train_names}, {"test", test_names}, {"nmse", rows}}.dump(2);
}

}  // namespace chgen::compressor
