// SPDX-License-Identifier: Apache-2.0
//
// Scenario-driven channel datasets: parameter sampling, synthesis, splitting,
// normalization and the CHM1 binary file format.
//
// CHM1 layout (little-endian):
//   "CHM1" | u32 version=1 | u32 count | u32 n_r | u32 n_t | f64 scale |
//   count * n_r * n_t * (f32 real, f32 imag), sample-major then row-major.
// Ground-truth parameters live in an optional "<stem>.params.json" sidecar.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chgen/ppgc.hpp"
#include "chgen/rng.hpp"

namespace chgen::datasets {

using linalg::ComplexMatrix;
using ppgc::ArrayConfig;
using ppgc::PathParams;

struct Range {
    double low = 0.0;
    double high = 0.0;
};

struct PathRange {
    Range theta_a;
    Range theta_d;
    Range gain;
};

struct ScenarioSpec {
    std::vector<PathRange> paths;
    ArrayConfig array;
    std::uint64_t seed = 0;

    void validate() const;
};

using ParamList = std::vector<PathParams>;

struct ChannelDataset {
    ArrayConfig array;
    std::vector<ComplexMatrix> samples;
    std::optional<std::vector<ParamList>> params;  // physical units, one list per sample
    double scale = 1.0;                            // stored samples = physical / scale

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
};

// Draw order per path: theta_a, theta_d, gain.
ParamList sample_params(const ScenarioSpec& spec, rng::Stream& stream);

// Sample i uses the stream keyed by (spec.seed, i).
ChannelDataset generate_dataset(const ScenarioSpec& spec, std::size_t count);

// Fisher-Yates shuffle keyed by seed; train takes the first floor(N * f).
std::pair<ChannelDataset, ChannelDataset> split(const ChannelDataset& ds, double train_fraction, std::uint64_t seed);

ChannelDataset subset(const ChannelDataset& ds, std::span<const std::size_t> indices);

// Divides by sqrt(mean ||H||_F^2) and folds that factor into ds.scale.
ChannelDataset normalize(const ChannelDataset& ds);
ChannelDataset denormalize(const ChannelDataset& ds);

void write_dataset(const ChannelDataset& ds, const std::filesystem::path& path);

struct Shape {
    std::size_t n_r = 0;
    std::size_t n_t = 0;
};

// Reads the sidecar too when it exists next to the file.
ChannelDataset read_dataset(const std::filesystem::path& path, std::optional<Shape> expected = std::nullopt);

std::filesystem::path params_sidecar_path(const std::filesystem::path& dataset_path);
void write_params_sidecar(const std::vector<ParamList>& params, const std::filesystem::path& path);
std::vector<ParamList> read_params_sidecar(const std::filesystem::path& path);

// JSON scenario description:
//   {"seed": 7, "array": {"n_r": 16, "n_t": 16, "u": 3.14159},
//    "paths": [{"theta_a": [lo, hi], "theta_d": [lo, hi], "gain": [lo, hi]}]}
// Validation errors name the offending field, e.g. "paths[1].gain".
ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const ScenarioSpec& spec);

}  // namespace chgen::datasets
