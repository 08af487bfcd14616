// SPDX-License-Identifier: Apache-2.0

#include "chgen/datasets.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <sstream>

#include "chgen/error.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace chgen::datasets {

using nlohmann::json;
using io::get_le;
using io::put_le;
using io::read_file;
using io::write_file;

namespace {

constexpr char kMagic[4] = {'C', 'H', 'M', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 8;

void check_range(const Range& r, const std::string& field, bool angle) {
    if (!std::isfinite(r.low) || !std::isfinite(r.high)) throw ValidationError(field + ": bounds must be finite");
    if (r.low > r.high) throw ValidationError(field + ": low exceeds high");
    if (angle && (r.low < -std::numbers::pi || r.high > std::numbers::pi)) {
        throw ValidationError(field + ": angles must lie in [-pi, pi]");
    }
}

Range parse_range(const json& node, const std::string& field) {
    if (!node.is_array() || node.size() != 2 || !node[0].is_number() || !node[1].is_number()) {
        throw ValidationError(field + ": expected [low, high]");
    }
    return {node[0].get<double>(), node[1].get<double>()};
}

}  // namespace

void ScenarioSpec::validate() const {
    if (paths.empty()) throw ValidationError("paths: at least one path is required");
    for (std::size_t p = 0; p < paths.size(); ++p) {
        const std::string prefix = "paths[" + std::to_string(p) + "]";
        check_range(paths[p].theta_a, prefix + ".theta_a", true);
        check_range(paths[p].theta_d, prefix + ".theta_d", true);
        check_range(paths[p].gain, prefix + ".gain", false);
    }
    array.validate();
}

ParamList sample_params(const ScenarioSpec& spec, rng::Stream& stream) {
    ParamList out;
    out.reserve(spec.paths.size());
    for (const auto& range : spec.paths) {
        PathParams p;
        p.theta_a = stream.uniform(range.theta_a.low, range.theta_a.high);
        p.theta_d = stream.uniform(range.theta_d.low, range.theta_d.high);
        p.gain = stream.uniform(range.gain.low, range.gain.high);
        out.push_back(p);
    }
    return out;
}

ChannelDataset generate_dataset(const ScenarioSpec& spec, std::size_t count) {
    spec.validate();
    if (count < 1) throw ValidationError("count: must be >= 1");
    ChannelDataset ds;
    ds.array = spec.array;
    ds.samples.reserve(count);
    std::vector<ParamList> params;
    params.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        rng::Stream stream(spec.seed, {i});
        auto p = sample_params(spec, stream);
        ds.samples.push_back(ppgc::synthesize_channel(p, spec.array));
        params.push_back(std::move(p));
    }
    ds.params = std::move(params);
    return ds;
}

ChannelDataset subset(const ChannelDataset& ds, std::span<const std::size_t> indices) {
    ChannelDataset out;
    out.array = ds.array;
    out.scale = ds.scale;
    out.samples.reserve(indices.size());
    if (ds.params) out.params.emplace();
    for (std::size_t idx : indices) {
        if (idx >= ds.size()) throw ValidationError("subset: index out of range");
        out.samples.push_back(ds.samples[idx]);
        if (ds.params) out.params->push_back((*ds.params)[idx]);
    }
    return out;
}

std::pair<ChannelDataset, ChannelDataset> split(const ChannelDataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("split: train_fraction must lie in (0, 1)");
    }
    const std::size_t n = ds.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng::Stream stream(seed, {0x5B117ULL});
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = stream.below(i);
        std::swap(order[i - 1], order[j]);
    }
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
    std::span<const std::size_t> all(order);
    return {subset(ds, all.first(n_train)), subset(ds, all.subspan(n_train))};
}

ChannelDataset normalize(const ChannelDataset& ds) {
    if (ds.empty()) throw ValidationError("normalize: dataset is empty");
    double power = 0.0;
    for (const auto& h : ds.samples) power += linalg::squared_frobenius_norm(h);
    power /= static_cast<double>(ds.size());
    if (!(power > 0.0)) throw ValidationError("normalize: dataset has zero power");
    const double c = std::sqrt(power);
    ChannelDataset out = ds;
    for (auto& h : out.samples) h *= 1.0 / c;
    out.scale = ds.scale * c;
    return out;
}

ChannelDataset denormalize(const ChannelDataset& ds) {
    ChannelDataset out = ds;
    for (auto& h : out.samples) h *= ds.scale;
    out.scale = 1.0;
    return out;
}

void write_dataset(const ChannelDataset& ds, const std::filesystem::path& path) {
    const std::size_t nr = ds.array.n_r;
    const std::size_t nt = ds.array.n_t;
    std::string bytes;
    bytes.reserve(kHeaderBytes + ds.size() * nr * nt * 8);
    bytes.append(kMagic, 4);
    put_le<std::uint32_t>(bytes, kVersion);
    put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(ds.size()));
    put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(nr));
    put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(nt));
    put_le<double>(bytes, ds.scale);
    for (const auto& h : ds.samples) {
        if (h.rows() != nr || h.cols() != nt) throw ValidationError("write_dataset: sample shape mismatch");
        for (const auto& x : h.data()) {
            put_le<float>(bytes, static_cast<float>(x.real()));
            put_le<float>(bytes, static_cast<float>(x.imag()));
        }
    }
    write_file(path, bytes);
    if (ds.params) write_params_sidecar(*ds.params, params_sidecar_path(path));
}

ChannelDataset read_dataset(const std::filesystem::path& path, std::optional<Shape> expected) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError(FormatErrorKind::BadMagic, path.string() + ": bad magic (not a CHM1 file)");
    }
    if (bytes.size() < kHeaderBytes) {
        throw FormatError(FormatErrorKind::Truncated, path.string() + ": truncated header");
    }
    const char* p = bytes.data() + 4;
    const auto version = get_le<std::uint32_t>(p);
    if (version != kVersion) {
        throw FormatError(FormatErrorKind::BadVersion, path.string() + ": unsupported version " + std::to_string(version));
    }
    const auto count = get_le<std::uint32_t>(p + 4);
    const auto nr = get_le<std::uint32_t>(p + 8);
    const auto nt = get_le<std::uint32_t>(p + 12);
    const auto scale = get_le<double>(p + 16);
    if (nr == 0 || nt == 0) {
        throw FormatError(FormatErrorKind::ShapeMismatch, path.string() + ": zero antenna count in header");
    }
    if (expected && (expected->n_r != nr || expected->n_t != nt)) {
        throw FormatError(FormatErrorKind::ShapeMismatch,
                          path.string() + ": shape " + std::to_string(nr) + "x" + std::to_string(nt) + ", expected " +
                              std::to_string(expected->n_r) + "x" + std::to_string(expected->n_t));
    }
    const std::size_t payload = static_cast<std::size_t>(count) * nr * nt * 8;
    if (bytes.size() < kHeaderBytes + payload) {
        throw FormatError(FormatErrorKind::Truncated, path.string() + ": truncated payload (" +
                                                          std::to_string(bytes.size() - kHeaderBytes) + " of " +
                                                          std::to_string(payload) + " bytes)");
    }
    if (bytes.size() > kHeaderBytes + payload) {
        throw FormatError(FormatErrorKind::ShapeMismatch, path.string() + ": payload larger than header shape");
    }

    ChannelDataset ds;
    ds.array.n_r = nr;
    ds.array.n_t = nt;
    ds.scale = scale;
    ds.samples.reserve(count);
    const char* cursor = bytes.data() + kHeaderBytes;
    for (std::size_t s = 0; s < count; ++s) {
        ComplexMatrix h(nr, nt);
        for (auto& x : h.data()) {
            const float re = get_le<float>(cursor);
            const float im = get_le<float>(cursor + 4);
            cursor += 8;
            x = {re, im};
        }
        ds.samples.push_back(std::move(h));
    }
    const auto sidecar = params_sidecar_path(path);
    if (std::filesystem::exists(sidecar)) {
        auto params = read_params_sidecar(sidecar);
        if (params.size() != ds.size()) {
            throw FormatError(FormatErrorKind::ShapeMismatch, sidecar.string() + ": " + std::to_string(params.size()) +
                                                                  " entries for " + std::to_string(ds.size()) +
                                                                  " samples");
        }
        ds.params = std::move(params);
    }
    return ds;
}

std::filesystem::path params_sidecar_path(const std::filesystem::path& dataset_path) {
    auto out = dataset_path;
    out.replace_extension(".params.json");
    return out;
}

void write_params_sidecar(const std::vector<ParamList>& params, const std::filesystem::path& path) {
    json doc = json::array();
    for (const auto& list : params) {
        json entry = json::array();
        for (const auto& p : list) entry.push_back({{"gain", p.gain}, {"theta_a", p.theta_a}, {"theta_d", p.theta_d}});
        doc.push_back(std::move(entry));
    }
    write_file(path, doc.dump() + "\n");
}

std::vector<ParamList> read_params_sidecar(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw IoError(path.string() + ": expected a JSON array");
    std::vector<ParamList> out;
    out.reserve(doc.size());
    try {
        for (const auto& entry : doc) {
            ParamList list;
            for (const auto& p : entry) {
                list.push_back({p.at("gain").get<double>(), p.at("theta_a").get<double>(), p.at("theta_d").get<double>()});
            }
            out.push_back(std::move(list));
        }
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return out;
}

ScenarioSpec parse_scenario(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("scenario: expected an object");

    ScenarioSpec spec;
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw ValidationError("seed: expected a non-negative integer");
        spec.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("array")) {
        const auto& a = doc["array"];
        if (!a.is_object()) throw ValidationError("array: expected an object");
        auto count = [&](const char* key, std::size_t fallback) {
            if (!a.contains(key)) return fallback;
            if (!a[key].is_number_unsigned()) throw ValidationError(std::string("array.") + key + ": expected a positive integer");
            return a[key].get<std::size_t>();
        };
        spec.array.n_r = count("n_r", spec.array.n_r);
        spec.array.n_t = count("n_t", spec.array.n_t);
        if (a.contains("u")) {
            if (!a["u"].is_number()) throw ValidationError("array.u: expected a number");
            spec.array.u = a["u"].get<double>();
        }
        if (spec.array.n_r < 1) throw ValidationError("array.n_r: must be >= 1");
        if (spec.array.n_t < 1) throw ValidationError("array.n_t: must be >= 1");
        if (!(spec.array.u > 0.0)) throw ValidationError("array.u: must be positive");
    }
    if (!doc.contains("paths") || !doc["paths"].is_array()) throw ValidationError("paths: expected an array");
    for (std::size_t p = 0; p < doc["paths"].size(); ++p) {
        const auto& node = doc["paths"][p];
        const std::string prefix = "paths[" + std::to_string(p) + "]";
        if (!node.is_object()) throw ValidationError(prefix + ": expected an object");
        PathRange range;
        for (const char* key : {"theta_a", "theta_d", "gain"}) {
            if (!node.contains(key)) throw ValidationError(prefix + "." + key + ": missing");
        }
        range.theta_a = parse_range(node["theta_a"], prefix + ".theta_a");
        range.theta_d = parse_range(node["theta_d"], prefix + ".theta_d");
        range.gain = parse_range(node["gain"], prefix + ".gain");
        spec.paths.push_back(range);
    }
    spec.validate();
    return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path)); }

std::string scenario_to_json(const ScenarioSpec& spec) {
    json doc;
    doc["seed"] = spec.seed;
    doc["array"] = {{"n_r", spec.array.n_r}, {"n_t", spec.array.n_t}, {"u", spec.array.u}};
    doc["paths"] = json::array();
    for (const auto& r : spec.paths) {
        doc["paths"].push_back({{"theta_a", {r.theta_a.low, r.theta_a.high}},
                                {"theta_d", {r.theta_d.low, r.theta_d.high}},
                                {"gain", {r.gain.low, r.gain.high}}});
    }
    return doc.dump(2);
}

}  // namespace chgen::datasets
