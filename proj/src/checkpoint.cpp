// SPDX-License-Identifier: Apache-2.0
//
// CKP1 layout: "CKP1", u32 version, u64 header length, JSON header, then every
// weight tensor as row-major float64 little-endian in parameter order.

#include <cmath>
#include <cstdint>
#include <string>

#include "chgen/error.hpp"
#include "chgen/genmodel.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace chgen::genmodel {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kPreambleBytes = 4 + 4 + 8;

json config_json(const VaeConfig& c) {
    return json{
        {"mode", to_string(c.mode)},
        {"array", {{"n_r", c.array.n_r}, {"n_t", c.array.n_t}, {"u", c.array.u}}},
        {"latent_dim", c.latent_dim},
        {"encoder_hidden", c.encoder_hidden},
        {"decoder_hidden", c.decoder_hidden},
        {"alpha_d", c.alpha_d},
        {"alpha_s", c.alpha_s},
        {"resolution", c.resolution},
        {"theta_min", c.theta_min},
        {"theta_max", c.theta_max},
        {"complex_gains", c.complex_gains},
        {"paths", c.paths},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"lr", c.lr},
        {"leaky_slope", c.leaky_slope},
        {"seed", c.seed},
    };
}

VaeConfig config_parse(const json& j) {
    try {
        VaeConfig c;
        c.mode = mode_from_string(j.at("mode").get<std::string>());
        const auto& a = j.at("array");
        c.array.n_r = a.at("n_r").get<std::size_t>();
        c.array.n_t = a.at("n_t").get<std::size_t>();
        c.array.u = a.at("u").get<double>();
        c.latent_dim = j.at("latent_dim").get<std::size_t>();
        c.encoder_hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
        c.decoder_hidden = j.at("decoder_hidden").get<std::vector<std::size_t>>();
        c.alpha_d = j.at("alpha_d").get<double>();
        c.alpha_s = j.at("alpha_s").get<double>();
        c.resolution = j.at("resolution").get<std::size_t>();
        c.theta_min = j.at("theta_min").get<double>();
        c.theta_max = j.at("theta_max").get<double>();
        c.complex_gains = j.at("complex_gains").get<bool>();
        c.paths = j.at("paths").get<std::size_t>();
        c.epochs = j.at("epochs").get<std::size_t>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.lr = j.at("lr").get<double>();
        c.leaky_slope = j.at("leaky_slope").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

}  // namespace

std::string config_to_json(const VaeConfig& config) { return config_json(config).dump(); }

VaeConfig config_from_json(const std::string& text) {
    try {
        return config_parse(json::parse(text));
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    json shapes = json::array();
    for (const auto& w : ckpt.weights) shapes.push_back({w.rows(), w.cols()});
    const json header{{"config", config_json(ckpt.config)},
                      {"shapes", shapes},
                      {"scale", ckpt.scale},
                      {"loss_history", ckpt.loss_history}};
    const std::string text = header.dump();

    std::string bytes(kMagic, 4);
    io::put_le<std::uint32_t>(bytes, kVersion);
    io::put_le<std::uint64_t>(bytes, text.size());
    bytes += text;
    for (const auto& w : ckpt.weights) {
        const double* d = w.data();
        for (Eigen::Index i = 0; i < w.size(); ++i) io::put_le<double>(bytes, d[i]);
    }
    io::write_file(path, bytes);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = io::read_file(path);
    const std::string name = path.string();
    if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0) {
        throw FormatError(FormatErrorKind::BadMagic, name + ": not a CKP1 checkpoint");
    }
    if (bytes.size() < kPreambleBytes) throw FormatError(FormatErrorKind::Truncated, name + ": truncated header");
    const auto version = io::get_le<std::uint32_t>(bytes.data() + 4);
    if (version != kVersion) {
        throw FormatError(FormatErrorKind::BadVersion,
                          name + ": unsupported checkpoint version " + std::to_string(version));
    }
    const auto text_len = io::get_le<std::uint64_t>(bytes.data() + 8);
    if (text_len > bytes.size() - kPreambleBytes) {
        throw FormatError(FormatErrorKind::Truncated, name + ": truncated header");
    }

    Checkpoint ckpt;
    json shapes;
    try {
        const json header = json::parse(bytes.substr(kPreambleBytes, text_len));
        ckpt.config = config_parse(header.at("config"));
        ckpt.scale = header.at("scale").get<double>();
        ckpt.loss_history = header.at("loss_history").get<std::vector<double>>();
        shapes = header.at("shapes");
    } catch (const json::exception& e) {
        throw FormatError(FormatErrorKind::Truncated, name + ": malformed header: " + e.what());
    } catch (const ValidationError& e) {
        throw FormatError(FormatErrorKind::ShapeMismatch, name + ": " + e.what());
    }

    // Shapes must agree with what the config builds.
    const VaeModel model(ckpt.config);
    const auto params = model.parameters();
    if (shapes.size() != params.size()) {
        throw FormatError(FormatErrorKind::ShapeMismatch, name + ": tensor count does not match config");
    }
    std::size_t cursor = kPreambleBytes + text_len;
    for (std::size_t t = 0; t < params.size(); ++t) {
        const auto rows = shapes[t].at(0).get<Eigen::Index>();
        const auto cols = shapes[t].at(1).get<Eigen::Index>();
        if (rows != params[t].value().rows() || cols != params[t].value().cols()) {
            throw FormatError(FormatErrorKind::ShapeMismatch,
                              name + ": tensor " + std::to_string(t) + " shape does not match config");
        }
        const auto need = static_cast<std::size_t>(rows * cols) * sizeof(double);
        if (bytes.size() - cursor < need) throw FormatError(FormatErrorKind::Truncated, name + ": truncated payload");
        Matrix m(rows, cols);
        double* d = m.data();
        for (Eigen::Index i = 0; i < m.size(); ++i, cursor += 8) d[i] = io::get_le<double>(bytes.data() + cursor);
        ckpt.weights.push_back(std::move(m));
    }
    if (cursor != bytes.size()) throw FormatError(FormatErrorKind::ShapeMismatch, name + ": trailing bytes");
    return ckpt;
}

}  // namespace chgen::genmodel
