// SPDX-License-Identifier: Apache-2.0

#include "chgen/genmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "chgen/error.hpp"
#include "chgen/metrics.hpp"
#include "chgen/rng.hpp"

namespace chgen::genmodel {

namespace {

constexpr std::size_t kEvalBatch = 256;
constexpr double kGainHeadOutputScale = 0.1;

Matrix noise_block(std::size_t rows, std::size_t latent, const std::function<std::vector<double>(std::size_t)>& draw) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(latent));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto v = draw(r);
        for (std::size_t c = 0; c < latent; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
    }
    return m;
}

}  // namespace

std::string to_string(Mode mode) { return mode == Mode::Direct ? "direct" : "linearized"; }

Mode mode_from_string(const std::string& name) {
    if (name == "direct") return Mode::Direct;
    if (name == "linearized") return Mode::Linearized;
    throw ValidationError("mode: expected 'linearized' or 'direct', got '" + name + "'");
}

void VaeConfig::validate() const {
    array.validate();
    if (latent_dim < 1) throw ValidationError("latent_dim: must be >= 1");
    if (!(alpha_d >= 0.0) || !(alpha_s >= 0.0)) throw ValidationError("alpha_d/alpha_s: must be >= 0");
    for (auto h : encoder_hidden)
        if (h < 1) throw ValidationError("encoder_hidden: sizes must be >= 1");
    for (auto h : decoder_hidden)
        if (h < 1) throw ValidationError("decoder_hidden: sizes must be >= 1");
    if (mode == Mode::Direct && paths < 1) throw ValidationError("paths: direct mode requires at least one path");
    if (mode == Mode::Linearized) dictionary_config().validate();
    if (batch_size < 1) throw ValidationError("batch_size: must be >= 1");
    if (!(lr > 0.0)) throw ValidationError("lr: must be positive");
}

ppgc::DictionaryConfig VaeConfig::dictionary_config() const {
    return {resolution, theta_min, theta_max, array};
}

Matrix to_planes(std::span<const ComplexMatrix> channels) {
    if (channels.empty()) return Matrix(0, 0);
    const std::size_t block = channels.front().size();
    Matrix out(static_cast<Eigen::Index>(channels.size()), static_cast<Eigen::Index>(2 * block));
    for (std::size_t b = 0; b < channels.size(); ++b) {
        const auto data = channels[b].data();
        if (data.size() != block) throw ValidationError("to_planes: channels differ in shape");
        for (std::size_t e = 0; e < block; ++e) {
            out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e)) = data[e].real();
            out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(block + e)) = data[e].imag();
        }
    }
    return out;
}

ComplexMatrix from_planes(const Matrix& planes, Eigen::Index row, std::size_t n_r, std::size_t n_t) {
    const std::size_t block = n_r * n_t;
    if (static_cast<std::size_t>(planes.cols()) != 2 * block) throw ValidationError("from_planes: width mismatch");
    ComplexMatrix h(n_r, n_t);
    auto data = h.data();
    for (std::size_t e = 0; e < block; ++e) {
        data[e] = {planes(row, static_cast<Eigen::Index>(e)), planes(row, static_cast<Eigen::Index>(block + e))};
    }
    return h;
}

VaeModel::VaeModel(const VaeConfig& config) : config_(config) {
    config_.validate();
    std::uint64_t layer = 0;
    auto next_seed = [&] { return rng::derive_seed(config_.seed, {0xC0FFEEULL, layer++}); };

    std::size_t width = config_.input_dim();
    for (auto h : config_.encoder_hidden) {
        encoder_.push_back(autograd::Dense::init(width, h, next_seed()));
        width = h;
    }
    mu_head_ = autograd::Dense::init(width, config_.latent_dim, next_seed());
    log_var_head_ = autograd::Dense::init(width, config_.latent_dim, next_seed());

    width = config_.latent_dim;
    for (auto h : config_.decoder_hidden) {
        decoder_.push_back(autograd::Dense::init(width, h, next_seed()));
        width = h;
    }
    if (config_.mode == Mode::Linearized) {
        const std::size_t atoms = config_.resolution * config_.resolution;
        gain_head_ = autograd::Dense::init(width, config_.gain_planes() * atoms, next_seed());
        dictionary_ = std::make_shared<const ppgc::Dictionary>(config_.dictionary_config());
        const std::vector<double> op = config_.complex_gains ? dictionary_->complex_operator() : dictionary_->real_operator();
        const auto rows = static_cast<Eigen::Index>(config_.gain_planes() * atoms);
        synthesis_operator_ =
            std::make_shared<const Matrix>(Eigen::Map<const Matrix>(op.data(), rows, static_cast<Eigen::Index>(config_.input_dim())));
    } else {
        gain_head_ = autograd::Dense::init(width, config_.paths, next_seed());
        angle_head_ = autograd::Dense::init(width, 2 * config_.paths, next_seed());
    }
}

VaeModel VaeModel::from_checkpoint(const Checkpoint& ckpt) {
    VaeModel model(ckpt.config);
    model.load_weights(ckpt.weights);
    return model;
}

std::vector<Tensor> VaeModel::parameters() const {
    std::vector<Tensor> out;
    for (const auto& l : encoder_) out.insert(out.end(), {l.weight, l.bias});
    out.insert(out.end(), {mu_head_.weight, mu_head_.bias, log_var_head_.weight, log_var_head_.bias});
    for (const auto& l : decoder_) out.insert(out.end(), {l.weight, l.bias});
    out.insert(out.end(), {gain_head_.weight, gain_head_.bias});
    if (config_.mode == Mode::Direct) out.insert(out.end(), {angle_head_.weight, angle_head_.bias});
    return out;
}

std::vector<std::string> VaeModel::parameter_names() const {
    std::vector<std::string> out;
    auto add = [&](const std::string& base) {
        out.push_back(base + ".weight");
        out.push_back(base + ".bias");
    };
    for (std::size_t i = 0; i < encoder_.size(); ++i) add("encoder." + std::to_string(i));
    add("encoder.mu");
    add("encoder.log_var");
    for (std::size_t i = 0; i < decoder_.size(); ++i) add("decoder." + std::to_string(i));
    add(config_.mode == Mode::Linearized ? "decoder.gains" : "decoder.path_gains");
    if (config_.mode == Mode::Direct) add("decoder.path_angles");
    return out;
}

void VaeModel::load_weights(std::span<const Matrix> weights) {
    auto params = parameters();
    if (weights.size() != params.size()) {
        throw ValidationError("load_weights: expected " + std::to_string(params.size()) + " tensors, got " +
                              std::to_string(weights.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (weights[i].rows() != params[i].value().rows() || weights[i].cols() != params[i].value().cols()) {
            throw ValidationError("load_weights: tensor " + std::to_string(i) + " has the wrong shape");
        }
        params[i].mutable_value() = weights[i];
    }
}

std::vector<Matrix> VaeModel::weights() const {
    std::vector<Matrix> out;
    for (const auto& p : parameters()) out.push_back(p.value());
    return out;
}

Tensor VaeModel::hidden_stack(Tape& tape, const std::vector<autograd::Dense>& layers, Tensor x) const {
    for (const auto& l : layers) x = tape.leaky_relu(l.forward(tape, x), config_.leaky_slope);
    return x;
}

std::pair<Tensor, Tensor> VaeModel::encode(Tape& tape, const Tensor& planes) const {
    if (planes.cols() != config_.input_dim()) {
        throw ValidationError("encode: input width " + std::to_string(planes.cols()) + ", expected " +
                              std::to_string(config_.input_dim()));
    }
    // Unit-power channels have entries of order 1/sqrt(n_r n_t); rescale to unit RMS.
    const double gain = std::sqrt(static_cast<double>(config_.array.n_r * config_.array.n_t));
    auto h = hidden_stack(tape, encoder_, tape.scale(planes, gain));
    return {mu_head_.forward(tape, h), log_var_head_.forward(tape, h)};
}

Tensor VaeModel::decode_head(Tape& tape, const Tensor& z) const {
    if (z.cols() != config_.latent_dim) throw ValidationError("decode: latent width mismatch");
    auto h = hidden_stack(tape, decoder_, z);
    // Fixed output gain: W starts near 0 while Adam steps stay small relative to W.
    if (config_.mode == Mode::Linearized) return tape.scale(gain_head_.forward(tape, h), kGainHeadOutputScale);
    auto gains = gain_head_.forward(tape, h);
    auto angles = tape.scale(tape.tanh(angle_head_.forward(tape, h)), std::numbers::pi);
    return tape.concatenate(gains, angles, 1);
}

Tensor VaeModel::synthesize(Tape& tape, const Tensor& head) const {
    if (config_.mode == Mode::Linearized) return tape.linear_map(head, synthesis_operator_);
    const std::size_t p = config_.paths;
    auto gains = tape.slice_cols(head, 0, p);
    auto theta_a = tape.slice_cols(head, p, p);
    auto theta_d = tape.slice_cols(head, 2 * p, p);
    return tape.ppgc_synthesize(gains, theta_a, theta_d, config_.array);
}

BatchForward VaeModel::forward(Tape& tape, const Tensor& planes, const Tensor& noise) const {
    BatchForward f;
    std::tie(f.mu, f.log_var) = encode(tape, planes);
    f.z = autograd::reparameterize(tape, f.mu, f.log_var, noise);
    f.gains = decode_head(tape, f.z);
    f.channels = synthesize(tape, f.gains);
    return f;
}

Tensor VaeModel::loss(Tape& tape, const Tensor& target, const BatchForward& fwd) const {
    if (config_.mode == Mode::Linearized) {
        return loss_linearized(tape, target, fwd.channels, fwd.mu, fwd.log_var, fwd.gains, config_.alpha_d,
                               config_.alpha_s);
    }
    return loss_direct(tape, target, fwd.channels, fwd.mu, fwd.log_var, config_.alpha_d);
}

Posterior VaeModel::encode(const ComplexMatrix& h) const {
    if (h.rows() != config_.array.n_r || h.cols() != config_.array.n_t) {
        throw ValidationError("encode: channel is " + std::to_string(h.rows()) + "x" + std::to_string(h.cols()) +
                              ", model expects " + std::to_string(config_.array.n_r) + "x" +
                              std::to_string(config_.array.n_t));
    }
    Tape tape;
    auto [mu, lv] = encode(tape, Tensor::constant(to_planes(std::span(&h, 1))));
    Posterior post;
    post.mu.assign(mu.value().data(), mu.value().data() + mu.value().size());
    post.log_var.assign(lv.value().data(), lv.value().data() + lv.value().size());
    return post;
}

namespace {

Tensor latent_row(std::span<const double> z, std::size_t latent) {
    if (z.size() != latent) throw ValidationError("decode: latent vector has the wrong length");
    return Tensor::constant(Eigen::Map<const Matrix>(z.data(), 1, static_cast<Eigen::Index>(z.size())));
}

}  // namespace

GainMatrix VaeModel::decode_gains(std::span<const double> z) const {
    if (config_.mode != Mode::Linearized) throw ValidationError("decode_gains: model is in direct mode");
    Tape tape;
    auto head = decode_head(tape, latent_row(z, config_.latent_dim));
    const std::size_t atoms = config_.resolution * config_.resolution;
    const double* d = head.value().data();
    return GainMatrix(config_.resolution, std::vector<double>(d, d + atoms));
}

std::pair<GainMatrix, GainMatrix> VaeModel::decode_complex_gains(std::span<const double> z) const {
    if (config_.mode != Mode::Linearized) throw ValidationError("decode_complex_gains: model is in direct mode");
    Tape tape;
    auto head = decode_head(tape, latent_row(z, config_.latent_dim));
    const std::size_t atoms = config_.resolution * config_.resolution;
    const double* d = head.value().data();
    GainMatrix re(config_.resolution, std::vector<double>(d, d + atoms));
    GainMatrix im(config_.resolution);
    if (config_.complex_gains) im = GainMatrix(config_.resolution, std::vector<double>(d + atoms, d + 2 * atoms));
    return {std::move(re), std::move(im)};
}

ParamList VaeModel::decode_params(std::span<const double> z) const {
    if (config_.mode != Mode::Direct) throw ValidationError("decode_params: model is in linearized mode");
    Tape tape;
    auto head = decode_head(tape, latent_row(z, config_.latent_dim));
    const auto& v = head.value();
    const auto p = static_cast<Eigen::Index>(config_.paths);
    ParamList out;
    for (Eigen::Index k = 0; k < p; ++k) out.push_back({v(0, k), v(0, p + k), v(0, 2 * p + k)});
    return out;
}

ComplexMatrix VaeModel::decode_channel(std::span<const double> z) const {
    Tape tape;
    auto ch = synthesize(tape, decode_head(tape, latent_row(z, config_.latent_dim)));
    return from_planes(ch.value(), 0, config_.array.n_r, config_.array.n_t);
}

ComplexMatrix VaeModel::reconstruct(const ComplexMatrix& h) const {
    const auto post = encode(h);
    return decode_channel(post.mu);
}

Tensor loss_linearized(Tape& tape, const Tensor& h, const Tensor& h_hat, const Tensor& mu, const Tensor& log_var,
                       const Tensor& w, double alpha_d, double alpha_s) {
    const double batch = static_cast<double>(h.rows());
    auto loss = loss_direct(tape, h, h_hat, mu, log_var, alpha_d);
    auto l1 = tape.scale(tape.sum(tape.abs(w)), alpha_s / batch);
    return tape.add(loss, l1);
}

Tensor loss_direct(Tape& tape, const Tensor& h, const Tensor& h_hat, const Tensor& mu, const Tensor& log_var,
                   double alpha_d) {
    if (h.shape() != h_hat.shape()) throw ValidationError("loss: target and reconstruction shapes differ");
    if (mu.rows() != h.rows()) throw ValidationError("loss: latent batch does not match channel batch");
    const double batch = static_cast<double>(h.rows());
    auto recon = tape.scale(tape.sum(tape.square(tape.sub(h, h_hat))), 1.0 / batch);
    auto kl = tape.scale(autograd::kl_to_standard_normal(tape, mu, log_var), alpha_d / batch);
    return tape.add(recon, kl);
}

std::vector<double> training_noise(std::uint64_t seed, std::uint64_t epoch, std::uint64_t batch, std::uint64_t index,
                                   std::size_t latent_dim) {
    rng::Stream stream(seed, {0x7EA1ULL, epoch, batch, index});
    std::vector<double> out(latent_dim);
    for (auto& x : out) x = stream.normal();
    return out;
}

Checkpoint train(const ChannelDataset& dataset, const VaeConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (dataset.empty()) throw ValidationError("train: dataset is empty");
    if (dataset.array.n_r != config.array.n_r || dataset.array.n_t != config.array.n_t) {
        throw ValidationError("train: dataset is " + std::to_string(dataset.array.n_r) + "x" +
                              std::to_string(dataset.array.n_t) + ", config expects " +
                              std::to_string(config.array.n_r) + "x" + std::to_string(config.array.n_t));
    }
    const auto normalized = datasets::normalize(dataset);
    const Matrix all = to_planes(normalized.samples);
    const std::size_t n = normalized.size();

    VaeModel model(config);
    auto params = model.parameters();
    auto adam = autograd::make_adam_state(params, {config.lr});

    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.scale = normalized.scale;

    std::vector<std::size_t> order(n);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng::Stream shuffle(config.seed, {0x5A0FFULL, epoch});
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

        double total = 0.0;
        const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t begin = b * config.batch_size;
            const std::size_t count = std::min(config.batch_size, n - begin);
            Matrix x(static_cast<Eigen::Index>(count), all.cols());
            for (std::size_t k = 0; k < count; ++k) x.row(static_cast<Eigen::Index>(k)) = all.row(static_cast<Eigen::Index>(order[begin + k]));
            Matrix noise = noise_block(count, config.latent_dim, [&](std::size_t k) {
                return training_noise(config.seed, epoch, b, order[begin + k], config.latent_dim);
            });

            Tape tape;
            auto target = Tensor::constant(std::move(x));
            auto fwd = model.forward(tape, target, Tensor::constant(std::move(noise)));
            auto loss = model.loss(tape, target, fwd);
            const double value = loss.item();
            if (!std::isfinite(value)) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                   std::to_string(b + 1));
            }
            tape.backward(loss);
            autograd::adam_step(params, adam);
            total += value * static_cast<double>(count);
        }
        const double mean = total / static_cast<double>(n);
        ckpt.loss_history.push_back(mean);
        if (on_epoch) on_epoch(epoch + 1, mean);
    }
    ckpt.weights = model.weights();
    return ckpt;
}

SampleResult sample_channels(const Checkpoint& ckpt, std::size_t count, std::uint64_t seed) {
    const VaeModel model = VaeModel::from_checkpoint(ckpt);
    const auto& cfg = ckpt.config;
    SampleResult out;
    out.channels.array = cfg.array;
    out.channels.samples.reserve(count);
    const std::size_t atoms = cfg.resolution * cfg.resolution;

    for (std::size_t begin = 0; begin < count; begin += kEvalBatch) {
        const std::size_t rows = std::min(kEvalBatch, count - begin);
        Matrix z = noise_block(rows, cfg.latent_dim, [&](std::size_t k) {
            rng::Stream stream(seed, {0x5A3B1EULL, begin + k});
            std::vector<double> v(cfg.latent_dim);
            for (auto& x : v) x = stream.normal();
            return v;
        });
        Tape tape;
        auto head = model.decode_head(tape, Tensor::constant(std::move(z)));
        auto ch = model.synthesize(tape, head);
        for (std::size_t k = 0; k < rows; ++k) {
            const auto r = static_cast<Eigen::Index>(k);
            auto h = from_planes(ch.value(), r, cfg.array.n_r, cfg.array.n_t);
            h *= ckpt.scale;
            out.channels.samples.push_back(std::move(h));
            const auto& hv = head.value();
            if (cfg.mode == Mode::Linearized) {
                std::vector<double> w(atoms);
                for (std::size_t a = 0; a < atoms; ++a) w[a] = ckpt.scale * hv(r, static_cast<Eigen::Index>(a));
                out.gains.emplace_back(cfg.resolution, std::move(w));
                if (cfg.complex_gains) {
                    std::vector<double> wi(atoms);
                    for (std::size_t a = 0; a < atoms; ++a)
                        wi[a] = ckpt.scale * hv(r, static_cast<Eigen::Index>(atoms + a));
                    out.gains_imag.emplace_back(cfg.resolution, std::move(wi));
                }
            } else {
                const auto p = static_cast<Eigen::Index>(cfg.paths);
                ParamList list;
                for (Eigen::Index j = 0; j < p; ++j) list.push_back({ckpt.scale * hv(r, j), hv(r, p + j), hv(r, 2 * p + j)});
                out.params.push_back(std::move(list));
            }
        }
    }
    return out;
}

ParamList extract_params(const GainMatrix& w, const ppgc::DictionaryConfig& config, double threshold) {
    if (!(threshold >= 0.0)) throw ValidationError("extract_params: threshold must be >= 0");
    if (w.resolution() != config.resolution) throw ValidationError("extract_params: resolution mismatch");
    double peak = 0.0;
    for (double x : w.weights()) peak = std::max(peak, std::abs(x));
    ParamList out;
    if (peak == 0.0) return out;
    const double cut = threshold * peak;
    for (std::size_t i = 0; i < w.resolution(); ++i) {
        for (std::size_t j = 0; j < w.resolution(); ++j) {
            const double g = w(i, j);
            if (std::abs(g) > cut || (threshold == 0.0 && g != 0.0)) {
                out.push_back({g, ppgc::grid_angle(i + 1, config), ppgc::grid_angle(j + 1, config)});
            }
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return std::abs(a.gain) > std::abs(b.gain); });
    return out;
}

double reconstruction_nmse(const Checkpoint& ckpt, const ChannelDataset& dataset) {
    if (dataset.empty()) throw ValidationError("reconstruction_nmse: dataset is empty");
    const VaeModel model = VaeModel::from_checkpoint(ckpt);
    const auto& cfg = ckpt.config;
    // Inputs in physical units are mapped into the model's normalized units.
    const double to_model = dataset.scale / ckpt.scale;
    double total = 0.0;
    for (std::size_t begin = 0; begin < dataset.size(); begin += kEvalBatch) {
        const std::size_t rows = std::min(kEvalBatch, dataset.size() - begin);
        Matrix x = to_planes(std::span(dataset.samples).subspan(begin, rows)) * to_model;
        Tape tape;
        auto [mu, lv] = model.encode(tape, Tensor::constant(x));
        auto ch = model.synthesize(tape, model.decode_head(tape, mu));
        for (std::size_t k = 0; k < rows; ++k) {
            const auto r = static_cast<Eigen::Index>(k);
            total += metrics::nmse(from_planes(x, r, cfg.array.n_r, cfg.array.n_t),
                                   from_planes(ch.value(), r, cfg.array.n_r, cfg.array.n_t));
        }
    }
    return total / static_cast<double>(dataset.size());
}

}  // namespace chgen::genmodel
