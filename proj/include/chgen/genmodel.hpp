// SPDX-License-Identifier: Apache-2.0
//
// Variational autoencoders over the geometric channel model.
//
// Linearized mode: the decoder emits an R x R gain matrix W and the channel is
// sum_ij W_ij D_ij over a fixed array-response dictionary, so the output is
// linear in W and the loss adds an L1 penalty on W.
//
// Direct mode: the decoder emits P (gain, theta_a, theta_d) triples that are
// pushed through the multipath model. Kept as a runnable pipeline because its
// poor convergence is the reference the linearized model is measured against.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chgen/autograd.hpp"
#include "chgen/datasets.hpp"
#include "chgen/ppgc.hpp"

namespace chgen::genmodel {

using autograd::Matrix;
using autograd::Tape;
using autograd::Tensor;
using datasets::ChannelDataset;
using datasets::ParamList;
using linalg::ComplexMatrix;
using ppgc::GainMatrix;

enum class Mode { Direct, Linearized };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct VaeConfig {
    Mode mode = Mode::Linearized;
    ppgc::ArrayConfig array;
    std::size_t latent_dim = 64;
    std::vector<std::size_t> encoder_hidden = {512, 256};
    std::vector<std::size_t> decoder_hidden = {256, 512};
    double alpha_d = 1e-3;
    double alpha_s = 1e-4;

    // Linearized mode.
    std::size_t resolution = 64;
    double theta_min = -std::numbers::pi / 2.0;
    double theta_max = std::numbers::pi / 2.0;
    bool complex_gains = false;

    // Direct mode.
    std::size_t paths = 0;

    std::size_t epochs = 300;
    std::size_t batch_size = 256;
    double lr = 1e-3;
    double leaky_slope = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
    ppgc::DictionaryConfig dictionary_config() const;
    std::size_t input_dim() const { return 2 * array.n_r * array.n_t; }
    std::size_t gain_planes() const { return complex_gains ? 2 : 1; }

    friend bool operator==(const VaeConfig&, const VaeConfig&) = default;
};

struct Checkpoint {
    VaeConfig config;
    std::vector<Matrix> weights;  // declaration order, see VaeModel::parameters()
    double scale = 1.0;           // dataset normalization folded back in at sampling time
    std::vector<double> loss_history;
};

// Channels as network inputs: row b = [Re vec H_b, Im vec H_b] (row-major vec).
Matrix to_planes(std::span<const ComplexMatrix> channels);
ComplexMatrix from_planes(const Matrix& planes, Eigen::Index row, std::size_t n_r, std::size_t n_t);

struct Posterior {
    std::vector<double> mu;
    std::vector<double> log_var;
};

struct BatchForward {
    Tensor mu;
    Tensor log_var;
    Tensor z;
    Tensor gains;     // linearized: (batch x planes*R*R)
    Tensor channels;  // (batch x 2*n_r*n_t)
};

class VaeModel {
public:
    explicit VaeModel(const VaeConfig& config);
    static VaeModel from_checkpoint(const Checkpoint& ckpt);

    const VaeConfig& config() const noexcept { return config_; }
    const ppgc::Dictionary* dictionary() const noexcept { return dictionary_.get(); }

    // Encoder layers, mu head, log-var head, decoder layers, then output heads.
    std::vector<Tensor> parameters() const;
    std::vector<std::string> parameter_names() const;
    void load_weights(std::span<const Matrix> weights);
    std::vector<Matrix> weights() const;

    std::pair<Tensor, Tensor> encode(Tape& tape, const Tensor& planes) const;
    // Linearized: (batch x planes*R*R) gains. Direct: (batch x 3P) as [gains | theta_a | theta_d].
    Tensor decode_head(Tape& tape, const Tensor& z) const;
    Tensor synthesize(Tape& tape, const Tensor& head) const;
    BatchForward forward(Tape& tape, const Tensor& planes, const Tensor& noise) const;
    // Batch mean of the mode's loss for a forward pass against target planes.
    Tensor loss(Tape& tape, const Tensor& target, const BatchForward& fwd) const;

    Posterior encode(const ComplexMatrix& h) const;
    GainMatrix decode_gains(std::span<const double> z) const;
    std::pair<GainMatrix, GainMatrix> decode_complex_gains(std::span<const double> z) const;
    ParamList decode_params(std::span<const double> z) const;
    ComplexMatrix decode_channel(std::span<const double> z) const;
    // Encoder mean through the decoder; the deterministic reconstruction.
    ComplexMatrix reconstruct(const ComplexMatrix& h) const;

    // Exposed for tests that pin particular layers.
    std::vector<autograd::Dense>& encoder_layers() { return encoder_; }
    autograd::Dense& mu_head() { return mu_head_; }
    autograd::Dense& log_var_head() { return log_var_head_; }
    std::vector<autograd::Dense>& decoder_layers() { return decoder_; }
    autograd::Dense& gain_head() { return gain_head_; }
    autograd::Dense& angle_head() { return angle_head_; }

private:
    Tensor hidden_stack(Tape& tape, const std::vector<autograd::Dense>& layers, Tensor x) const;

    VaeConfig config_;
    std::vector<autograd::Dense> encoder_;
    autograd::Dense mu_head_;
    autograd::Dense log_var_head_;
    std::vector<autograd::Dense> decoder_;
    autograd::Dense gain_head_;
    autograd::Dense angle_head_;  // direct mode only
    std::shared_ptr<const ppgc::Dictionary> dictionary_;
    std::shared_ptr<const Matrix> synthesis_operator_;
};

// ||H - H_hat||_F^2 + alpha_d KL + alpha_s ||W||_1, averaged over the batch.
Tensor loss_linearized(Tape& tape, const Tensor& h, const Tensor& h_hat, const Tensor& mu, const Tensor& log_var,
                       const Tensor& w, double alpha_d, double alpha_s);
// ||H - H_hat||_F^2 + alpha_d KL, averaged over the batch.
Tensor loss_direct(Tape& tape, const Tensor& h, const Tensor& h_hat, const Tensor& mu, const Tensor& log_var,
                   double alpha_d);

// Standard-normal draws for sample `index` of a batch, keyed by (seed, epoch, batch, index).
std::vector<double> training_noise(std::uint64_t seed, std::uint64_t epoch, std::uint64_t batch, std::uint64_t index,
                                   std::size_t latent_dim);

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Normalizes the dataset, then runs epochs x batches of
// encode -> reparameterize -> decode -> synthesize -> loss -> backward -> Adam.
Checkpoint train(const ChannelDataset& dataset, const VaeConfig& config, const EpochCallback& on_epoch = {});

struct SampleResult {
    ChannelDataset channels;           // physical scale
    std::vector<GainMatrix> gains;     // linearized mode, physical scale
    std::vector<GainMatrix> gains_imag;  // complex-gain mode only
    std::vector<ParamList> params;     // direct mode, physical gains
};

// z ~ N(0, I) keyed by (seed, sample index), decoded and de-normalized.
SampleResult sample_channels(const Checkpoint& ckpt, std::size_t count, std::uint64_t seed);

// Paths for every |W_ij| > threshold * max|W|, strongest first.
ParamList extract_params(const GainMatrix& w, const ppgc::DictionaryConfig& config, double threshold = 0.1);

// Mean NMSE of reconstruct() over a dataset given in physical units.
double reconstruction_nmse(const Checkpoint& ckpt, const ChannelDataset& dataset);

// Config as a JSON object string; used by checkpoints and run manifests.
std::string config_to_json(const VaeConfig& config);
VaeConfig config_from_json(const std::string& text);

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace chgen::genmodel
