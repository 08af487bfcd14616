// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over row-major float64 matrices.
//
// A Tape records every primitive applied through it together with the rule
// that maps the output gradient back onto the inputs. Leaves (parameters and
// constants) live outside any tape and can be shared by many tapes. Tensors are
// two-dimensional; a batch of vectors is a (batch x features) tensor.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "chgen/ppgc.hpp"

namespace chgen::autograd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {
struct Node;
}

class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Matrix value);
    static Tensor parameter(Matrix value);

    bool defined() const noexcept { return node_ != nullptr; }
    const Matrix& value() const;
    Matrix& mutable_value();
    const Matrix& grad() const;
    Matrix& mutable_grad();
    bool requires_grad() const;

    std::size_t rows() const { return static_cast<std::size_t>(value().rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(value().cols()); }
    std::vector<std::size_t> shape() const { return {rows(), cols()}; }
    double item() const;

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;
    friend class Tape;
};

class Tape {
public:
    Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // b may match a's shape, be a 1 x cols row (broadcast over rows) or 1 x 1.
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor multiply(const Tensor& a, const Tensor& b);  // elementwise, same shape
    Tensor scale(const Tensor& a, double s);
    Tensor add_scalar(const Tensor& a, double s);
    Tensor matmul(const Tensor& a, const Tensor& b);
    // a * op for a shared constant operator; no gradient flows into op.
    Tensor linear_map(const Tensor& a, std::shared_ptr<const Matrix> op);
    Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias);
    Tensor relu(const Tensor& a);
    Tensor leaky_relu(const Tensor& a, double slope = 0.01);
    Tensor tanh(const Tensor& a);
    Tensor exp(const Tensor& a);
    Tensor square(const Tensor& a);
    Tensor abs(const Tensor& a);  // subgradient 0 at 0
    Tensor sum(const Tensor& a);
    Tensor mean(const Tensor& a);
    Tensor concatenate(const Tensor& a, const Tensor& b, int axis = 1);
    Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols);
    Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);

    // Batched multipath synthesis. gains, theta_a, theta_d are (batch x P);
    // the result is (batch x 2*n_r*n_t) holding [Re vec H, Im vec H] per row.
    Tensor ppgc_synthesize(const Tensor& gains, const Tensor& theta_a, const Tensor& theta_d,
                           const ppgc::ArrayConfig& array);

    // Fills gradients of every tensor that requires them and feeds into loss.
    // Gradients of all tensors touched by this tape are reset first.
    void backward(const Tensor& loss);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    using Rule = std::function<void(const Matrix& upstream, std::span<detail::Node* const> inputs)>;
    Tensor record(Matrix value, std::vector<Tensor> inputs, Rule rule);

    std::uint64_t id_;
    std::vector<std::shared_ptr<detail::Node>> nodes_;
};

// z = mu + exp(log_var / 2) * noise
Tensor reparameterize(Tape& tape, const Tensor& mu, const Tensor& log_var, const Tensor& noise);

// 0.5 * sum(mu^2 + exp(log_var) - 1 - log_var), summed over every entry.
Tensor kl_to_standard_normal(Tape& tape, const Tensor& mu, const Tensor& log_var);

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamOptions options;
    std::uint64_t step = 0;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
};

AdamState make_adam_state(std::span<const Tensor> params, AdamOptions options = {});

// Bias-corrected Adam update using each parameter's current gradient.
void adam_step(std::span<Tensor> params, AdamState& state);

// Fully connected layer y = x W + b with Glorot-uniform W and zero b.
struct Dense {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out

    static Dense init(std::size_t in, std::size_t out, std::uint64_t seed);
    Tensor forward(Tape& tape, const Tensor& x) const { return tape.affine(x, weight, bias); }
    std::size_t in() const { return weight.rows(); }
    std::size_t out() const { return weight.cols(); }
};

}  // namespace chgen::autograd
