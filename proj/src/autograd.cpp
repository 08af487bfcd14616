// SPDX-License-Identifier: Apache-2.0

#include "chgen/autograd.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "chgen/error.hpp"
#include "chgen/rng.hpp"

namespace chgen::autograd {

namespace detail {

struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::uint64_t tape_id = 0;  // 0 for leaves
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(const Matrix&, std::span<Node* const>)> rule;

    void accumulate(const Matrix& g) {
        if (grad.rows() != value.rows() || grad.cols() != value.cols()) grad = Matrix::Zero(value.rows(), value.cols());
        grad += g;
    }
};

}  // namespace detail

using detail::Node;

namespace {

std::atomic<std::uint64_t> next_tape_id{1};

std::string shape_str(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw ValidationError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

enum class Broadcast { Same, Row, Scalar };

Broadcast broadcast_kind(const char* op, const Matrix& a, const Matrix& b) {
    if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::Same;
    if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
    if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
    shape_error(op, a, b);
}

Matrix broadcast(const Matrix& b, Broadcast kind, Eigen::Index rows, Eigen::Index cols) {
    switch (kind) {
        case Broadcast::Same: return b;
        case Broadcast::Row: return b.replicate(rows, 1);
        case Broadcast::Scalar: return Matrix::Constant(rows, cols, b(0, 0));
    }
    return b;
}

Matrix reduce_to(const Matrix& g, Broadcast kind) {
    switch (kind) {
        case Broadcast::Same: return g;
        case Broadcast::Row: return g.colwise().sum();
        case Broadcast::Scalar: return Matrix::Constant(1, 1, g.sum());
    }
    return g;
}

}  // namespace

Tensor Tensor::constant(Matrix value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->grad = Matrix::Zero(node->value.rows(), node->value.cols());
    node->requires_grad = true;
    return Tensor(std::move(node));
}

const Matrix& Tensor::value() const {
    if (!node_) throw ValidationError("Tensor: undefined");
    return node_->value;
}

Matrix& Tensor::mutable_value() {
    if (!node_) throw ValidationError("Tensor: undefined");
    return node_->value;
}

const Matrix& Tensor::grad() const {
    if (!node_) throw ValidationError("Tensor: undefined");
    if (node_->grad.rows() != node_->value.rows() || node_->grad.cols() != node_->value.cols()) {
        node_->grad = Matrix::Zero(node_->value.rows(), node_->value.cols());
    }
    return node_->grad;
}

Matrix& Tensor::mutable_grad() {
    grad();
    return node_->grad;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

double Tensor::item() const {
    const auto& v = value();
    if (v.size() != 1) throw ValidationError("Tensor::item: tensor has shape " + shape_str(v));
    return v(0, 0);
}

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

Tensor Tape::record(Matrix value, std::vector<Tensor> inputs, Rule rule) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->tape_id = id_;
    for (auto& t : inputs) {
        if (!t.defined()) throw ValidationError("Tape: undefined input tensor");
        node->requires_grad = node->requires_grad || t.node_->requires_grad;
        node->inputs.push_back(t.node_);
    }
    if (node->requires_grad) node->rule = std::move(rule);
    nodes_.push_back(node);
    return Tensor(std::move(node));
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    const auto kind = broadcast_kind("add", a.value(), b.value());
    Matrix out = a.value() + broadcast(b.value(), kind, a.value().rows(), a.value().cols());
    return record(std::move(out), {a, b}, [kind](const Matrix& g, std::span<Node* const> in) {
        if (in[0]->requires_grad) in[0]->accumulate(g);
        if (in[1]->requires_grad) in[1]->accumulate(reduce_to(g, kind));
    });
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    const auto kind = broadcast_kind("sub", a.value(), b.value());
    Matrix out = a.value() - broadcast(b.value(), kind, a.value().rows(), a.value().cols());
    return record(std::move(out), {a, b}, [kind](const Matrix& g, std::span<Node* const> in) {
        if (in[0]->requires_grad) in[0]->accumulate(g);
        if (in[1]->requires_grad) in[1]->accumulate(-reduce_to(g, kind));
    });
}

Tensor Tape::multiply(const Tensor& a, const Tensor& b) {
    if (a.value().rows() != b.value().rows() || a.value().cols() != b.value().cols()) {
        shape_error("multiply", a.value(), b.value());
    }
    Matrix out = a.value().cwiseProduct(b.value());
    return record(std::move(out), {a, b}, [](const Matrix& g, std::span<Node* const> in) {
        if (in[0]->requires_grad) in[0]->accumulate(g.cwiseProduct(in[1]->value));
        if (in[1]->requires_grad) in[1]->accumulate(g.cwiseProduct(in[0]->value));
    });
}

Tensor Tape::scale(const Tensor& a, double s) {
    return record(a.value() * s, {a}, [s](const Matrix& g, std::span<Node* const> in) { in[0]->accumulate(g * s); });
}

Tensor Tape::add_scalar(const Tensor& a, double s) {
    Matrix out = a.value().array() + s;
    return record(std::move(out), {a}, [](const Matrix& g, std::span<Node* const> in) { in[0]->accumulate(g); });
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    if (a.value().cols() != b.value().rows()) shape_error("matmul", a.value(), b.value());
    Matrix out = a.value() * b.value();
    return record(std::move(out), {a, b}, [](const Matrix& g, std::span<Node* const> in) {
        if (in[0]->requires_grad) in[0]->accumulate(g * in[1]->value.transpose());
        if (in[1]->requires_grad) in[1]->accumulate(in[0]->value.transpose() * g);
    });
}

Tensor Tape::linear_map(const Tensor& a, std::shared_ptr<const Matrix> op) {
    if (!op) throw ValidationError("linear_map: null operator");
    if (a.value().cols() != op->rows()) shape_error("linear_map", a.value(), *op);
    Matrix out = a.value() * (*op);
    return record(std::move(out), {a}, [op](const Matrix& g, std::span<Node* const> in) {
        in[0]->accumulate(g * op->transpose());
    });
}

Tensor Tape::affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    const auto& xv = x.value();
    const auto& wv = weight.value();
    const auto& bv = bias.value();
    if (xv.cols() != wv.rows()) shape_error("affine", xv, wv);
    if (bv.rows() != 1 || bv.cols() != wv.cols()) shape_error("affine bias", wv, bv);
    Matrix out = xv * wv;
    out.rowwise() += bv.row(0);
    return record(std::move(out), {x, weight, bias}, [](const Matrix& g, std::span<Node* const> in) {
        if (in[0]->requires_grad) in[0]->accumulate(g * in[1]->value.transpose());
        if (in[1]->requires_grad) in[1]->accumulate(in[0]->value.transpose() * g);
        if (in[2]->requires_grad) in[2]->accumulate(g.colwise().sum());
    });
}

Tensor Tape::relu(const Tensor& a) {
    Matrix out = a.value().cwiseMax(0.0);
    return record(std::move(out), {a}, [](const Matrix& g, std::span<Node* const> in) {
        in[0]->accumulate((in[0]->value.array() > 0.0).select(g, 0.0));
    });
}

Tensor Tape::leaky_relu(const Tensor& a, double slope) {
    Matrix out = (a.value().array() > 0.0).select(a.value(), slope * a.value());
    return record(std::move(out), {a}, [slope](const Matrix& g, std::span<Node* const> in) {
        in[0]->accumulate((in[0]->value.array() > 0.0).select(g, slope * g));
    });
}

Tensor Tape::tanh(const Tensor& a) {
    Matrix out = a.value().array().tanh();
    auto result = record(std::move(out), {a}, {});
    if (result.requires_grad()) {
        Node* self = result.node_.get();
        self->rule = [self](const Matrix& g, std::span<Node* const> in) {
            in[0]->accumulate(g.cwiseProduct((1.0 - self->value.array().square()).matrix()));
        };
    }
    return result;
}

Tensor Tape::exp(const Tensor& a) {
    Matrix out = a.value().array().exp();
    auto result = record(std::move(out), {a}, {});
    if (result.requires_grad()) {
        Node* self = result.node_.get();
        self->rule = [self](const Matrix& g, std::span<Node* const> in) {
            in[0]->accumulate(g.cwiseProduct(self->value));
        };
    }
    return result;
}

Tensor Tape::square(const Tensor& a) {
    Matrix out = a.value().array().square();
    return record(std::move(out), {a}, [](const Matrix& g, std::span<Node* const> in) {
        in[0]->accumulate(2.0 * g.cwiseProduct(in[0]->value));
    });
}

Tensor Tape::abs(const Tensor& a) {
    Matrix out = a.value().cwiseAbs();
    return record(std::move(out), {a}, [](const Matrix& g, std::span<Node* const> in) {
        const auto& x = in[0]->value.array();
        Matrix sign = (x > 0.0).select(Matrix::Ones(x.rows(), x.cols()), (x < 0.0).select(-1.0, Matrix::Zero(x.rows(), x.cols())));
        in[0]->accumulate(g.cwiseProduct(sign));
    });
}

Tensor Tape::sum(const Tensor& a) {
    Matrix out = Matrix::Constant(1, 1, a.value().sum());
    return record(std::move(out), {a}, [](const Matrix& g, std::span<Node* const> in) {
        in[0]->accumulate(Matrix::Constant(in[0]->value.rows(), in[0]->value.cols(), g(0, 0)));
    });
}

Tensor Tape::mean(const Tensor& a) {
    const double n = static_cast<double>(a.value().size());
    Matrix out = Matrix::Constant(1, 1, a.value().sum() / n);
    return record(std::move(out), {a}, [n](const Matrix& g, std::span<Node* const> in) {
        in[0]->accumulate(Matrix::Constant(in[0]->value.rows(), in[0]->value.cols(), g(0, 0) / n));
    });
}

Tensor Tape::concatenate(const Tensor& a, const Tensor& b, int axis) {
    const auto& av = a.value();
    const auto& bv = b.value();
    if (axis == 1) {
        if (av.rows() != bv.rows()) shape_error("concatenate", av, bv);
        Matrix out(av.rows(), av.cols() + bv.cols());
        out << av, bv;
        const auto split = av.cols();
        return record(std::move(out), {a, b}, [split](const Matrix& g, std::span<Node* const> in) {
            if (in[0]->requires_grad) in[0]->accumulate(g.leftCols(split));
            if (in[1]->requires_grad) in[1]->accumulate(g.rightCols(g.cols() - split));
        });
    }
    if (axis == 0) {
        if (av.cols() != bv.cols()) shape_error("concatenate", av, bv);
        Matrix out(av.rows() + bv.rows(), av.cols());
        out << av, bv;
        const auto split = av.rows();
        return record(std::move(out), {a, b}, [split](const Matrix& g, std::span<Node* const> in) {
            if (in[0]->requires_grad) in[0]->accumulate(g.topRows(split));
            if (in[1]->requires_grad) in[1]->accumulate(g.bottomRows(g.rows() - split));
        });
    }
    throw ValidationError("concatenate: axis must be 0 or 1");
}

Tensor Tape::reshape(const Tensor& a, std::size_t rows, std::size_t cols) {
    const auto& av = a.value();
    if (rows * cols != static_cast<std::size_t>(av.size())) {
        throw ValidationError("reshape: cannot view " + shape_str(av) + " as " + std::to_string(rows) + "x" +
                              std::to_string(cols));
    }
    // Row-major storage makes reshape a reinterpretation of the same buffer.
    Matrix out = Eigen::Map<const Matrix>(av.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    return record(std::move(out), {a}, [](const Matrix& g, std::span<Node* const> in) {
        in[0]->accumulate(Eigen::Map<const Matrix>(g.data(), in[0]->value.rows(), in[0]->value.cols()));
    });
}

Tensor Tape::slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
    const auto& av = a.value();
    if (count == 0 || start + count > static_cast<std::size_t>(av.cols())) {
        throw ValidationError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                              ") outside " + shape_str(av));
    }
    const auto first = static_cast<Eigen::Index>(start);
    const auto width = static_cast<Eigen::Index>(count);
    Matrix out = av.middleCols(first, width);
    return record(std::move(out), {a}, [first, width](const Matrix& g, std::span<Node* const> in) {
        Matrix full = Matrix::Zero(in[0]->value.rows(), in[0]->value.cols());
        full.middleCols(first, width) = g;
        in[0]->accumulate(full);
    });
}

Tensor Tape::ppgc_synthesize(const Tensor& gains, const Tensor& theta_a, const Tensor& theta_d,
                             const ppgc::ArrayConfig& array) {
    const auto& g = gains.value();
    const auto& ta = theta_a.value();
    const auto& td = theta_d.value();
    if (g.rows() != ta.rows() || g.cols() != ta.cols()) shape_error("ppgc_synthesize", g, ta);
    if (g.rows() != td.rows() || g.cols() != td.cols()) shape_error("ppgc_synthesize", g, td);
    const Eigen::Index batch = g.rows();
    const Eigen::Index paths = g.cols();
    const Eigen::Index nr = static_cast<Eigen::Index>(array.n_r);
    const Eigen::Index nt = static_cast<Eigen::Index>(array.n_t);
    const Eigen::Index block = nr * nt;
    const double u = array.u;
    const double c = 1.0 / std::sqrt(static_cast<double>(nr * nt));

    // H[k, l] = sum_p g_p c exp(j u (k sin theta_a - l sin theta_d))
    Matrix out = Matrix::Zero(batch, 2 * block);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (Eigen::Index p = 0; p < paths; ++p) {
            const double sa = std::sin(ta(b, p));
            const double sd = std::sin(td(b, p));
            const double amp = g(b, p) * c;
            for (Eigen::Index k = 0; k < nr; ++k) {
                for (Eigen::Index l = 0; l < nt; ++l) {
                    const double phi = u * (static_cast<double>(k) * sa - static_cast<double>(l) * sd);
                    out(b, k * nt + l) += amp * std::cos(phi);
                    out(b, block + k * nt + l) += amp * std::sin(phi);
                }
            }
        }
    }
    return record(std::move(out), {gains, theta_a, theta_d},
                  [batch, paths, nr, nt, block, u, c](const Matrix& up, std::span<Node* const> in) {
                      const auto& gv = in[0]->value;
                      const auto& tav = in[1]->value;
                      const auto& tdv = in[2]->value;
                      Matrix dg = Matrix::Zero(batch, paths);
                      Matrix dta = Matrix::Zero(batch, paths);
                      Matrix dtd = Matrix::Zero(batch, paths);
                      for (Eigen::Index b = 0; b < batch; ++b) {
                          for (Eigen::Index p = 0; p < paths; ++p) {
                              const double sa = std::sin(tav(b, p));
                              const double sd = std::sin(tdv(b, p));
                              double acc_g = 0.0, acc_a = 0.0, acc_d = 0.0;
                              for (Eigen::Index k = 0; k < nr; ++k) {
                                  for (Eigen::Index l = 0; l < nt; ++l) {
                                      const double phi =
                                          u * (static_cast<double>(k) * sa - static_cast<double>(l) * sd);
                                      const double cs = std::cos(phi);
                                      const double sn = std::sin(phi);
                                      const double gre = up(b, k * nt + l);
                                      const double gim = up(b, block + k * nt + l);
                                      acc_g += gre * cs + gim * sn;
                                      const double dphi = -gre * sn + gim * cs;
                                      acc_a += dphi * static_cast<double>(k);
                                      acc_d -= dphi * static_cast<double>(l);
                                  }
                              }
                              const double amp = gv(b, p) * c;
                              dg(b, p) = c * acc_g;
                              dta(b, p) = amp * acc_a * u * std::cos(tav(b, p));
                              dtd(b, p) = amp * acc_d * u * std::cos(tdv(b, p));
                          }
                      }
                      if (in[0]->requires_grad) in[0]->accumulate(dg);
                      if (in[1]->requires_grad) in[1]->accumulate(dta);
                      if (in[2]->requires_grad) in[2]->accumulate(dtd);
                  });
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined()) throw ValidationError("backward: undefined loss");
    if (loss.value().size() != 1) throw ValidationError("backward: loss must be scalar, got " + shape_str(loss.value()));
    if (loss.node_->tape_id != id_) throw ValidationError("backward: loss was not recorded on this tape");

    for (auto& node : nodes_) {
        node->grad = Matrix::Zero(node->value.rows(), node->value.cols());
        for (auto& input : node->inputs) {
            if (input->requires_grad && input->tape_id == 0) {
                input->grad = Matrix::Zero(input->value.rows(), input->value.cols());
            }
        }
    }
    loss.node_->grad(0, 0) = 1.0;

    std::vector<Node*> inputs;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node& node = **it;
        if (!node.requires_grad || !node.rule) continue;
        inputs.clear();
        for (auto& input : node.inputs) inputs.push_back(input.get());
        node.rule(node.grad, inputs);
    }
}

Tensor reparameterize(Tape& tape, const Tensor& mu, const Tensor& log_var, const Tensor& noise) {
    if (mu.shape() != log_var.shape() || mu.shape() != noise.shape()) {
        throw ValidationError("reparameterize: mu, log_var and noise must share a shape");
    }
    auto std_dev = tape.exp(tape.scale(log_var, 0.5));
    return tape.add(mu, tape.multiply(std_dev, noise));
}

Tensor kl_to_standard_normal(Tape& tape, const Tensor& mu, const Tensor& log_var) {
    if (mu.shape() != log_var.shape()) throw ValidationError("kl_to_standard_normal: shape mismatch");
    auto terms = tape.sub(tape.add(tape.square(mu), tape.exp(log_var)), tape.add_scalar(log_var, 1.0));
    return tape.scale(tape.sum(terms), 0.5);
}

Dense Dense::init(std::size_t in, std::size_t out, std::uint64_t seed) {
    if (in < 1 || out < 1) throw ValidationError("Dense: sizes must be >= 1");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    rng::Stream stream(seed, {in, out});
    Matrix w(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = stream.uniform(-limit, limit);
    return {Tensor::parameter(std::move(w)), Tensor::parameter(Matrix::Zero(1, static_cast<Eigen::Index>(out)))};
}

}  // namespace chgen::autograd
