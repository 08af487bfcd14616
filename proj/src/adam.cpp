// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "chgen/autograd.hpp"
#include "chgen/error.hpp"

namespace chgen::autograd {

AdamState make_adam_state(std::span<const Tensor> params, AdamOptions options) {
    AdamState state;
    state.options = options;
    for (const auto& p : params) {
        state.first_moment.push_back(Matrix::Zero(p.value().rows(), p.value().cols()));
        state.second_moment.push_back(Matrix::Zero(p.value().rows(), p.value().cols()));
    }
    return state;
}

void adam_step(std::span<Tensor> params, AdamState& state) {
    if (params.size() != state.first_moment.size()) {
        throw ValidationError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                              " tensors, got " + std::to_string(params.size()));
    }
    const auto& opt = state.options;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(opt.beta1, t);
    const double correction2 = 1.0 - std::pow(opt.beta2, t);
    const double step_size = opt.lr / correction1;
    const double sqrt_c2 = std::sqrt(correction2);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& value = params[i].mutable_value();
        const auto& grad = params[i].grad();
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        if (m.rows() != value.rows() || m.cols() != value.cols()) {
            throw ValidationError("adam_step: moment shape does not match parameter " + std::to_string(i));
        }
        m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
        v = opt.beta2 * v + (1.0 - opt.beta2) * grad.cwiseProduct(grad);
        value.array() -= step_size * m.array() / (v.array().sqrt() / sqrt_c2 + opt.eps);
    }
}

}  // namespace chgen::autograd
