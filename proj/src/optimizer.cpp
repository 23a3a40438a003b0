#include "modadd/optimizer.hpp"

#include <cmath>
#include <string>

namespace modadd {

void OptimConfig::validate() const {
    if (!(learning_rate > 0.0) || !(weight_decay >= 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) ||
        !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
        throw std::invalid_argument("OptimConfig: need lr > 0, weight_decay >= 0, betas in [0, 1), epsilon > 0");
    }
}

AdamState AdamState::zeros_like(const ParameterTensors& params) {
    AdamState state;
    state.first_moment = ParameterTensors::zeros(params.config());
    state.second_moment = ParameterTensors::zeros(params.config());
    return state;
}

void adamw_step(ModelParams& params, const Gradients& grads, AdamState& state, const OptimConfig& config) {
    if (!params.same_shape(grads)) {
        throw std::invalid_argument("adamw_step: gradient shapes do not match params");
    }
    if (state.step == 0 && state.first_moment.embedding.rows == 0) {
        state = AdamState::zeros_like(params);
    }
    if (!params.same_shape(state.first_moment) || !params.same_shape(state.second_moment)) {
        throw std::invalid_argument("adamw_step: optimizer state shapes do not match params");
    }

    const auto grad_tensors = grads.tensors();
    for (std::size_t t = 0; t < grad_tensors.size(); ++t) {
        for (double g : grad_tensors[t]->data) {
            if (!std::isfinite(g)) {
                throw DivergenceError("adamw_step: non-finite gradient in " + std::string(kTensorNames[t]) +
                                      " at step " + std::to_string(state.step + 1));
            }
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);
    const double lr = config.learning_rate;
    const double decay = 1.0 - lr * config.weight_decay;

    const auto param_tensors = params.tensors();
    const auto m_tensors = state.first_moment.tensors();
    const auto v_tensors = state.second_moment.tensors();
    for (std::size_t k = 0; k < param_tensors.size(); ++k) {
        auto& theta = param_tensors[k]->data;
        const auto& g = grad_tensors[k]->data;
        auto& m = m_tensors[k]->data;
        auto& v = v_tensors[k]->data;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            theta[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
            theta[i] *= decay;
        }
    }
}

}  // namespace modadd
