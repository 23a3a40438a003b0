#pragma once

#include <cstdint>
#include <stdexcept>

#include "modadd/model.hpp"

namespace modadd {

// Raised when training produces a non-finite gradient, loss, or position.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OptimConfig {
    double learning_rate = 0.01;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
    bool operator==(const OptimConfig&) const = default;
};

struct AdamState {
    std::uint64_t step = 0;
    ParameterTensors first_moment;
    ParameterTensors second_moment;

    static AdamState zeros_like(const ParameterTensors& params);
};

// One AdamW step, in place. The bias-corrected Adam update is applied first, then the
// decoupled decay theta <- theta - lr * weight_decay * theta on every tensor (embeddings and
// biases included). Throws DivergenceError before touching anything if a gradient is non-finite.
void adamw_step(ModelParams& params, const Gradients& grads, AdamState& state, const OptimConfig& config);

}  // namespace modadd
