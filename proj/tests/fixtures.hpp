#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "modadd/dataset.hpp"
#include "modadd/model.hpp"
#include "modadd/rng.hpp"

namespace fixture {

using namespace modadd;

inline std::vector<Pair> random_batch(CounterRng& rng, int n, int size) {
    std::vector<Pair> batch;
    for (int i = 0; i < size; ++i) {
        int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        batch.push_back({std::min(a, b), std::max(a, b)});
    }
    return batch;
}

// Random params whose hidden pre-activations all stay at least `margin` away from the ReLU kink,
// so central differences see a smooth function.
inline ModelParams smooth_params(const ModelConfig& config, const std::vector<Pair>& batch, std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        ModelParams p = init_params(config, seed * 1000 + attempt);
        CounterRng rng(seed * 7919 + attempt);
        for (double& v : p.hidden_bias.data) {
            v = 0.3 * rng.normal();
        }
        for (double& v : p.output_bias.data) {
            v = 0.3 * rng.normal();
        }
        const ForwardCache cache = forward(p, batch);
        bool ok = true;
        for (double z : cache.pre_act.data) {
            ok = ok && std::abs(z) > 1e-3;
        }
        if (ok) {
            return p;
        }
    }
}

}  // namespace fixture
