#include "modadd/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "modadd/rng.hpp"

namespace modadd {

void ModelConfig::validate() const {
    if (modulus < 2 || embed_dim < 1 || hidden < 1) {
        throw std::invalid_argument("ModelConfig: need N >= 2, D >= 1, H >= 1 (got N=" + std::to_string(modulus) +
                                    ", D=" + std::to_string(embed_dim) + ", H=" + std::to_string(hidden) + ")");
    }
}

ParameterTensors ParameterTensors::zeros(const ModelConfig& config) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.modulus);
    const auto d = static_cast<std::size_t>(config.embed_dim);
    const auto h = static_cast<std::size_t>(config.hidden);
    return ParameterTensors{Matrix(n, d), Matrix(h, d), Matrix(h, 1), Matrix(n, h), Matrix(n, 1)};
}

ModelConfig ParameterTensors::config() const noexcept {
    return ModelConfig{static_cast<int>(embedding.rows), static_cast<int>(embedding.cols),
                       static_cast<int>(hidden_weight.rows)};
}

bool ParameterTensors::same_shape(const ParameterTensors& other) const noexcept {
    const auto mine = tensors();
    const auto theirs = other.tensors();
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (!mine[i]->same_shape(*theirs[i])) {
            return false;
        }
    }
    return true;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    ModelParams params{ParameterTensors::zeros(config)};
    CounterRng rng = CounterRng(seed).split(streams::kModelInit);
    for (double& v : params.embedding.data) {
        v = rng.normal();
    }
    const double hidden_scale = 1.0 / std::sqrt(static_cast<double>(config.embed_dim));
    for (double& v : params.hidden_weight.data) {
        v = hidden_scale * rng.normal();
    }
    const double output_scale = 1.0 / std::sqrt(static_cast<double>(config.hidden));
    for (double& v : params.output_weight.data) {
        v = output_scale * rng.normal();
    }
    return params;
}

namespace {

void check_tokens(std::span<const Pair> batch, int modulus) {
    for (const Pair& p : batch) {
        if (p.a < 0 || p.b < 0 || p.a >= modulus || p.b >= modulus) {
            throw std::invalid_argument("forward: token out of range [0, " + std::to_string(modulus) + ")");
        }
    }
}

// h = ReLU(W_h x + b_h), o = W_o h + b_o for a single D-vector x.
void classify_point(const ModelParams& params, std::span<const double> x, std::span<double> pre,
                    std::span<double> hidden, std::span<double> logits) {
    const std::size_t n_hidden = params.hidden_weight.rows;
    const std::size_t dim = params.hidden_weight.cols;
    for (std::size_t k = 0; k < n_hidden; ++k) {
        double acc = params.hidden_bias.data[k];
        const double* w = params.hidden_weight.data.data() + k * dim;
        for (std::size_t d = 0; d < dim; ++d) {
            acc += w[d] * x[d];
        }
        pre[k] = acc;
        hidden[k] = acc > 0.0 ? acc : 0.0;
    }
    const std::size_t n_out = params.output_weight.rows;
    for (std::size_t c = 0; c < n_out; ++c) {
        double acc = params.output_bias.data[c];
        const double* w = params.output_weight.data.data() + c * n_hidden;
        for (std::size_t k = 0; k < n_hidden; ++k) {
            acc += w[k] * hidden[k];
        }
        logits[c] = acc;
    }
}

}  // namespace

ForwardCache forward(const ModelParams& params, std::span<const Pair> batch) {
    const std::size_t n = params.embedding.rows;
    const std::size_t dim = params.embedding.cols;
    const std::size_t n_hidden = params.hidden_weight.rows;
    check_tokens(batch, static_cast<int>(n));

    ForwardCache cache;
    cache.batch.assign(batch.begin(), batch.end());
    cache.pair_sum = Matrix(batch.size(), dim);
    cache.pre_act = Matrix(batch.size(), n_hidden);
    cache.hidden = Matrix(batch.size(), n_hidden);
    cache.logits = Matrix(batch.size(), n);

    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto x = cache.pair_sum.row(i);
        const auto ea = params.embedding.row(static_cast<std::size_t>(batch[i].a));
        const auto eb = params.embedding.row(static_cast<std::size_t>(batch[i].b));
        for (std::size_t d = 0; d < dim; ++d) {
            x[d] = ea[d] + eb[d];
        }
        classify_point(params, x, cache.pre_act.row(i), cache.hidden.row(i), cache.logits.row(i));
    }
    return cache;
}

namespace {

// Numerically stable log-sum-exp of a row.
double log_sum_exp(std::span<const double> row) {
    const double peak = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) {
        sum += std::exp(v - peak);
    }
    return peak + std::log(sum);
}

void check_targets(const Matrix& logits, std::span<const int> targets) {
    if (logits.rows == 0) {
        throw std::invalid_argument("loss: empty batch");
    }
    if (logits.rows != targets.size()) {
        throw std::invalid_argument("loss: logits and targets disagree on batch size");
    }
    for (int t : targets) {
        if (t < 0 || static_cast<std::size_t>(t) >= logits.cols) {
            throw std::invalid_argument("loss: target class out of range");
        }
    }
}

}  // namespace

double loss(const Matrix& logits, std::span<const int> targets) {
    check_targets(logits, targets);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const auto row = logits.row(i);
        total += log_sum_exp(row) - row[static_cast<std::size_t>(targets[i])];
    }
    return total / static_cast<double>(logits.rows);
}

Gradients backward(const ModelParams& params, const ForwardCache& cache, std::span<const int> targets) {
    const std::size_t batch = cache.batch.size();
    const std::size_t n = params.embedding.rows;
    const std::size_t dim = params.embedding.cols;
    const std::size_t n_hidden = params.hidden_weight.rows;
    if (cache.logits.rows != batch || cache.logits.cols != n || cache.pair_sum.cols != dim ||
        cache.hidden.cols != n_hidden || cache.pre_act.rows != batch) {
        throw std::invalid_argument("backward: cache shape does not match params");
    }
    check_targets(cache.logits, targets);

    Gradients grads{ParameterTensors::zeros(params.config())};
    const double inv_batch = 1.0 / static_cast<double>(batch);
    std::vector<double> d_logits(n);
    std::vector<double> d_pre(n_hidden);

    for (std::size_t i = 0; i < batch; ++i) {
        // dL/do = (softmax(o) - onehot(t)) / B
        const auto row = cache.logits.row(i);
        const double lse = log_sum_exp(row);
        for (std::size_t c = 0; c < n; ++c) {
            d_logits[c] = std::exp(row[c] - lse) * inv_batch;
        }
        d_logits[static_cast<std::size_t>(targets[i])] -= inv_batch;

        const auto h = cache.hidden.row(i);
        for (std::size_t c = 0; c < n; ++c) {
            const double g = d_logits[c];
            grads.output_bias.data[c] += g;
            double* gw = grads.output_weight.data.data() + c * n_hidden;
            for (std::size_t k = 0; k < n_hidden; ++k) {
                gw[k] += g * h[k];
            }
        }

        const auto z = cache.pre_act.row(i);
        for (std::size_t k = 0; k < n_hidden; ++k) {
            double acc = 0.0;
            if (z[k] > 0.0) {
                for (std::size_t c = 0; c < n; ++c) {
                    acc += d_logits[c] * params.output_weight.data[c * n_hidden + k];
                }
            }
            d_pre[k] = acc;
        }

        const auto x = cache.pair_sum.row(i);
        double* ga = grads.embedding.data.data() + static_cast<std::size_t>(cache.batch[i].a) * dim;
        double* gb = grads.embedding.data.data() + static_cast<std::size_t>(cache.batch[i].b) * dim;
        for (std::size_t k = 0; k < n_hidden; ++k) {
            const double g = d_pre[k];
            if (g == 0.0) {
                continue;
            }
            grads.hidden_bias.data[k] += g;
            double* gw = grads.hidden_weight.data.data() + k * dim;
            const double* w = params.hidden_weight.data.data() + k * dim;
            for (std::size_t d = 0; d < dim; ++d) {
                gw[d] += g * x[d];
                // x = E_a + E_b: both rows receive dL/dx (twice into one row when a == b).
                ga[d] += g * w[d];
                gb[d] += g * w[d];
            }
        }
    }
    return grads;
}

int argmax(std::span<const double> row) noexcept {
    int best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
        if (row[c] > row[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(c);
        }
    }
    return best;
}

double accuracy(const Matrix& logits, std::span<const int> targets) {
    if (logits.rows == 0) {
        throw std::invalid_argument("accuracy: empty pair list");
    }
    if (logits.rows != targets.size()) {
        throw std::invalid_argument("accuracy: logits and targets disagree on batch size");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (argmax(logits.row(i)) == targets[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

double accuracy(const ModelParams& params, std::span<const Pair> pairs) {
    if (pairs.empty()) {
        throw std::invalid_argument("accuracy: empty pair list");
    }
    const ForwardCache cache = forward(params, pairs);
    const std::vector<int> t = targets(pairs, static_cast<int>(params.embedding.rows));
    return accuracy(cache.logits, t);
}

ClassRaster classifier_map(const ModelParams& params, const Region& region, int resolution) {
    if (params.embedding.cols != 2) {
        throw std::invalid_argument("classifier_map: requires 2-dimensional embeddings");
    }
    if (resolution < 2) {
        throw std::invalid_argument("classifier_map: resolution must be >= 2");
    }
    if (!(region.x_max > region.x_min) || !(region.y_max > region.y_min)) {
        throw std::invalid_argument("classifier_map: region has zero area");
    }
    ClassRaster raster;
    raster.width = resolution;
    raster.height = resolution;
    raster.region = region;
    raster.classes.resize(static_cast<std::size_t>(resolution) * resolution);

    const std::size_t n_hidden = params.hidden_weight.rows;
    std::vector<double> pre(n_hidden);
    std::vector<double> hidden(n_hidden);
    std::vector<double> logits(params.output_weight.rows);
    const double dx = (region.x_max - region.x_min) / resolution;
    const double dy = (region.y_max - region.y_min) / resolution;
    for (int r = 0; r < resolution; ++r) {
        const double y = region.y_max - (r + 0.5) * dy;
        for (int c = 0; c < resolution; ++c) {
            const double point[2] = {region.x_min + (c + 0.5) * dx, y};
            classify_point(params, point, pre, hidden, logits);
            raster.classes[static_cast<std::size_t>(r) * resolution + c] = argmax(logits);
        }
    }
    return raster;
}

}  // namespace modadd
