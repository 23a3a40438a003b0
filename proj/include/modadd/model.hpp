#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "modadd/dataset.hpp"
#include "modadd/matrix.hpp"

namespace modadd {

struct ModelConfig {
    int modulus = 17;    // N
    int embed_dim = 2;   // D
    int hidden = 32;     // H

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

inline constexpr std::array<std::string_view, 5> kTensorNames{"E", "W_h", "b_h", "W_o", "b_o"};

// The five tensors of the model, in the fixed order of kTensorNames.
// Biases are column vectors (rows x 1).
struct ParameterTensors {
    Matrix embedding;      // N x D
    Matrix hidden_weight;  // H x D
    Matrix hidden_bias;    // H x 1
    Matrix output_weight;  // N x H
    Matrix output_bias;    // N x 1

    static ParameterTensors zeros(const ModelConfig& config);

    std::array<Matrix*, 5> tensors() noexcept {
        return {&embedding, &hidden_weight, &hidden_bias, &output_weight, &output_bias};
    }
    std::array<const Matrix*, 5> tensors() const noexcept {
        return {&embedding, &hidden_weight, &hidden_bias, &output_weight, &output_bias};
    }

    [[nodiscard]] ModelConfig config() const noexcept;
    [[nodiscard]] bool same_shape(const ParameterTensors& other) const noexcept;

    bool operator==(const ParameterTensors&) const = default;
};

struct ModelParams : ParameterTensors {};
struct Gradients : ParameterTensors {};

// Standard-normal embeddings, N(0, 1/fan_in) weights, zero biases.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ForwardCache {
    std::vector<Pair> batch;
    Matrix pair_sum;     // B x D, x = E_a + E_b
    Matrix pre_act;      // B x H, z = W_h x + b_h
    Matrix hidden;       // B x H, h = ReLU(z)
    Matrix logits;       // B x N, o = W_o h + b_o
};

ForwardCache forward(const ModelParams& params, std::span<const Pair> batch);

// Mean cross-entropy over rows of `logits`.
double loss(const Matrix& logits, std::span<const int> targets);

Gradients backward(const ModelParams& params, const ForwardCache& cache, std::span<const int> targets);

// Index of the largest entry of a row, lowest index on ties.
int argmax(std::span<const double> row) noexcept;

double accuracy(const ModelParams& params, std::span<const Pair> pairs);
double accuracy(const Matrix& logits, std::span<const int> targets);

struct Region {
    double x_min = -1.0;
    double x_max = 1.0;
    double y_min = -1.0;
    double y_max = 1.0;

    bool operator==(const Region&) const = default;
};

// Row-major class raster. Row 0 is the top of the region (largest y), column 0 the left edge.
struct ClassRaster {
    int width = 0;
    int height = 0;
    Region region;
    std::vector<int> classes;

    int at(int row, int col) const { return classes[static_cast<std::size_t>(row) * width + col]; }
};

// Argmax class of the classifier layers (everything after the constant attention) evaluated
// at pixel centers of `region`. Requires D = 2.
ClassRaster classifier_map(const ModelParams& params, const Region& region, int resolution);

}  // namespace modadd
