#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "modadd/model.hpp"
#include "modadd/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace modadd;

TEST_CASE("init_params shapes, zero biases and determinism") {
    const ModelConfig config;
    const ModelParams a = init_params(config, 4);
    const ModelParams b = init_params(config, 4);
    CHECK(a == b);
    CHECK(a.embedding.rows == 17);
    CHECK(a.embedding.cols == 2);
    CHECK(a.hidden_weight.rows == 32);
    CHECK(a.hidden_weight.cols == 2);
    CHECK(a.output_weight.rows == 17);
    CHECK(a.output_weight.cols == 32);
    for (double v : a.hidden_bias.data) {
        CHECK(v == 0.0);
    }
    for (double v : a.output_bias.data) {
        CHECK(v == 0.0);
    }
    CHECK(init_params(config, 5).embedding != a.embedding);
    CHECK_THROWS_AS(init_params(ModelConfig{1, 2, 32}, 0), std::invalid_argument);
}

TEST_CASE("forward edge cases") {
    const ModelConfig config;
    ModelParams zero{ParameterTensors::zeros(config)};
    const auto pairs = enumerate_pairs(17);
    const ForwardCache cache = forward(zero, pairs);
    for (double v : cache.logits.data) {
        CHECK(v == 0.0);
    }

    ModelParams bias_only = init_params(config, 1);
    std::fill(bias_only.output_weight.data.begin(), bias_only.output_weight.data.end(), 0.0);
    for (std::size_t c = 0; c < 17; ++c) {
        bias_only.output_bias(c, 0) = 0.5 * static_cast<double>(c) - 3.0;
    }
    const ForwardCache passthrough = forward(bias_only, pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        for (std::size_t c = 0; c < 17; ++c) {
            CHECK(passthrough.logits(i, c) == bias_only.output_bias(c, 0));
        }
    }

    CHECK_THROWS_AS(forward(zero, std::vector<Pair>{{0, 17}}), std::invalid_argument);
}

TEST_CASE("forward is symmetric in the two tokens") {
    const ModelParams p = init_params(ModelConfig{}, 8);
    for (int a = 0; a < 17; ++a) {
        for (int b = 0; b < 17; ++b) {
            const std::vector<Pair> ab{{a, b}};
            const std::vector<Pair> ba{{b, a}};
            CHECK(forward(p, ab).logits == forward(p, ba).logits);
        }
    }
}

TEST_CASE("loss values") {
    const Matrix uniform(1, 17, 0.25);
    const std::vector<int> t{3};
    CHECK(loss(uniform, t) == doctest::Approx(std::log(17.0)).epsilon(1e-12));
    CHECK(loss(uniform, t) == doctest::Approx(2.833213).epsilon(1e-6));

    Matrix confident(1, 17, 0.0);
    confident(0, 3) = 50.0;
    CHECK(loss(confident, t) < 1e-20);

    Matrix two(2, 3, 0.0);
    two(0, 0) = 1.0;
    two(1, 2) = -2.0;
    const std::vector<int> t2{0, 1};
    const double l0 = std::log(std::exp(1.0) + 2.0) - 1.0;
    const double l1 = std::log(2.0 + std::exp(-2.0));
    CHECK(loss(two, t2) == doctest::Approx(0.5 * (l0 + l1)).epsilon(1e-14));

    Matrix huge(1, 4, 0.0);
    huge(0, 0) = 1000.0;
    huge(0, 1) = -1000.0;
    const std::vector<int> t3{1};
    CHECK(std::isfinite(loss(huge, t3)));
    CHECK(loss(huge, t3) == doctest::Approx(2000.0));

    CHECK_THROWS_AS(loss(Matrix(0, 17), std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("backward matches central finite differences") {
    CounterRng rng(2024);
    for (std::uint64_t instance = 0; instance < 10; ++instance) {
        const ModelConfig config{5 + static_cast<int>(instance % 3), 1 + static_cast<int>(instance % 3), 6};
        const auto batch = fixture::random_batch(rng, config.modulus, 7);
        const ModelParams p = fixture::smooth_params(config, batch, instance);
        const ForwardCache cache = forward(p, batch);
        const Gradients analytic = backward(p, cache, targets(batch, config.modulus));
        const Gradients numeric = oracle::finite_difference_gradients(p, batch);
        const auto a = analytic.tensors();
        const auto n = numeric.tensors();
        for (std::size_t t = 0; t < a.size(); ++t) {
            INFO("instance " << instance << " tensor " << kTensorNames[t]);
            CHECK(oracle::relative_error(*a[t], *n[t]) < 1e-6);
        }
    }
}

TEST_CASE("backward chain-rule edge cases") {
    const ModelConfig config;
    ModelParams p = init_params(config, 3);
    std::fill(p.output_weight.data.begin(), p.output_weight.data.end(), 0.0);
    const auto pairs = enumerate_pairs(17);
    const Gradients g = backward(p, forward(p, pairs), targets(pairs, 17));
    for (double v : g.hidden_weight.data) {
        CHECK(v == 0.0);
    }
    for (double v : g.embedding.data) {
        CHECK(v == 0.0);
    }

    // Diagonal pair: row a gets dL/dx twice, computed independently as W_h^T dL/dz.
    ModelParams q = init_params(config, 11);
    const std::vector<Pair> diag{{4, 4}};
    const std::vector<int> t = targets(diag, 17);
    const ForwardCache cache = forward(q, diag);
    const Gradients gd = backward(q, cache, t);
    std::vector<double> d_x(2, 0.0);
    for (std::size_t k = 0; k < 32; ++k) {
        if (cache.pre_act(0, k) > 0.0) {
            // dL/dz_k = sum_c dL/do_c W_o[c,k]; recover dL/db_h which equals dL/dz for one example.
            d_x[0] += gd.hidden_bias(k, 0) * q.hidden_weight(k, 0);
            d_x[1] += gd.hidden_bias(k, 0) * q.hidden_weight(k, 1);
        }
    }
    CHECK(gd.embedding(4, 0) == doctest::Approx(2.0 * d_x[0]).epsilon(1e-12));
    CHECK(gd.embedding(4, 1) == doctest::Approx(2.0 * d_x[1]).epsilon(1e-12));
    for (std::size_t r = 0; r < 17; ++r) {
        if (r != 4) {
            CHECK(gd.embedding(r, 0) == 0.0);
            CHECK(gd.embedding(r, 1) == 0.0);
        }
    }

    ForwardCache broken = cache;
    broken.logits = Matrix(1, 5);
    CHECK_THROWS_AS(backward(q, broken, t), std::invalid_argument);
}

TEST_CASE("a small gradient-descent step decreases the loss") {
    const ModelConfig config;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ModelParams p = init_params(config, seed);
        const auto pairs = enumerate_pairs(17);
        const auto t = targets(pairs, 17);
        const ForwardCache cache = forward(p, pairs);
        const double before = loss(cache.logits, t);
        const Gradients g = backward(p, cache, t);
        auto pt = p.tensors();
        const auto gt = g.tensors();
        for (std::size_t k = 0; k < pt.size(); ++k) {
            for (std::size_t i = 0; i < pt[k]->data.size(); ++i) {
                pt[k]->data[i] -= 1e-3 * gt[k]->data[i];
            }
        }
        CHECK(loss(forward(p, pairs).logits, t) < before);
    }
}

TEST_CASE("accuracy") {
    const ModelConfig config;
    const ModelParams zero{ParameterTensors::zeros(config)};
    const auto pairs = enumerate_pairs(17);
    int zero_class = 0;
    for (const Pair& p : pairs) {
        zero_class += target(p.a, p.b, 17) == 0 ? 1 : 0;
    }
    CHECK(zero_class == 9);
    CHECK(accuracy(zero, pairs) == doctest::Approx(9.0 / 153.0));

    Matrix one_hot(pairs.size(), 17, 0.0);
    const auto t = targets(pairs, 17);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        one_hot(i, static_cast<std::size_t>(t[i])) = 1.0;
    }
    CHECK(accuracy(one_hot, t) == 1.0);
    CHECK_THROWS_AS(accuracy(zero, std::vector<Pair>{}), std::invalid_argument);

    const std::vector<double> tied{1.0, 3.0, 3.0, 2.0};
    CHECK(argmax(tied) == 1);
}

TEST_CASE("random-parameter accuracy is at chance level") {
    const auto pairs = enumerate_pairs(17);
    const int seeds = 200;
    double sum = 0.0;
    double sq = 0.0;
    for (int s = 0; s < seeds; ++s) {
        const double acc = accuracy(init_params(ModelConfig{}, static_cast<std::uint64_t>(s) + 1000), pairs);
        sum += acc;
        sq += acc * acc;
    }
    const double mean = sum / seeds;
    const double sd = std::sqrt((sq - seeds * mean * mean) / (seeds - 1));
    const double se = sd / std::sqrt(static_cast<double>(seeds));
    CHECK(std::abs(mean - 1.0 / 17.0) < 3.0 * se);
}

TEST_CASE("classifier_map") {
    const ModelConfig config;
    const ModelParams zero{ParameterTensors::zeros(config)};
    const ClassRaster r = classifier_map(zero, Region{-1, 1, -1, 1}, 8);
    CHECK(r.width == 8);
    CHECK(r.height == 8);
    for (int c : r.classes) {
        CHECK(c == 0);
    }

    ModelParams same_rows = init_params(config, 2);
    for (std::size_t c = 1; c < 17; ++c) {
        for (std::size_t k = 0; k < 32; ++k) {
            same_rows.output_weight(c, k) = same_rows.output_weight(0, k);
        }
    }
    for (int c : classifier_map(same_rows, Region{-3, 3, -3, 3}, 16).classes) {
        CHECK(c == 0);
    }

    const ModelParams p = init_params(config, 6);
    const ClassRaster full = classifier_map(p, Region{-4, 4, -2, 2}, 32);
    for (int c : full.classes) {
        CHECK(c >= 0);
        CHECK(c < 17);
    }
    // Pixel (row 0, col 0) is the top-left cell center.
    const double point_x = -4.0 + 0.5 * 8.0 / 32.0;
    const double point_y = 2.0 - 0.5 * 4.0 / 32.0;
    ModelParams probe = p;
    probe.embedding = Matrix(17, 2);
    probe.embedding(0, 0) = point_x / 2.0;
    probe.embedding(0, 1) = point_y / 2.0;
    const ForwardCache cache = forward(probe, std::vector<Pair>{{0, 0}});
    CHECK(full.at(0, 0) == argmax(cache.logits.row(0)));

    CHECK_THROWS_AS(classifier_map(p, Region{0, 0, -1, 1}, 8), std::invalid_argument);
    CHECK_THROWS_AS(classifier_map(p, Region{-1, 1, -1, 1}, 1), std::invalid_argument);
    CHECK_THROWS_AS(classifier_map(init_params(ModelConfig{17, 3, 8}, 0), Region{}, 8), std::invalid_argument);
}
