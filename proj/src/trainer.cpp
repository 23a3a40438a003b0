#include "modadd/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "modadd/parallel.hpp"

namespace modadd {

void TrainConfig::validate() const {
    model.validate();
    optim.validate();
    if (epochs < 1 || snapshot_every < 1) {
        throw std::invalid_argument("TrainConfig: epochs and snapshot_every must be >= 1");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("TrainConfig: train_fraction must be in (0, 1)");
    }
}

TrainTrace train_run(const TrainConfig& config, const std::optional<PairDataset>& dataset) {
    config.validate();
    TrainTrace trace;
    if (dataset) {
        if (dataset->modulus != config.model.modulus || dataset->train.empty()) {
            throw std::invalid_argument("train_run: supplied split does not match the model modulus");
        }
        trace.dataset = *dataset;
    } else {
        const std::vector<Pair> all = enumerate_pairs(config.model.modulus);
        trace.dataset = split_dataset(config.model.modulus, all, config.train_fraction, config.seed);
    }
    const std::vector<int> train_targets = targets(trace.dataset.train, config.model.modulus);
    const std::vector<int> val_targets = targets(trace.dataset.val, config.model.modulus);

    ModelParams params = init_params(config.model, config.seed);
    AdamState state = AdamState::zeros_like(params);
    trace.metrics.reserve(static_cast<std::size_t>(config.epochs));

    ForwardCache cache = forward(params, trace.dataset.train);
    try {
        for (int epoch = 1; epoch <= config.epochs; ++epoch) {
            const Gradients grads = backward(params, cache, train_targets);
            adamw_step(params, grads, state, config.optim);

            cache = forward(params, trace.dataset.train);
            EpochMetrics m;
            m.epoch = epoch;
            m.loss = loss(cache.logits, train_targets);
            m.train_accuracy = accuracy(cache.logits, train_targets);
            if (!trace.dataset.val.empty()) {
                m.val_accuracy = accuracy(forward(params, trace.dataset.val).logits, val_targets);
            }
            trace.metrics.push_back(m);
            if (!std::isfinite(m.loss)) {
                throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
            }
            if (epoch % config.snapshot_every == 0 || epoch == config.epochs) {
                trace.snapshots.push_back(Snapshot{epoch, params.embedding});
            }
        }
    } catch (const DivergenceError& e) {
        trace.failure = e.what();
    }
    trace.final_params = std::move(params);
    return trace;
}

RunRecord make_record(const TrainConfig& config, const TrainTrace& trace, double circle_threshold) {
    RunRecord record;
    record.config = config;
    record.failure = trace.failure;
    record.magnitudes = magnitude_stats(trace.final_params);
    if (!trace.metrics.empty()) {
        record.final_val_accuracy = trace.metrics.back().val_accuracy;
        record.final_train_accuracy = trace.metrics.back().train_accuracy;
    }
    if (!trace.failure) {
        record.structure =
            analyze_structure(trace.final_params.embedding, record.final_val_accuracy, circle_threshold);
    }
    return record;
}

std::vector<RunRecord> sweep(const TrainConfig& base, std::span<const double> weight_decays,
                             std::span<const std::uint64_t> seeds, unsigned jobs, const RunObserver& observer,
                             double circle_threshold) {
    if (weight_decays.empty() || seeds.empty()) {
        throw std::invalid_argument("sweep: weight decay and seed lists must be non-empty");
    }
    base.validate();
    const std::size_t total = weight_decays.size() * seeds.size();
    std::vector<RunRecord> records(total);
    parallel_for(total, jobs, [&](std::size_t index) {
        TrainConfig config = base;
        config.optim.weight_decay = weight_decays[index / seeds.size()];
        config.seed = seeds[index % seeds.size()];
        const TrainTrace trace = train_run(config);
        RunRecord record = make_record(config, trace, circle_threshold);
        if (observer) {
            observer(trace, record);
        }
        records[index] = std::move(record);
    });
    return records;
}

}  // namespace modadd
