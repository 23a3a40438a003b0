#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modadd/analysis.hpp"
#include "modadd/dataset.hpp"
#include "modadd/model.hpp"
#include "modadd/optimizer.hpp"

namespace modadd {

struct TrainConfig {
    ModelConfig model;
    OptimConfig optim;
    int epochs = 2000;
    int snapshot_every = 20;
    std::uint64_t seed = 0;
    double train_fraction = 0.8;

    void validate() const;
};

// State at the end of an epoch, i.e. after that epoch's optimizer step.
struct EpochMetrics {
    int epoch = 0;
    double loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;

    bool operator==(const EpochMetrics&) const = default;
};

struct Snapshot {
    int epoch = 0;
    EmbeddingSnapshot embedding;

    bool operator==(const Snapshot&) const = default;
};

struct TrainTrace {
    PairDataset dataset;
    std::vector<EpochMetrics> metrics;
    std::vector<Snapshot> snapshots;
    ModelParams final_params;
    // Set when the run diverged; metrics and snapshots hold everything up to the failure.
    std::optional<std::string> failure;
};

// Full-batch AdamW training: one optimizer step per epoch over the whole training set.
// The split comes from `config.seed` unless `dataset` is given (replay from a manifest).
TrainTrace train_run(const TrainConfig& config, const std::optional<PairDataset>& dataset = std::nullopt);

struct RunRecord {
    TrainConfig config;
    double final_val_accuracy = 0.0;
    double final_train_accuracy = 0.0;
    StructureReport structure;
    MagnitudeStats magnitudes;
    std::optional<std::string> failure;
    std::filesystem::path artifact_dir;
};

RunRecord make_record(const TrainConfig& config, const TrainTrace& trace,
                      double circle_threshold = kCircleThreshold);

// Called from the worker thread that finished the run, before the record is stored.
using RunObserver = std::function<void(const TrainTrace&, RunRecord&)>;

// Trains every (weight decay, seed) combination. Records come back ordered by weight decay
// (outer, as given) then seed (inner), regardless of how many workers ran them.
std::vector<RunRecord> sweep(const TrainConfig& base, std::span<const double> weight_decays,
                             std::span<const std::uint64_t> seeds, unsigned jobs = 1,
                             const RunObserver& observer = {}, double circle_threshold = kCircleThreshold);

}  // namespace modadd
