#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modadd/particlesim.hpp"
#include "modadd/trainer.hpp"

namespace modadd {

inline constexpr const char* kToolVersion = "0.1.0";

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SweepConfig {
    std::vector<double> weight_decays{0.0, 0.3, 0.6, 1.0};
    std::vector<double> alignment_values{0.5, 1.0, 2.0};
    std::uint64_t seed_start = 0;
    int seed_count = 100;

    [[nodiscard]] std::vector<std::uint64_t> seeds() const;
};

// Defaults reproduce the reference setup: N=17, D=2, H=32, lr 0.01, 2000 epochs,
// 100 simulation steps, g_r = g_a = 1, circle threshold 1.2.
struct ExperimentConfig {
    TrainConfig train{ModelConfig{}, OptimConfig{0.01, 1.0}, 2000, 20, 0, 0.8};
    SimConfig sim;
    double circle_threshold = kCircleThreshold;
    SweepConfig sweep;
    std::string output_dir = "runs";

    void validate() const;
};

// Flat command-line overrides.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> weight_decay;
    std::optional<double> alignment;
    std::optional<int> epochs;
    std::optional<int> steps;
    std::optional<std::string> output_dir;
};

void apply(ExperimentConfig& config, const Overrides& overrides);

nlohmann::json to_json(const ExperimentConfig& config);

// Missing keys take defaults; unknown keys and bad values raise ConfigError.
ExperimentConfig experiment_from_json(const nlohmann::json& j);

// Accepts a config file or a run manifest (uses its "config" section).
ExperimentConfig load_experiment(const std::filesystem::path& path);

// Stable 16-hex-digit content hash (FNV-1a 64) of `kind` plus the resolved config without
// output_dir, so identical runs land in the same directory.
std::string run_id(const std::string& kind, const ExperimentConfig& config);

nlohmann::json pairs_to_json(std::span<const Pair> pairs);
std::vector<Pair> pairs_from_json(const nlohmann::json& j);

// Tensor CSV: header "row,c0,...,c{cols-1}", one line per row, values printed with %.17g so
// they read back bit-exactly.
std::string matrix_csv(const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

// "epoch,loss,train_acc,val_acc"
std::string metrics_csv(std::span<const EpochMetrics> metrics);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

// Layout of a training run directory.
struct RunPaths {
    std::filesystem::path root;

    [[nodiscard]] std::filesystem::path manifest() const { return root / "manifest.json"; }
    [[nodiscard]] std::filesystem::path metrics() const { return root / "metrics.csv"; }
    [[nodiscard]] std::filesystem::path snapshots() const { return root / "snapshots"; }
    [[nodiscard]] std::filesystem::path snapshot(int epoch) const;
    [[nodiscard]] std::filesystem::path final_dir() const { return root / "final"; }
    [[nodiscard]] std::filesystem::path final_tensor(std::string_view name) const;
    [[nodiscard]] std::filesystem::path figures() const { return root / "figures"; }
};

// Writes manifest, metrics, snapshots and final params for one training run.
nlohmann::json write_train_run(const std::filesystem::path& dir, const ExperimentConfig& config,
                               const TrainTrace& trace, const RunRecord& record);

ModelParams read_final_params(const RunPaths& paths);

// Rebuilds a RunRecord from a run directory (final params + manifest).
RunRecord load_run_record(const std::filesystem::path& dir, double circle_threshold = kCircleThreshold);

}  // namespace modadd
