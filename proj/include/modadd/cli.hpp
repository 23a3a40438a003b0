#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "modadd/experiment.hpp"

namespace modadd {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kNumerical = 2;
}  // namespace exit_code

struct CommandResult {
    int code = exit_code::kOk;
    std::filesystem::path output;
    std::string message;
};

struct CommandContext {
    std::optional<std::filesystem::path> config_path;
    Overrides overrides;
    unsigned jobs = 1;
    std::ostream* log = nullptr;
};

// Resolved config: defaults, then the config file (or manifest), then flag overrides.
ExperimentConfig resolve_config(const CommandContext& ctx);

// <out>/<run_id>/ with manifest.json, metrics.csv, snapshots/, final/. When the config path is
// a run manifest its stored split is replayed instead of being redrawn.
CommandResult cmd_train(const CommandContext& ctx);

// <out>/sweep-<id>/ with runs/<run_id>/ per (weight decay, seed), sweep.json, report.{csv,json}.
CommandResult cmd_sweep(const CommandContext& ctx);

// <out>/sim-<id>/ with manifest.json, positions.csv, trajectory.csv, figures/.
CommandResult cmd_simulate(const CommandContext& ctx);

// <out>/simsweep-<id>/ with runs.csv and report.{csv,json}.
CommandResult cmd_sim_sweep(const CommandContext& ctx);

// kind: embeddings | classifier | projections | all. Figures go to <run>/figures/.
CommandResult cmd_render(const std::filesystem::path& run_dir, const std::string& kind, std::ostream* log = nullptr);

// magnitudes.{csv,json} in the sweep directory, one row per weight decay (ascending).
CommandResult cmd_magnitudes(const std::filesystem::path& sweep_dir, std::ostream* log = nullptr);

// Recomputes report.{csv,json} of a sweep directory from its run directories.
CommandResult cmd_report(const std::filesystem::path& sweep_dir, std::ostream* log = nullptr);

int run_cli(int argc, const char* const* argv);

}  // namespace modadd
