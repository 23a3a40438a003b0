#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modadd/analysis.hpp"
#include "modadd/particlesim.hpp"
#include "modadd/trainer.hpp"

#include <json.hpp>

namespace modadd {

// One row of the weight-decay structure table. Accuracies are fractions in [0, 1].
struct StructureRow {
    double weight_decay = 0.0;
    int circles = 0;
    std::optional<double> circle_accuracy;  // missing when there are no circles
    int non_circles = 0;
    std::optional<double> non_circle_accuracy;
    MeanInterval imperfections;  // over non-circles
    std::optional<CorrelationResult> correlation;  // imperfections vs val accuracy, non-circles
    int failed = 0;  // diverged runs, excluded from every column
};

// Groups records by weight decay (ascending) and summarizes each group.
std::vector<StructureRow> structure_table(std::span<const RunRecord> records);

// Columns: weight_decay, circles_num, circles_acc, non_circles_num, non_circles_acc,
// grid_imperfections_mean, grid_imperfections_ci, correlation_r, correlation_ci_low,
// correlation_ci_high, failed. Accuracies in percent; missing values as "-".
std::string structure_table_csv(std::span<const StructureRow> rows);
nlohmann::json structure_table_json(std::span<const StructureRow> rows);

// Columns: f_a, circles, grids, aborted, grid_imperfections_mean, grid_imperfections_ci.
std::string sim_table_csv(std::span<const SimSweepRow> rows);
nlohmann::json sim_table_json(std::span<const SimSweepRow> rows);

}  // namespace modadd
