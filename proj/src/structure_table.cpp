#include "modadd/structure_table.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace modadd {

std::vector<StructureRow> structure_table(std::span<const RunRecord> records) {
    std::map<double, std::vector<const RunRecord*>> groups;
    for (const RunRecord& r : records) {
        groups[r.config.optim.weight_decay].push_back(&r);
    }

    std::vector<StructureRow> rows;
    for (const auto& [weight_decay, group] : groups) {
        StructureRow row;
        row.weight_decay = weight_decay;
        double circle_acc = 0.0;
        std::vector<double> imperfections;
        std::vector<double> non_circle_acc;
        for (const RunRecord* r : group) {
            if (r->failure) {
                ++row.failed;
            } else if (r->structure.is_circle) {
                ++row.circles;
                circle_acc += r->final_val_accuracy;
            } else {
                ++row.non_circles;
                imperfections.push_back(r->structure.imperfections);
                non_circle_acc.push_back(r->final_val_accuracy);
            }
        }
        if (row.circles > 0) {
            row.circle_accuracy = circle_acc / row.circles;
        }
        if (row.non_circles > 0) {
            double sum = 0.0;
            for (double a : non_circle_acc) {
                sum += a;
            }
            row.non_circle_accuracy = sum / row.non_circles;
        }
        row.imperfections = mean_with_ci(imperfections);
        if (imperfections.size() >= 4) {
            try {
                row.correlation = pearson_correlation(imperfections, non_circle_acc);
            } catch (const UndefinedCorrelation&) {
                // All non-circles share one imperfection count or one accuracy.
            }
        }
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::string fmt(const char* pattern, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, value);
    return buf;
}

std::string fmt_optional(const char* pattern, const std::optional<double>& value, double scale = 1.0) {
    return value ? fmt(pattern, *value * scale) : std::string("-");
}

nlohmann::json optional_json(const std::optional<double>& value) {
    return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

}  // namespace

std::string structure_table_csv(std::span<const StructureRow> rows) {
    std::string out =
        "weight_decay,circles_num,circles_acc,non_circles_num,non_circles_acc,grid_imperfections_mean,"
        "grid_imperfections_ci,correlation_r,correlation_ci_low,correlation_ci_high,failed\n";
    for (const StructureRow& row : rows) {
        const bool has_grid = row.non_circles > 0;
        out += fmt("%.4g", row.weight_decay) + "," + std::to_string(row.circles) + "," +
               fmt_optional("%.1f", row.circle_accuracy, 100.0) + "," + std::to_string(row.non_circles) + "," +
               fmt_optional("%.1f", row.non_circle_accuracy, 100.0) + "," +
               (has_grid ? fmt("%.1f", row.imperfections.mean) : "-") + "," +
               (has_grid ? fmt("%.1f", row.imperfections.half_width) : "-") + ",";
        if (row.correlation) {
            out += fmt("%.2f", row.correlation->r) + "," + fmt("%.2f", row.correlation->ci_low) + "," +
                   fmt("%.2f", row.correlation->ci_high);
        } else {
            out += "-,-,-";
        }
        out += "," + std::to_string(row.failed) + "\n";
    }
    return out;
}

nlohmann::json structure_table_json(std::span<const StructureRow> rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const StructureRow& row : rows) {
        nlohmann::json j;
        j["weight_decay"] = row.weight_decay;
        j["circles"] = {{"num", row.circles}, {"val_accuracy", optional_json(row.circle_accuracy)}};
        nlohmann::json non_circles;
        non_circles["num"] = row.non_circles;
        non_circles["val_accuracy"] = optional_json(row.non_circle_accuracy);
        non_circles["grid_imperfections"] = row.non_circles > 0
                                                ? nlohmann::json{{"mean", row.imperfections.mean},
                                                                 {"ci95", row.imperfections.half_width}}
                                                : nlohmann::json(nullptr);
        non_circles["correlation"] =
            row.correlation ? nlohmann::json{{"r", row.correlation->r},
                                             {"ci_low", row.correlation->ci_low},
                                             {"ci_high", row.correlation->ci_high}}
                            : nlohmann::json(nullptr);
        j["non_circles"] = std::move(non_circles);
        j["failed"] = row.failed;
        out.push_back(std::move(j));
    }
    return out;
}

std::string sim_table_csv(std::span<const SimSweepRow> rows) {
    std::string out = "f_a,circles,grids,aborted,grid_imperfections_mean,grid_imperfections_ci\n";
    for (const SimSweepRow& row : rows) {
        const bool has_grid = row.grids > 0;
        out += fmt("%.4g", row.alignment) + "," + std::to_string(row.circles) + "," + std::to_string(row.grids) +
               "," + std::to_string(row.aborted) + "," +
               (has_grid ? fmt("%.1f", row.grid_imperfections.mean) : "-") + "," +
               (has_grid ? fmt("%.1f", row.grid_imperfections.half_width) : "-") + "\n";
    }
    return out;
}

nlohmann::json sim_table_json(std::span<const SimSweepRow> rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const SimSweepRow& row : rows) {
        out.push_back({{"f_a", row.alignment},
                       {"circles", row.circles},
                       {"grids", row.grids},
                       {"aborted", row.aborted},
                       {"grid_imperfections",
                        row.grids > 0 ? nlohmann::json{{"mean", row.grid_imperfections.mean},
                                                       {"ci95", row.grid_imperfections.half_width}}
                                      : nlohmann::json(nullptr)}});
    }
    return out;
}

}  // namespace modadd
