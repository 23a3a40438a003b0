#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modadd/analysis.hpp"
#include "modadd/matrix.hpp"

namespace modadd {

enum class StepRule {
    kProportional,  // x += step_size * F
    kFixedLength,   // x += step_size * F / |F|
};

struct SimConfig {
    int modulus = 17;         // N particles
    int dim = 2;              // D
    double repulsion = 1.0;   // g_r
    double attraction = 1.0;  // g_a
    double alignment = 1.0;   // f_a
    int steps = 100;
    double step_size = 0.02;
    std::uint64_t seed = 0;
    // Sum of squared distances to the centroid over all particles and coordinates.
    // Unset means N * D, i.e. unit variance per coordinate.
    std::optional<double> target_total_variance;
    StepRule step_rule = StepRule::kProportional;

    void validate() const;
    [[nodiscard]] double total_variance_target() const {
        return target_total_variance.value_or(static_cast<double>(modulus) * dim);
    }
};

// Row i is the position of particle i.
using ParticleState = Matrix;

// Distances below this are treated as degenerate.
inline constexpr double kMinSeparation = 1e-9;

// Force that pair (k, l), with pair sum x_kl, induces on each of particles i and j of pair (i, j).
// Clustering: unit-length attraction toward x_kl for the same class, inverse-distance repulsion
// otherwise. Alignment (only when x_ij . x_kl > 0): +f_a x_kl/|x_kl| for the same class, minus
// otherwise.
std::vector<double> pair_force(std::span<const double> x_ij, std::span<const double> x_kl, bool same_class,
                               const SimConfig& config);

// Per-particle total force before the position update. Each focal pair weights its same-class
// partners by 1 / n_same and its other-class partners by 1 / n_diff.
Matrix total_force(const ParticleState& state, const SimConfig& config);

// Shift to zero mean per coordinate and rescale to the configured total variance, in place.
void renormalize(ParticleState& state, double target_total_variance);

double total_variance(const ParticleState& state);

// One simulation step. Throws DivergenceError on non-finite positions.
ParticleState step(const ParticleState& state, const SimConfig& config);

// Initial positions: i.i.d. standard normal under config.seed, then renormalized.
ParticleState initial_state(const SimConfig& config);

struct SimResult {
    ParticleState final_state;
    std::vector<ParticleState> trajectory;  // initial state then one entry per step, if requested
    int steps_completed = 0;
    std::optional<std::string> failure;
};

SimResult simulate(const SimConfig& config, bool record_trajectory = false);
SimResult simulate_from(ParticleState initial, const SimConfig& config, bool record_trajectory = false);

struct SimRunSummary {
    double alignment = 0.0;
    std::uint64_t seed = 0;
    bool aborted = false;
    bool is_circle = false;
    int imperfections = 0;
};

struct SimSweepRow {
    double alignment = 0.0;
    int circles = 0;
    int grids = 0;
    int aborted = 0;
    MeanInterval grid_imperfections;
};

struct SimSweepResult {
    std::vector<SimSweepRow> rows;
    std::vector<SimRunSummary> runs;  // ordered by f_a then seed
};

SimSweepResult sim_sweep(std::span<const double> alignment_values, std::span<const std::uint64_t> seeds,
                         const SimConfig& base, unsigned jobs = 1, double circle_threshold = kCircleThreshold);

}  // namespace modadd
