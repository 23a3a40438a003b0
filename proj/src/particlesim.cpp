#include "modadd/particlesim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "modadd/dataset.hpp"
#include "modadd/optimizer.hpp"
#include "modadd/parallel.hpp"
#include "modadd/rng.hpp"

namespace modadd {

void SimConfig::validate() const {
    if (modulus < 2 || dim < 1) {
        throw std::invalid_argument("SimConfig: need N >= 2 and D >= 1");
    }
    if (!(repulsion >= 0.0) || !(attraction >= 0.0) || !(alignment >= 0.0)) {
        throw std::invalid_argument("SimConfig: force constants must be >= 0");
    }
    if (steps < 1 || !(step_size > 0.0)) {
        throw std::invalid_argument("SimConfig: need steps >= 1 and step_size > 0");
    }
    if (target_total_variance && !(*target_total_variance > 0.0)) {
        throw std::invalid_argument("SimConfig: target total variance must be > 0");
    }
}

namespace {

// Adds weight * pair_force(x_ij, x_kl) into out.
void accumulate_pair_force(const double* x_ij, const double* x_kl, std::size_t dim, bool same_class,
                           const SimConfig& config, double weight, double* out) {
    double dist_sq = 0.0;
    double dot = 0.0;
    double kl_sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double diff = x_kl[d] - x_ij[d];
        dist_sq += diff * diff;
        dot += x_ij[d] * x_kl[d];
        kl_sq += x_kl[d] * x_kl[d];
    }
    const double dist = std::sqrt(dist_sq);

    // Coefficient on (x_kl - x_ij).
    double toward = 0.0;
    if (dist > 0.0) {
        if (same_class) {
            toward = config.attraction / dist;
        } else {
            // -g_r / |d|^2 along the unit vector, magnitude capped at g_r / kMinSeparation.
            const double capped = std::max(dist, kMinSeparation);
            toward = -config.repulsion / (capped * dist);
        }
    }
    // Coefficient on x_kl.
    double radial = 0.0;
    if (dot > 0.0) {
        const double kl_norm = std::sqrt(kl_sq);
        if (kl_norm >= kMinSeparation) {
            radial = (same_class ? config.alignment : -config.alignment) / kl_norm;
        }
    }
    for (std::size_t d = 0; d < dim; ++d) {
        out[d] += weight * (toward * (x_kl[d] - x_ij[d]) + radial * x_kl[d]);
    }
}

}  // namespace

std::vector<double> pair_force(std::span<const double> x_ij, std::span<const double> x_kl, bool same_class,
                               const SimConfig& config) {
    if (x_ij.size() != x_kl.size()) {
        throw std::invalid_argument("pair_force: dimension mismatch");
    }
    std::vector<double> force(x_ij.size(), 0.0);
    accumulate_pair_force(x_ij.data(), x_kl.data(), x_ij.size(), same_class, config, 1.0, force.data());
    return force;
}

Matrix total_force(const ParticleState& state, const SimConfig& config) {
    const int n = static_cast<int>(state.rows);
    const std::size_t dim = state.cols;
    const std::vector<Pair> pairs = enumerate_pairs(n);
    const std::size_t count = pairs.size();

    Matrix sums(count, dim);
    std::vector<int> labels(count);
    std::vector<int> class_size(static_cast<std::size_t>(n), 0);
    for (std::size_t p = 0; p < count; ++p) {
        const auto a = state.row(static_cast<std::size_t>(pairs[p].a));
        const auto b = state.row(static_cast<std::size_t>(pairs[p].b));
        for (std::size_t d = 0; d < dim; ++d) {
            sums(p, d) = a[d] + b[d];
        }
        labels[p] = (pairs[p].a + pairs[p].b) % n;
        ++class_size[static_cast<std::size_t>(labels[p])];
    }

    Matrix forces(state.rows, dim);
    std::vector<double> on_pair(dim);
    for (std::size_t p = 0; p < count; ++p) {
        const int n_same = class_size[static_cast<std::size_t>(labels[p])] - 1;
        const int n_diff = static_cast<int>(count) - 1 - n_same;
        const double w_same = n_same > 0 ? 1.0 / n_same : 0.0;
        const double w_diff = n_diff > 0 ? 1.0 / n_diff : 0.0;

        std::fill(on_pair.begin(), on_pair.end(), 0.0);
        const double* x_ij = sums.data.data() + p * dim;
        for (std::size_t q = 0; q < count; ++q) {
            if (q == p) {
                continue;
            }
            const bool same = labels[q] == labels[p];
            accumulate_pair_force(x_ij, sums.data.data() + q * dim, dim, same, config, same ? w_same : w_diff,
                                  on_pair.data());
        }
        // Equal force on both members; a diagonal pair (i, i) pushes particle i twice.
        auto fi = forces.row(static_cast<std::size_t>(pairs[p].a));
        auto fj = forces.row(static_cast<std::size_t>(pairs[p].b));
        for (std::size_t d = 0; d < dim; ++d) {
            fi[d] += on_pair[d];
            fj[d] += on_pair[d];
        }
    }
    return forces;
}

double total_variance(const ParticleState& state) {
    double total = 0.0;
    for (std::size_t d = 0; d < state.cols; ++d) {
        double mean = 0.0;
        for (std::size_t i = 0; i < state.rows; ++i) {
            mean += state(i, d);
        }
        mean /= static_cast<double>(state.rows);
        for (std::size_t i = 0; i < state.rows; ++i) {
            const double dev = state(i, d) - mean;
            total += dev * dev;
        }
    }
    return total;
}

void renormalize(ParticleState& state, double target_total_variance) {
    for (std::size_t d = 0; d < state.cols; ++d) {
        double mean = 0.0;
        for (std::size_t i = 0; i < state.rows; ++i) {
            mean += state(i, d);
        }
        mean /= static_cast<double>(state.rows);
        for (std::size_t i = 0; i < state.rows; ++i) {
            state(i, d) -= mean;
        }
    }
    const double current = total_variance(state);
    if (!(current > 0.0) || !std::isfinite(current)) {
        throw DivergenceError("renormalize: particles collapsed or diverged (total variance " +
                              std::to_string(current) + ")");
    }
    const double scale = std::sqrt(target_total_variance / current);
    for (double& v : state.data) {
        v *= scale;
    }
}

ParticleState step(const ParticleState& state, const SimConfig& config) {
    const Matrix forces = total_force(state, config);
    ParticleState next = state;
    for (std::size_t i = 0; i < state.rows; ++i) {
        const auto f = forces.row(i);
        double scale = config.step_size;
        if (config.step_rule == StepRule::kFixedLength) {
            double norm = 0.0;
            for (double v : f) {
                norm += v * v;
            }
            norm = std::sqrt(norm);
            scale = norm > 0.0 ? config.step_size / norm : 0.0;
        }
        auto x = next.row(i);
        for (std::size_t d = 0; d < state.cols; ++d) {
            x[d] += scale * f[d];
        }
    }
    for (double v : next.data) {
        if (!std::isfinite(v)) {
            throw DivergenceError("step: non-finite particle position");
        }
    }
    renormalize(next, config.total_variance_target());
    return next;
}

ParticleState initial_state(const SimConfig& config) {
    config.validate();
    ParticleState state(static_cast<std::size_t>(config.modulus), static_cast<std::size_t>(config.dim));
    CounterRng rng = CounterRng(config.seed).split(streams::kParticleInit);
    for (double& v : state.data) {
        v = rng.normal();
    }
    renormalize(state, config.total_variance_target());
    return state;
}

SimResult simulate_from(ParticleState initial, const SimConfig& config, bool record_trajectory) {
    config.validate();
    if (initial.rows != static_cast<std::size_t>(config.modulus) ||
        initial.cols != static_cast<std::size_t>(config.dim)) {
        throw std::invalid_argument("simulate: initial state shape does not match config");
    }
    SimResult result;
    result.final_state = std::move(initial);
    try {
        renormalize(result.final_state, config.total_variance_target());
        if (record_trajectory) {
            result.trajectory.push_back(result.final_state);
        }
        for (int s = 0; s < config.steps; ++s) {
            result.final_state = step(result.final_state, config);
            ++result.steps_completed;
            if (record_trajectory) {
                result.trajectory.push_back(result.final_state);
            }
        }
    } catch (const DivergenceError& e) {
        result.failure = std::string(e.what()) + " (after " + std::to_string(result.steps_completed) + " steps)";
    }
    return result;
}

SimResult simulate(const SimConfig& config, bool record_trajectory) {
    config.validate();
    ParticleState init(static_cast<std::size_t>(config.modulus), static_cast<std::size_t>(config.dim));
    CounterRng rng = CounterRng(config.seed).split(streams::kParticleInit);
    for (double& v : init.data) {
        v = rng.normal();
    }
    return simulate_from(std::move(init), config, record_trajectory);
}

SimSweepResult sim_sweep(std::span<const double> alignment_values, std::span<const std::uint64_t> seeds,
                         const SimConfig& base, unsigned jobs, double circle_threshold) {
    if (alignment_values.empty() || seeds.empty()) {
        throw std::invalid_argument("sim_sweep: f_a and seed lists must be non-empty");
    }
    base.validate();
    SimSweepResult result;
    result.runs.resize(alignment_values.size() * seeds.size());
    parallel_for(result.runs.size(), jobs, [&](std::size_t index) {
        SimConfig config = base;
        config.alignment = alignment_values[index / seeds.size()];
        config.seed = seeds[index % seeds.size()];
        const SimResult sim = simulate(config);
        SimRunSummary& run = result.runs[index];
        run.alignment = config.alignment;
        run.seed = config.seed;
        run.aborted = sim.failure.has_value();
        if (!run.aborted) {
            run.is_circle = is_circle(sim.final_state, circle_threshold);
            run.imperfections = count_imperfections(sim.final_state);
        }
    });

    for (std::size_t a = 0; a < alignment_values.size(); ++a) {
        SimSweepRow row;
        row.alignment = alignment_values[a];
        std::vector<double> imperfections;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const SimRunSummary& run = result.runs[a * seeds.size() + s];
            if (run.aborted) {
                ++row.aborted;
            } else if (run.is_circle) {
                ++row.circles;
            } else {
                ++row.grids;
                imperfections.push_back(run.imperfections);
            }
        }
        row.grid_imperfections = mean_with_ci(imperfections);
        result.rows.push_back(row);
    }
    return result;
}

}  // namespace modadd
