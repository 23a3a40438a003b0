#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "modadd/optimizer.hpp"
#include "modadd/particlesim.hpp"
#include "modadd/rng.hpp"
#include "oracles.hpp"

using namespace modadd;

namespace {

SimConfig unit_constants() {
    SimConfig c;
    c.repulsion = 1.0;
    c.attraction = 1.0;
    c.alignment = 1.0;
    return c;
}

// Brute-force per-particle force: every ordered (focal, partner) pair, class counts recomputed
// by scanning.
Matrix oracle_total_force(const Matrix& x, const SimConfig& c) {
    const int n = static_cast<int>(x.rows);
    const std::size_t dim = x.cols;
    std::vector<std::array<int, 2>> pairs;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            pairs.push_back({i, j});
        }
    }
    auto sum_of = [&](const std::array<int, 2>& p) {
        std::vector<double> s(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            s[d] = x(static_cast<std::size_t>(p[0]), d) + x(static_cast<std::size_t>(p[1]), d);
        }
        return s;
    };
    Matrix f(x.rows, dim);
    for (const auto& p : pairs) {
        int n_same = 0;
        int n_diff = 0;
        for (const auto& q : pairs) {
            if (q == p) {
                continue;
            }
            ((p[0] + p[1]) % n == (q[0] + q[1]) % n ? n_same : n_diff) += 1;
        }
        for (const auto& q : pairs) {
            if (q == p) {
                continue;
            }
            const bool same = (p[0] + p[1]) % n == (q[0] + q[1]) % n;
            const auto force = oracle::pair_force(sum_of(p), sum_of(q), same, c.repulsion, c.attraction, c.alignment);
            const double w = same ? 1.0 / n_same : 1.0 / n_diff;
            for (std::size_t d = 0; d < dim; ++d) {
                f(static_cast<std::size_t>(p[0]), d) += w * force[d];
                f(static_cast<std::size_t>(p[1]), d) += w * force[d];
            }
        }
    }
    return f;
}

double mean_abs_coordinate_mean(const Matrix& x) {
    double worst = 0.0;
    for (std::size_t d = 0; d < x.cols; ++d) {
        double m = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            m += x(i, d);
        }
        worst = std::max(worst, std::abs(m / static_cast<double>(x.rows)));
    }
    return worst;
}

Matrix rotate(const Matrix& x, double angle) {
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows; ++i) {
        out(i, 0) = std::cos(angle) * x(i, 0) - std::sin(angle) * x(i, 1);
        out(i, 1) = std::sin(angle) * x(i, 0) + std::cos(angle) * x(i, 1);
    }
    return out;
}

}  // namespace

TEST_CASE("pair force worked cases") {
    const SimConfig c = unit_constants();
    CHECK(pair_force(std::vector<double>{1, 0}, std::vector<double>{-1, 0}, true, c) == std::vector<double>{-1, 0});
    const auto repel = pair_force(std::vector<double>{1, 0}, std::vector<double>{0, 1}, false, c);
    CHECK(repel[0] == doctest::Approx(0.5));
    CHECK(repel[1] == doctest::Approx(-0.5));
    const auto cancel = pair_force(std::vector<double>{2, 0}, std::vector<double>{1, 0}, true, c);
    CHECK(cancel[0] == doctest::Approx(0.0));
    CHECK(cancel[1] == doctest::Approx(0.0));
}

TEST_CASE("pair force matches the case-by-case formula") {
    CounterRng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        SimConfig c;
        c.repulsion = 2.0 * rng.uniform();
        c.attraction = 2.0 * rng.uniform();
        c.alignment = 2.0 * rng.uniform();
        const std::size_t dim = 1 + static_cast<std::size_t>(trial % 4);
        std::vector<double> a(dim);
        std::vector<double> b(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            a[d] = rng.normal();
            b[d] = rng.normal();
        }
        const bool same = trial % 2 == 0;
        const auto got = pair_force(a, b, same, c);
        const auto want = oracle::pair_force(a, b, same, c.repulsion, c.attraction, c.alignment);
        for (std::size_t d = 0; d < dim; ++d) {
            CHECK(got[d] == doctest::Approx(want[d]).epsilon(1e-12));
        }
    }
}

TEST_CASE("clustering terms are antisymmetric, alignment is not") {
    CounterRng rng(5);
    SimConfig clustering = unit_constants();
    clustering.alignment = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<double> a{rng.normal(), rng.normal()};
        const std::vector<double> b{rng.normal(), rng.normal()};
        for (bool same : {true, false}) {
            const auto ab = pair_force(a, b, same, clustering);
            const auto ba = pair_force(b, a, same, clustering);
            CHECK(ab[0] == doctest::Approx(-ba[0]).epsilon(1e-12));
            CHECK(ab[1] == doctest::Approx(-ba[1]).epsilon(1e-12));
        }
    }
    // Aligned pair sums: the alignment push points along x_kl for both members.
    const std::vector<double> a{1.0, 0.0};
    const std::vector<double> b{3.0, 0.0};
    SimConfig align_only;
    align_only.repulsion = 0.0;
    align_only.attraction = 0.0;
    align_only.alignment = 1.0;
    CHECK(pair_force(a, b, true, align_only) == std::vector<double>{1.0, 0.0});
    CHECK(pair_force(b, a, true, align_only) == std::vector<double>{1.0, 0.0});
}

TEST_CASE("degenerate pair forces stay finite") {
    const SimConfig c = unit_constants();
    const std::vector<double> x{0.5, -0.5};
    for (bool same : {true, false}) {
        const auto f = pair_force(x, x, same, c);
        CHECK(std::isfinite(f[0]));
        CHECK(std::isfinite(f[1]));
    }
    // Tiny but non-zero separation: repulsion magnitude capped at g_r / 1e-9.
    const std::vector<double> near{0.5 + 1e-12, -0.5};
    const auto f = pair_force(x, near, false, c);
    const double magnitude = std::hypot(f[0], f[1]);
    CHECK(std::isfinite(magnitude));
    CHECK(magnitude <= 1.0 / kMinSeparation * (1.0 + 1e-9) + 2.0);
    // Zero x_kl: no alignment term.
    const std::vector<double> origin{0.0, 0.0};
    const auto g = pair_force(x, origin, true, c);
    CHECK(std::isfinite(g[0]));
}

TEST_CASE("total force matches the brute-force oracle, diagonal pairs included") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        SimConfig c = unit_constants();
        c.modulus = 3 + static_cast<int>(seed);
        c.dim = 1 + static_cast<int>(seed % 3);
        c.alignment = 0.5 * static_cast<double>(seed);
        c.seed = seed;
        const ParticleState x = initial_state(c);
        const Matrix got = total_force(x, c);
        const Matrix want = oracle_total_force(x, c);
        for (std::size_t i = 0; i < got.data.size(); ++i) {
            CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("renormalization holds after every step") {
    SimConfig c = unit_constants();
    c.seed = 12;
    const SimResult r = simulate(c, true);
    REQUIRE(!r.failure);
    REQUIRE(r.trajectory.size() == 101);
    const double target = c.total_variance_target();
    CHECK(target == 34.0);
    for (const ParticleState& s : r.trajectory) {
        CHECK(mean_abs_coordinate_mean(s) < 1e-9);
        CHECK(std::abs(total_variance(s) - target) < 1e-9);
        for (std::size_t i = 0; i < s.rows; ++i) {
            CHECK(std::hypot(s(i, 0), s(i, 1)) <= std::sqrt(target) + 1e-12);
        }
    }
}

TEST_CASE("zero force leaves a normalized state unchanged") {
    SimConfig c;
    c.repulsion = 0.0;
    c.attraction = 0.0;
    c.alignment = 0.0;
    const ParticleState x = initial_state(c);
    const ParticleState y = step(x, c);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("simulation is deterministic") {
    SimConfig c = unit_constants();
    c.seed = 99;
    c.alignment = 2.0;
    const SimResult a = simulate(c);
    const SimResult b = simulate(c);
    CHECK(a.final_state == b.final_state);
    c.seed = 100;
    CHECK(simulate(c).final_state != a.final_state);
}

TEST_CASE("rotating the initial state rotates the trajectory") {
    // Reference configuration. Some other seeds cluster tightly enough that rounding differences
    // grow chaotically over 100 steps, so they are not equivariant to this tolerance.
    const SimConfig c;
    const ParticleState x0 = initial_state(c);
    const SimResult base = simulate_from(x0, c);
    for (double angle : {0.5, 1.7, 3.0}) {
        const SimResult turned = simulate_from(rotate(x0, angle), c);
        const Matrix expected = rotate(base.final_state, angle);
        double worst = 0.0;
        for (std::size_t i = 0; i < expected.data.size(); ++i) {
            worst = std::max(worst, std::abs(expected.data[i] - turned.final_state.data[i]));
        }
        CHECK(worst < 1e-6);
    }
    // A single step is equivariant to rounding level for any state.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SimConfig s = unit_constants();
        s.seed = seed;
        const ParticleState x = initial_state(s);
        const Matrix expected = rotate(step(x, s), 1.1);
        const Matrix got = step(rotate(x, 1.1), s);
        for (std::size_t i = 0; i < got.data.size(); ++i) {
            CHECK(got.data[i] == doctest::Approx(expected.data[i]).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("uniformly scaled initial states give the same trajectory") {
    SimConfig c = unit_constants();
    c.seed = 4;
    const ParticleState x0 = initial_state(c);
    ParticleState scaled = x0;
    for (double& v : scaled.data) {
        v *= 3.0;
    }
    const SimResult a = simulate_from(x0, c);
    const SimResult b = simulate_from(scaled, c);
    for (std::size_t i = 0; i < a.final_state.data.size(); ++i) {
        CHECK(a.final_state.data[i] == doctest::Approx(b.final_state.data[i]).epsilon(1e-6));
    }
}

TEST_CASE("fixed-length step rule moves each particle by at most step_size before renormalization") {
    SimConfig c = unit_constants();
    c.step_rule = StepRule::kFixedLength;
    c.step_size = 0.05;
    const SimResult r = simulate(c);
    CHECK(!r.failure);
    c.step_rule = StepRule::kProportional;
    CHECK(simulate(c).final_state != r.final_state);
}

TEST_CASE("collapsed states abort with a diagnostic") {
    SimConfig c;
    ParticleState collapsed(17, 2, 0.25);
    const SimResult r = simulate_from(collapsed, c);
    CHECK(r.failure.has_value());
    CHECK_THROWS_AS(renormalize(collapsed, 34.0), DivergenceError);
}

TEST_CASE("sim sweep rows account for every seed") {
    SimConfig c;
    c.steps = 10;
    const std::vector<double> fa{0.5, 2.0};
    const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    const SimSweepResult r = sim_sweep(fa, seeds, c, 2);
    REQUIRE(r.rows.size() == 2);
    for (const SimSweepRow& row : r.rows) {
        CHECK(row.circles + row.grids + row.aborted == 5);
    }
    CHECK(r.runs.size() == 10);
    CHECK(r.runs[7].alignment == 2.0);
    CHECK(r.runs[7].seed == 2);
    CHECK_THROWS_AS(sim_sweep(std::vector<double>{}, seeds, c), std::invalid_argument);
}

TEST_CASE("invalid simulation configs") {
    SimConfig c;
    c.steps = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.steps = 1;
    c.step_size = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.step_size = 0.1;
    c.repulsion = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
