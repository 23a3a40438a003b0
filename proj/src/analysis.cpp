#include "modadd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace modadd {

namespace {

double row_norm(std::span<const double> row) {
    double sq = 0.0;
    for (double v : row) {
        sq += v * v;
    }
    return std::sqrt(sq);
}

}  // namespace

CircleTest test_circle(const EmbeddingSnapshot& snapshot, double threshold) {
    if (snapshot.rows == 0) {
        throw std::invalid_argument("is_circle: empty snapshot");
    }
    double min_norm = std::numeric_limits<double>::infinity();
    double max_norm = 0.0;
    for (std::size_t i = 0; i < snapshot.rows; ++i) {
        const double n = row_norm(snapshot.row(i));
        min_norm = std::min(min_norm, n);
        max_norm = std::max(max_norm, n);
    }
    CircleTest result;
    if (!(min_norm > 0.0)) {
        result.degenerate = true;
        result.ratio = std::numeric_limits<double>::infinity();
        return result;
    }
    result.ratio = max_norm / min_norm;
    result.circle = result.ratio < threshold;
    return result;
}

bool is_circle(const EmbeddingSnapshot& snapshot, double threshold) {
    return test_circle(snapshot, threshold).circle;
}

std::vector<PairSum> pair_sums(const EmbeddingSnapshot& snapshot, std::span<const Pair> pairs) {
    const int n = static_cast<int>(snapshot.rows);
    std::vector<PairSum> out;
    out.reserve(pairs.size());
    for (const Pair& p : pairs) {
        if (p.a < 0 || p.b < 0 || p.a >= n || p.b >= n) {
            throw std::invalid_argument("pair_sums: index out of range");
        }
        PairSum ps{p, std::vector<double>(snapshot.cols), target(p.a, p.b, n)};
        const auto ra = snapshot.row(static_cast<std::size_t>(p.a));
        const auto rb = snapshot.row(static_cast<std::size_t>(p.b));
        for (std::size_t d = 0; d < snapshot.cols; ++d) {
            ps.sum[d] = ra[d] + rb[d];
        }
        out.push_back(std::move(ps));
    }
    return out;
}

int count_imperfections(const EmbeddingSnapshot& snapshot) {
    const int n = static_cast<int>(snapshot.rows);
    if (n < 2) {
        throw std::invalid_argument("count_imperfections: need at least 2 rows");
    }
    const std::vector<Pair> pairs = enumerate_pairs(n);
    const std::vector<PairSum> sums = pair_sums(snapshot, pairs);
    const std::size_t dim = snapshot.cols;

    int imperfections = 0;
    for (std::size_t p = 0; p < sums.size(); ++p) {
        double min_dist = std::numeric_limits<double>::infinity();
        bool match = false;
        for (std::size_t q = 0; q < sums.size(); ++q) {
            if (q == p) {
                continue;
            }
            double sq = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = sums[p].sum[d] - sums[q].sum[d];
                sq += diff * diff;
            }
            const double dist = std::sqrt(sq);
            if (dist < min_dist) {
                min_dist = dist;
                match = sums[p].label == sums[q].label;
            }
        }
        if (!match) {
            ++imperfections;
        }
    }
    return imperfections;
}

CorrelationResult pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("pearson_correlation: length mismatch");
    }
    const std::size_t n = xs.size();
    if (n < 4) {
        throw std::invalid_argument("pearson_correlation: need at least 4 observations for a Fisher-z interval");
    }
    const double mean_x = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
    const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = ys[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        throw UndefinedCorrelation("pearson_correlation: zero variance in one of the inputs");
    }
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

    CorrelationResult result{r, r, r};
    if (std::abs(r) < 1.0) {
        const double z = std::atanh(r);
        const double se = 1.0 / std::sqrt(static_cast<double>(n) - 3.0);
        result.ci_low = std::tanh(z - kZ95 * se);
        result.ci_high = std::tanh(z + kZ95 * se);
    }
    return result;
}

MeanInterval mean_with_ci(std::span<const double> values) {
    MeanInterval out;
    if (values.empty()) {
        return out;
    }
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) {
        return out;
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - out.mean) * (v - out.mean);
    }
    out.half_width = kZ95 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return out;
}

double mean_abs(const Matrix& tensor) {
    if (tensor.data.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (double v : tensor.data) {
        total += std::abs(v);
    }
    return total / static_cast<double>(tensor.data.size());
}

MagnitudeStats magnitude_stats(const ModelParams& params) {
    return MagnitudeStats{mean_abs(params.hidden_weight), mean_abs(params.hidden_bias),
                          mean_abs(params.output_weight), mean_abs(params.output_bias)};
}

StructureReport analyze_structure(const EmbeddingSnapshot& final_embedding, double validation_accuracy,
                                  double threshold) {
    const CircleTest circle = test_circle(final_embedding, threshold);
    return StructureReport{circle.circle, circle.ratio, count_imperfections(final_embedding),
                           validation_accuracy};
}

EmbeddingSnapshot project_2d(const EmbeddingSnapshot& snapshot, std::pair<int, int> dims) {
    const int dim = static_cast<int>(snapshot.cols);
    const auto [first, second] = dims;
    if (first < 0 || second < 0 || first >= dim || second >= dim || first == second) {
        throw std::invalid_argument("project_2d: axes must be distinct and < " + std::to_string(dim));
    }
    EmbeddingSnapshot out(snapshot.rows, 2);
    for (std::size_t i = 0; i < snapshot.rows; ++i) {
        out(i, 0) = snapshot(i, static_cast<std::size_t>(first));
        out(i, 1) = snapshot(i, static_cast<std::size_t>(second));
    }
    return out;
}

std::vector<std::pair<int, int>> canonical_projections(int dim) {
    if (dim == 3) {
        return {{0, 1}, {1, 2}, {0, 2}};
    }
    if (dim == 4) {
        return {{0, 1}, {2, 3}, {0, 2}};
    }
    throw std::invalid_argument("canonical_projections: D must be 3 or 4, got " + std::to_string(dim));
}

}  // namespace modadd
