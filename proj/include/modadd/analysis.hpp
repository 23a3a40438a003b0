#pragma once

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "modadd/dataset.hpp"
#include "modadd/matrix.hpp"
#include "modadd/model.hpp"

namespace modadd {

// N rows of D coordinates: an embedding matrix or a set of particle positions.
using EmbeddingSnapshot = Matrix;

inline constexpr double kCircleThreshold = 1.2;

struct CircleTest {
    bool circle = false;
    double ratio = 0.0;       // max norm / min norm; +inf when some row has zero norm
    bool degenerate = false;  // a zero-norm row made the ratio undefined
};

CircleTest test_circle(const EmbeddingSnapshot& snapshot, double threshold = kCircleThreshold);

// max_norm / min_norm < threshold (strict). Zero-norm rows are never circles.
bool is_circle(const EmbeddingSnapshot& snapshot, double threshold = kCircleThreshold);

struct PairSum {
    Pair pair;
    std::vector<double> sum;
    int label = 0;  // (i + j) mod N
};

std::vector<PairSum> pair_sums(const EmbeddingSnapshot& snapshot, std::span<const Pair> pairs);

// Number of unordered pairs (i, j) whose nearest other pair sum (k, l) belongs to a different
// modular class. Candidates are scanned in lexicographic order with a strict comparison, so the
// first minimizer wins ties.
int count_imperfections(const EmbeddingSnapshot& snapshot);

class UndefinedCorrelation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct CorrelationResult {
    double r = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Sample Pearson r with a 95% Fisher-z interval (standard error 1 / sqrt(n - 3)).
CorrelationResult pearson_correlation(std::span<const double> xs, std::span<const double> ys);

// Two-sided 95% standard-normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

struct MeanInterval {
    double mean = 0.0;
    double half_width = 0.0;  // z95 * sample sd / sqrt(n); 0 for n < 2
};

MeanInterval mean_with_ci(std::span<const double> values);

struct MagnitudeStats {
    double hidden_weight = 0.0;  // mean |W_h|
    double hidden_bias = 0.0;    // mean |b_h|
    double output_weight = 0.0;  // mean |W_o|
    double output_bias = 0.0;    // mean |b_o|
};

double mean_abs(const Matrix& tensor);
MagnitudeStats magnitude_stats(const ModelParams& params);

struct StructureReport {
    bool is_circle = false;
    double circle_ratio = 0.0;
    int imperfections = 0;
    double validation_accuracy = 0.0;
};

StructureReport analyze_structure(const EmbeddingSnapshot& final_embedding, double validation_accuracy,
                                  double threshold = kCircleThreshold);

EmbeddingSnapshot project_2d(const EmbeddingSnapshot& snapshot, std::pair<int, int> dims);

// Projection panels for 3D and 4D embeddings: (0,1), (1,2), (0,2) for D = 3 and
// (0,1), (2,3), (0,2) for D = 4.
std::vector<std::pair<int, int>> canonical_projections(int dim);

}  // namespace modadd
