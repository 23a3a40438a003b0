#include "modadd/dataset.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "modadd/rng.hpp"

namespace modadd {

std::vector<Pair> enumerate_pairs(int modulus) {
    if (modulus < 1) {
        throw std::invalid_argument("enumerate_pairs: modulus must be >= 1, got " + std::to_string(modulus));
    }
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(modulus) * (modulus + 1) / 2);
    for (int a = 0; a < modulus; ++a) {
        for (int b = a; b < modulus; ++b) {
            pairs.push_back({a, b});
        }
    }
    return pairs;
}

int target(int a, int b, int modulus) {
    if (modulus < 1 || a < 0 || b < 0 || a >= modulus || b >= modulus) {
        throw std::invalid_argument("target: tokens must lie in [0, " + std::to_string(modulus) + ")");
    }
    return (a + b) % modulus;
}

std::vector<int> targets(std::span<const Pair> pairs, int modulus) {
    std::vector<int> out;
    out.reserve(pairs.size());
    for (const Pair& p : pairs) {
        out.push_back(target(p.a, p.b, modulus));
    }
    return out;
}

std::size_t train_size(std::size_t pair_count, double train_fraction) {
    return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(pair_count) + 0.5));
}

PairDataset split_dataset(int modulus, std::span<const Pair> pairs, double train_fraction,
                          std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split_dataset: train_fraction must be in (0, 1)");
    }
    std::vector<Pair> shuffled(pairs.begin(), pairs.end());
    CounterRng rng = CounterRng(seed).split(streams::kDatasetSplit);
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(shuffled[i - 1], shuffled[j]);
    }
    const std::size_t n_train = train_size(shuffled.size(), train_fraction);
    PairDataset ds;
    ds.modulus = modulus;
    ds.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    ds.val.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
    return ds;
}

}  // namespace modadd
