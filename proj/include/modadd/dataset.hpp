#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace modadd {

// Unordered input pair, a <= b.
struct Pair {
    int a = 0;
    int b = 0;

    auto operator<=>(const Pair&) const = default;
};

struct PairDataset {
    int modulus = 0;
    std::vector<Pair> train;
    std::vector<Pair> val;
};

// All (a, b) with 0 <= a <= b < modulus, lexicographic. Throws std::invalid_argument for modulus < 1.
std::vector<Pair> enumerate_pairs(int modulus);

// (a + b) mod modulus.
int target(int a, int b, int modulus);

std::vector<int> targets(std::span<const Pair> pairs, int modulus);

// Fisher-Yates shuffle under `seed`, then the first round_half_up(fraction * |pairs|) go to train.
PairDataset split_dataset(int modulus, std::span<const Pair> pairs, double train_fraction,
                          std::uint64_t seed);

std::size_t train_size(std::size_t pair_count, double train_fraction);

}  // namespace modadd
