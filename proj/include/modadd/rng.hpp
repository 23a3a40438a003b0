#pragma once

#include <cstdint>

namespace modadd {

// Counter-based generator: the n-th output is splitmix64_mix(key + (n + 1) * golden_gamma).
// Streams are derived by hashing (key, stream id), so every consumer (dataset split,
// parameter init, particle init) draws from its own independent sequence and results are
// bit-reproducible on any platform with IEEE doubles. Normal deviates use Box-Muller.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    [[nodiscard]] CounterRng split(std::uint64_t stream) const noexcept;

    std::uint64_t next_u64() noexcept;

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;

    // Uniform integer in [0, bound) without modulo bias. bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;

    double normal() noexcept;

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

// Fixed stream ids so a single run seed fans out into independent sequences.
namespace streams {
inline constexpr std::uint64_t kDatasetSplit = 1;
inline constexpr std::uint64_t kModelInit = 2;
inline constexpr std::uint64_t kParticleInit = 3;
}  // namespace streams

}  // namespace modadd
