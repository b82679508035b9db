#pragma once

#include <cstdint>
#include <string_view>

namespace hiermap {

/// PCG-XSH-RR 64/32 (O'Neill 2014), the reference "pcg32" generator.
///
/// State transition: state = state * 6364136223846793005 + inc, with inc odd.
/// Output: xorshift-high then random rotate of the old state.
/// Seeding follows pcg32_srandom_r: state = 0, step, state += seed, step.
/// The same (seed, stream) pair yields the same sequence on every platform.
class Pcg32 {
public:
    Pcg32(std::uint64_t seed, std::uint64_t stream) noexcept;

    std::uint32_t next_u32() noexcept;

    /// Uniform double in [0, 1) with 53 random bits taken from two outputs
    /// (high word first).
    double next_uniform() noexcept;

    /// Uniform double in the open interval (0, 1).
    double next_open_uniform() noexcept;

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 1;
};

/// Standard normal variates by the basic (trigonometric) Box-Muller transform on
/// open uniforms u1, u2: z1 = r cos(2 pi u2), z2 = r sin(2 pi u2), r = sqrt(-2 log u1).
/// The second value of each pair is cached and returned by the next call.
class NormalStream {
public:
    explicit NormalStream(Pcg32 gen) noexcept : gen_(gen) {}
    NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept : gen_(seed, stream) {}

    double next() noexcept;
    double next_uniform() noexcept { return gen_.next_uniform(); }

private:
    Pcg32 gen_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derive a reproducible (seed, stream) pair for a named purpose and an index
/// (replicate number, iteration, ...). The purpose label is hashed with FNV-1a.
struct StreamKey {
    std::uint64_t seed;
    std::uint64_t stream;
};
StreamKey derive_stream(std::uint64_t base_seed, std::string_view purpose,
                        std::uint64_t index = 0) noexcept;

/// Convenience: a normal stream for (base_seed, purpose, index).
NormalStream make_normal_stream(std::uint64_t base_seed, std::string_view purpose,
                                std::uint64_t index = 0) noexcept;

/// Derive a child seed (e.g. the seed for replicate r) from a base seed.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view purpose,
                          std::uint64_t index) noexcept;

}  // namespace hiermap
