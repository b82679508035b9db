#include "hiermap/rng.hpp"

#include <cmath>
#include <numbers>

namespace hiermap {

Pcg32::Pcg32(std::uint64_t seed, std::uint64_t stream) noexcept
    : state_(0), inc_((stream << 1u) | 1u) {
    next_u32();
    state_ += seed;
    next_u32();
}

std::uint32_t Pcg32::next_u32() noexcept {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

double Pcg32::next_uniform() noexcept {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    const std::uint64_t bits = ((hi << 32u) | lo) >> 11u;
    return static_cast<double>(bits) * 0x1.0p-53;
}

double Pcg32::next_open_uniform() noexcept {
    return next_uniform() + 0x1.0p-54;
}

double NormalStream::next() noexcept {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = gen_.next_open_uniform();
    const double u2 = gen_.next_open_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(angle);
    has_cached_ = true;
    return r * std::cos(angle);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30u)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27u)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31u);
}

namespace {

std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

StreamKey derive_stream(std::uint64_t base_seed, std::string_view purpose,
                        std::uint64_t index) noexcept {
    const std::uint64_t tag = fnv1a(purpose);
    const std::uint64_t seed = splitmix64(base_seed ^ splitmix64(tag + index));
    const std::uint64_t stream = splitmix64(tag ^ (index * 0xd1342543de82ef95ULL));
    return {seed, stream};
}

NormalStream make_normal_stream(std::uint64_t base_seed, std::string_view purpose,
                                std::uint64_t index) noexcept {
    const StreamKey key = derive_stream(base_seed, purpose, index);
    return NormalStream(key.seed, key.stream);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view purpose,
                          std::uint64_t index) noexcept {
    return derive_stream(base_seed, purpose, index).seed;
}

}  // namespace hiermap
