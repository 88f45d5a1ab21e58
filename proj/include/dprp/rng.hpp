#pragma once

#include <cmath>
#include <cstdint>

namespace dprp::rng {

// SplitMix64 finalizer (Vigna). Bijective 64-bit mixer; the integer stream
// produced from it is identical on every platform.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Seed chain: derive(seed, i) = mix64(seed + golden * (i + 1)).
// Round seeds come from derive(root, t), per-client streams from
// derive(derive(root, t), i), and so on. The chain is part of the wire
// contract: clients and the server reconstruct identical matrices from the
// shared root seed alone.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed + kGolden * (index + 1));
}

// SplitMix64 generator. 2^64 period, splittable via derive(); all floating
// point output is built from the integer stream with explicit arithmetic so
// that runs are reproducible from the seed alone.
class SplitMix64 {
  public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next_u64() noexcept {
        std::uint64_t z = (state_ += kGolden);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0,1]: top 53 bits, then shifted off zero.
    double next_unit() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform on [0,1).
    double next_unit_half_open() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the spare value is cached.
    double next_gaussian() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit_half_open();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Fair +/-1, one pool refill per 64 draws.
    double next_sign() noexcept {
        if (bit_count_ == 0) {
            bit_pool_ = next_u64();
            bit_count_ = 64;
        }
        const double sign = (bit_pool_ & 1u) ? 1.0 : -1.0;
        bit_pool_ >>= 1;
        --bit_count_;
        return sign;
    }

    // Exp(1) as the squared magnitude of a standard complex Gaussian.
    double next_exponential() noexcept {
        const double x = next_gaussian();
        const double y = next_gaussian();
        return 0.5 * (x * x + y * y);
    }

    SplitMix64 split(std::uint64_t index) const noexcept {
        return SplitMix64(derive(state_, index));
    }

  private:
    std::uint64_t state_;
    std::uint64_t bit_pool_ = 0;
    int bit_count_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dprp::rng
