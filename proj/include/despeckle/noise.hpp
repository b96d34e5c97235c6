#pragma once

#include <array>
#include <cstdint>

#include "despeckle/grid.hpp"

namespace despeckle {

/// Philox4x32-10 block function: 128-bit counter, 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Deterministic uniform stream addressed by (seed, stream). Draw k of a stream
/// depends only on (seed, stream, k), never on how other streams were consumed.
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    std::uint64_t next_u64() noexcept;
    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double next_uniform() noexcept;
    double next_normal() noexcept;

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;  // 32-bit words consumed from buffer_
};

/// Gamma(shape, scale = 1/shape) draw via Marsaglia-Tsang; shape >= 1.
double sample_unit_mean_gamma(CounterStream& stream, double shape);

struct GammaNoiseSpec {
    int looks = 10;
    std::uint64_t seed = 0;
};

/// f = clean * eta with eta ~ Gamma(L, 1/L) drawn from stream (seed, pixel index).
Grid gamma_speckle(const Grid& clean, const GammaNoiseSpec& spec);

/// Additive N(0, sigma^2) noise with the same per-pixel addressing (used for
/// calibrating the noise estimator).
Grid gaussian_noise(const Grid& clean, double sigma, std::uint64_t seed);

/// Immerkaer's fast noise standard deviation estimate.
double estimate_noise_h(const Grid& noisy);

}  // namespace despeckle
