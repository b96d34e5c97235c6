#include "despeckle/noise.hpp"

#include <cmath>
#include <numbers>

#include "despeckle/errors.hpp"

namespace despeckle {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint64_t kMul0 = 0xD2511F53u;
    constexpr std::uint64_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = kMul0 * ctr[0];
        const std::uint64_t p1 = kMul1 * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

std::uint64_t CounterStream::next_u64() noexcept {
    if (used_ >= 4) {
        buffer_ = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                              static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                             key_);
        ++block_;
        used_ = 0;
    }
    const std::uint64_t v = static_cast<std::uint64_t>(buffer_[used_]) << 32 | buffer_[used_ + 1];
    used_ += 2;
    return v;
}

double CounterStream::next_uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterStream::next_normal() noexcept {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double sample_unit_mean_gamma(CounterStream& stream, double shape) {
    if (!(shape >= 1.0)) throw InvalidArgument("gamma shape must be >= 1");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = stream.next_normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = stream.next_uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / shape;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / shape;
    }
}

Grid gamma_speckle(const Grid& clean, const GammaNoiseSpec& spec) {
    if (spec.looks < 1) throw InvalidArgument("number of looks must be >= 1");
    Grid out(clean.width(), clean.height());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        if (clean[i] < 0.0) {
            throw InvalidArgument("multiplicative speckle requires nonnegative pixels (pixel " +
                                  std::to_string(i) + ")");
        }
        CounterStream stream(spec.seed, i);
        out[i] = clean[i] * sample_unit_mean_gamma(stream, static_cast<double>(spec.looks));
    }
    return out;
}

Grid gaussian_noise(const Grid& clean, double sigma, std::uint64_t seed) {
    Grid out(clean.width(), clean.height());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        CounterStream stream(seed, i);
        out[i] = clean[i] + sigma * stream.next_normal();
    }
    return out;
}

double estimate_noise_h(const Grid& f) {
    const std::size_t w = f.width();
    const std::size_t h = f.height();
    if (w < 3 || h < 3) throw InvalidArgument("noise estimation needs at least a 3x3 image");
    double total = 0.0;
    for (std::size_t y = 1; y + 1 < h; ++y) {
        for (std::size_t x = 1; x + 1 < w; ++x) {
            const double r = f(x - 1, y - 1) - 2.0 * f(x, y - 1) + f(x + 1, y - 1)
                           - 2.0 * f(x - 1, y) + 4.0 * f(x, y) - 2.0 * f(x + 1, y)
                           + f(x - 1, y + 1) - 2.0 * f(x, y + 1) + f(x + 1, y + 1);
            total += std::fabs(r);
        }
    }
    return std::sqrt(std::numbers::pi / 2.0) * total /
           (6.0 * static_cast<double>(w - 2) * static_cast<double>(h - 2));
}

}  // namespace despeckle
