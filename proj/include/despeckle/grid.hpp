#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace despeckle {

/// Dense 2D field of doubles stored row-major. Pixel (x, y) lives at y * width + x.
class Grid {
public:
    Grid() = default;
    Grid(std::size_t width, std::size_t height, double fill = 0.0);
    Grid(std::size_t width, std::size_t height, std::vector<double> values);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t x, std::size_t y) { return values_[y * width_ + x]; }
    double operator()(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    std::size_t index(std::size_t x, std::size_t y) const noexcept { return y * width_ + x; }
    bool same_shape(const Grid& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }
    bool all_finite() const noexcept;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> values_;
};

struct GridStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double l1_norm = 0.0;
    double l2_norm = 0.0;
};

/// Reductions in row-major order with compensated summation.
GridStats grid_stats(const Grid& g);

/// Truncated separable Gaussian (radius ceil(3 sigma), renormalised) with
/// half-sample mirror boundaries. sigma == 0 returns the input.
Grid gaussian_blur(const Grid& f, double sigma);

/// The renormalised 1D taps used by gaussian_blur, index 0 is offset -radius.
std::vector<double> gaussian_taps(double sigma);

/// Half-sample symmetric reflection of an arbitrary integer coordinate into [0, n).
std::size_t mirror_index(long i, std::size_t n) noexcept;

/// Throws InvalidArgument unless the two grids have identical dimensions.
void require_same_shape(const Grid& a, const Grid& b, const char* what);

}  // namespace despeckle
