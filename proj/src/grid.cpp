#include "despeckle/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "despeckle/errors.hpp"
#include "despeckle/summation.hpp"

namespace despeckle {

Grid::Grid(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), values_(width * height, fill) {}

Grid::Grid(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (values_.size() != width_ * height_) {
        throw InvalidArgument("grid value count " + std::to_string(values_.size()) +
                              " does not match " + std::to_string(width_) + "x" +
                              std::to_string(height_));
    }
}

bool Grid::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
    if (!a.same_shape(b)) {
        throw InvalidArgument(std::string(what) + ": dimension mismatch (" +
                              std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                              " vs " + std::to_string(b.width()) + "x" +
                              std::to_string(b.height()) + ")");
    }
}

GridStats grid_stats(const Grid& g) {
    GridStats s;
    if (g.empty()) return s;
    CompensatedSum sum, abs_sum, sq_sum;
    s.min = g[0];
    s.max = g[0];
    for (double v : g.values()) {
        sum += v;
        abs_sum += std::fabs(v);
        sq_sum += v * v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean = sum.value() / static_cast<double>(g.size());
    s.l1_norm = abs_sum.value();
    s.l2_norm = std::sqrt(sq_sum.value());
    return s;
}

std::size_t mirror_index(long i, std::size_t n) noexcept {
    const long period = 2 * static_cast<long>(n);
    long m = i % period;
    if (m < 0) m += period;
    return m < static_cast<long>(n) ? static_cast<std::size_t>(m)
                                    : static_cast<std::size_t>(period - 1 - m);
}

std::vector<double> gaussian_taps(double sigma) {
    if (!std::isfinite(sigma) || sigma < 0.0) {
        throw InvalidArgument("gaussian sigma must be finite and nonnegative");
    }
    if (sigma == 0.0) return {1.0};
    const long radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (long k = -radius; k <= radius; ++k) {
        const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        taps[static_cast<std::size_t>(k + radius)] = v;
        total += v;
    }
    for (double& t : taps) t /= total;
    return taps;
}

Grid gaussian_blur(const Grid& f, double sigma) {
    const std::vector<double> taps = gaussian_taps(sigma);
    if (taps.size() == 1) return f;
    const long radius = static_cast<long>(taps.size() / 2);
    const std::size_t w = f.width();
    const std::size_t h = f.height();

    Grid tmp(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long k = -radius; k <= radius; ++k) {
                acc += taps[static_cast<std::size_t>(k + radius)] *
                       f(mirror_index(static_cast<long>(x) + k, w), y);
            }
            tmp(x, y) = acc;
        }
    }
    Grid out(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long k = -radius; k <= radius; ++k) {
                acc += taps[static_cast<std::size_t>(k + radius)] *
                       tmp(x, mirror_index(static_cast<long>(y) + k, h));
            }
            out(x, y) = acc;
        }
    }
    return out;
}

}  // namespace despeckle
