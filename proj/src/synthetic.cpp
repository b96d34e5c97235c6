#include "despeckle/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "despeckle/noise.hpp"

namespace despeckle::synthetic {

Grid cartoon(std::size_t width, std::size_t height) {
    Grid g(width, height, 60.0);
    const double w = static_cast<double>(width);
    const double h = static_cast<double>(height);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = (static_cast<double>(x) + 0.5) / w;
            const double fy = (static_cast<double>(y) + 0.5) / h;
            double v = 60.0;
            if (fx > 0.1 && fx < 0.45 && fy > 0.12 && fy < 0.5) v = 180.0;
            const double dx = fx - 0.68;
            const double dy = fy - 0.32;
            if (dx * dx + dy * dy < 0.2 * 0.2) v = 120.0;
            // Triangle in the lower half with a slanted hypotenuse.
            if (fy > 0.6 && fy < 0.92 && fx > 0.15 && fx < 0.15 + (fy - 0.6) * 1.6) v = 220.0;
            if (fx > 0.6 && fx < 0.9 && fy > 0.7 && fy < 0.8) v = 150.0;
            g(x, y) = v;
        }
    }
    return g;
}

Grid stripes(std::size_t width, std::size_t height, double period) {
    Grid g(width, height);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>(x + y) / period;
            g(x, y) = 130.0 + 60.0 * std::sin(phase);
        }
    }
    return g;
}

Grid radial_bump(std::size_t width, std::size_t height, double base, double amplitude) {
    Grid g(width, height);
    const double cx = (static_cast<double>(width) - 1.0) / 2.0;
    const double cy = (static_cast<double>(height) - 1.0) / 2.0;
    const double s = static_cast<double>(width) / 5.0;
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            g(x, y) = base + amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
        }
    }
    return g;
}

Grid random_uniform(std::size_t width, std::size_t height, std::uint64_t seed, double lo, double hi) {
    Grid g(width, height);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CounterStream s(seed, i);
        g[i] = lo + (hi - lo) * s.next_uniform();
    }
    return g;
}

Hybrid hybrid(std::size_t width, std::size_t height) {
    Hybrid out{cartoon(width, height), Grid(width, height, 0.0)};
    const Grid tex = stripes(width, height);
    const double w = static_cast<double>(width);
    const double h = static_cast<double>(height);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = (static_cast<double>(x) + 0.5) / w;
            const double fy = (static_cast<double>(y) + 0.5) / h;
            if (fx > 0.55 && fx < 0.95 && fy > 0.05 && fy < 0.6) {
                out.image(x, y) = tex(x, y);
                out.texture_levels(x, y) = 255.0;
            }
        }
    }
    return out;
}

std::vector<CorpusImage> corpus() {
    return {
        {"cartoon", cartoon(64, 64)},
        {"stripes", stripes(64, 64)},
        {"bump", radial_bump(64, 64)},
        {"hybrid", hybrid(128, 128).image},
    };
}

}  // namespace despeckle::synthetic
