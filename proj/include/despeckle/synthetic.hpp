#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "despeckle/grid.hpp"

namespace despeckle::synthetic {

/// Piecewise-constant shapes on a flat background, values in [60, 220].
Grid cartoon(std::size_t width, std::size_t height);

/// Diagonal sinusoidal stripes 130 +- 60 with the given period in pixels.
Grid stripes(std::size_t width, std::size_t height, double period = 6.0);

/// base + amplitude * exp(-r^2 / (2 s^2)) centred in the image, s = width / 5.
Grid radial_bump(std::size_t width, std::size_t height, double base = 40.0, double amplitude = 160.0);

/// Uniform iid values in [lo, hi) from the counter-based stream.
Grid random_uniform(std::size_t width, std::size_t height, std::uint64_t seed, double lo = 0.0,
                    double hi = 255.0);

struct Hybrid {
    Grid image;
    Grid texture_levels;  // 255 on the striped region, 0 elsewhere
};

/// Cartoon with a striped texture block on its right side.
Hybrid hybrid(std::size_t width, std::size_t height);

struct CorpusImage {
    std::string name;
    Grid image;
};

/// The shipped corpus: cartoon, stripes and bump at 64x64, hybrid at 128x128.
std::vector<CorpusImage> corpus();

}  // namespace despeckle::synthetic
