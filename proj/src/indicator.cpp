#include "despeckle/indicator.hpp"

#include <algorithm>
#include <cmath>

#include "despeckle/errors.hpp"
#include "despeckle/image_io.hpp"

namespace despeckle {

TextureMask TextureMask::from_levels(const Grid& levels, double sigma1) {
    TextureMask m;
    m.sigma1 = sigma1;
    m.chi = Grid(levels.width(), levels.height());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        m.chi[i] = levels[i] >= 128.0 ? kTexture : kBackground;
    }
    return m;
}

TextureMask TextureMask::load(const std::filesystem::path& pgm, double sigma1) {
    return from_levels(read_pgm(pgm), sigma1);
}

IndicatorField IndicatorField::constant(std::size_t width, std::size_t height, double value) {
    IndicatorField f;
    f.g = Grid(width, height, value);
    f.params.clamp = false;
    return f;
}

Grid normalized_intensity(const Grid& f, double sigma, double beta,
                          const std::optional<TextureMask>& mask) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be nonnegative");
    if (mask) require_same_shape(f, mask->chi, "texture mask");
    Grid smooth = gaussian_blur(f, sigma);
    const double peak = grid_stats(smooth).max;
    if (!(peak > 0.0)) throw DegenerateInput("indicator undefined: smoothed image has no positive maximum");
    // Negative intensities (only possible for signed inputs) map to 0.
    for (double& v : smooth.values()) v = std::pow(std::max(v / peak, 0.0), beta);
    if (mask) {
        const Grid chi = gaussian_blur(mask->chi, mask->sigma1);
        for (std::size_t i = 0; i < smooth.size(); ++i) smooth[i] *= chi[i];
    }
    return smooth;
}

IndicatorField grayscale_indicator(const Grid& f, const IndicatorParams& params,
                                   const std::optional<TextureMask>& mask) {
    if (params.clamp && !(0.0 < params.g_min && params.g_min <= params.g_max && params.g_max < 1.0)) {
        throw InvalidArgument("indicator clamp bounds must satisfy 0 < g_min <= g_max < 1");
    }
    IndicatorField out;
    out.params = params;
    out.masked = mask.has_value();
    out.g = normalized_intensity(f, params.sigma, params.beta, mask);
    const bool nonlocal_dominant = params.lambda >= 0.5;
    for (double& v : out.g.values()) {
        if (!nonlocal_dominant) v = 1.0 - v;
        if (params.clamp) v = std::clamp(v, params.g_min, params.g_max);
    }
    return out;
}

}  // namespace despeckle
