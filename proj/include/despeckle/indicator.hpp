#pragma once

#include <filesystem>
#include <optional>

#include "despeckle/grid.hpp"

namespace despeckle {

/// Binary texture map for the masked indicator: 0.999 on texture, 0.001 on background.
struct TextureMask {
    static constexpr double kTexture = 0.999;
    static constexpr double kBackground = 0.001;

    Grid chi;
    double sigma1 = 0.5;

    /// Builds chi from a boolean-like grid: values >= 128 are texture.
    static TextureMask from_levels(const Grid& levels, double sigma1 = 0.5);
    static TextureMask load(const std::filesystem::path& pgm, double sigma1 = 0.5);
};

struct IndicatorParams {
    double sigma = 2.0;
    double beta = 2.0;
    double lambda = 0.9;
    bool clamp = true;
    double g_min = 1e-3;
    double g_max = 1.0 - 1e-3;
};

/// Per-pixel diffusion-speed weight g in [0, 1] with the parameters that produced it.
struct IndicatorField {
    Grid g;
    IndicatorParams params;
    bool masked = false;

    static IndicatorField constant(std::size_t width, std::size_t height, double value);

    std::size_t width() const noexcept { return g.width(); }
    std::size_t height() const noexcept { return g.height(); }
    double operator[](std::size_t i) const { return g[i]; }
};

/// Normalised smoothed intensity (f_sigma / max f_sigma)^beta, optionally
/// multiplied by the smoothed texture mask. Throws DegenerateInput if max f_sigma <= 0.
Grid normalized_intensity(const Grid& f, double sigma, double beta,
                          const std::optional<TextureMask>& mask = std::nullopt);

/// g = f~ when lambda >= 0.5, 1 - f~ otherwise, then optional clamping.
IndicatorField grayscale_indicator(const Grid& f, const IndicatorParams& params,
                                   const std::optional<TextureMask>& mask = std::nullopt);

}  // namespace despeckle
