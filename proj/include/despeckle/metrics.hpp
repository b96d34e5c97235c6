#pragma once

#include "despeckle/grid.hpp"

namespace despeckle {

/// 10 log10(peak^2 / MSE); +infinity for identical images.
double psnr(const Grid& reference, const Grid& test, double peak = 255.0);

struct SsimConfig {
    int window = 11;
    double window_sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

/// Mean SSIM over all window positions fully inside the image (no padding).
double ssim(const Grid& reference, const Grid& test, const SsimConfig& cfg = {});

}  // namespace despeckle
