#pragma once

#include <algorithm>
#include <vector>

#include "despeckle/grid.hpp"
#include "parallel.hpp"

namespace despeckle::detail {

// Midpoint discretisation of div((1 - g) phi(|grad u|^2) grad u) with replicated
// ghost cells. Each edge value is computed once and shared by its two pixels, so
// the pixel sums telescope exactly.
//
//   C_{x+1/2,y} = (1 - (g_{x+1,y} + g_{x,y}) / 2) * coef(d^2 + t^2 + eps)
//   d = u_{x+1,y} - u_{x,y}
//   t = (u_{x+1,y+1} + u_{x,y+1} - u_{x+1,y-1} - u_{x,y-1}) / 4
template <typename Coef>
Grid midpoint_flux(const Grid& u, const Grid& g, double eps, Coef&& coef) {
    const std::size_t w = u.width();
    const std::size_t h = u.height();
    // flux_x[y*(w-1)+x] lives on the edge (x,y)-(x+1,y); flux_y[y*w+x] on (x,y)-(x,y+1).
    std::vector<double> flux_x(w > 1 ? (w - 1) * h : 0);
    std::vector<double> flux_y(h > 1 ? w * (h - 1) : 0);
    parallel_for(h, [&](std::size_t y) {
        const std::size_t yn = std::min(y + 1, h - 1);
        const std::size_t yp = y > 0 ? y - 1 : 0;
        for (std::size_t x = 0; x + 1 < w; ++x) {
            const double d = u(x + 1, y) - u(x, y);
            const double t = (u(x + 1, yn) + u(x, yn) - u(x + 1, yp) - u(x, yp)) / 4.0;
            const double c = (1.0 - (g(x + 1, y) + g(x, y)) / 2.0) * coef(d * d + t * t + eps);
            flux_x[y * (w - 1) + x] = c * d;
        }
        if (y + 1 < h) {
            for (std::size_t x = 0; x < w; ++x) {
                const std::size_t xn = std::min(x + 1, w - 1);
                const std::size_t xp = x > 0 ? x - 1 : 0;
                const double d = u(x, y + 1) - u(x, y);
                const double t = (u(xn, y + 1) + u(xn, y) - u(xp, y + 1) - u(xp, y)) / 4.0;
                const double c = (1.0 - (g(x, y + 1) + g(x, y)) / 2.0) * coef(d * d + t * t + eps);
                flux_y[y * w + x] = c * d;
            }
        }
    });
    Grid out(w, h);
    parallel_for(h, [&](std::size_t y) {
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            if (x + 1 < w) s += flux_x[y * (w - 1) + x];
            if (x > 0) s -= flux_x[y * (w - 1) + x - 1];
            if (y + 1 < h) s += flux_y[y * w + x];
            if (y > 0) s -= flux_y[(y - 1) * w + x];
            out(x, y) = s;
        }
    });
    return out;
}

}  // namespace despeckle::detail
