#include "despeckle/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "despeckle/errors.hpp"
#include "despeckle/summation.hpp"

namespace despeckle {

double psnr(const Grid& reference, const Grid& test, double peak) {
    require_same_shape(reference, test, "psnr");
    if (!(peak > 0.0)) throw InvalidArgument("psnr peak must be positive");
    if (reference.empty()) throw InvalidArgument("psnr of empty images");
    CompensatedSum sq;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = reference[i] - test[i];
        sq += d * d;
    }
    const double mse = sq.value() / static_cast<double>(reference.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Grid& a, const Grid& b, const SsimConfig& cfg) {
    require_same_shape(a, b, "ssim");
    const std::size_t n = static_cast<std::size_t>(cfg.window);
    if (cfg.window < 1 || a.width() < n || a.height() < n) {
        throw InvalidArgument("ssim needs images at least as large as the window");
    }
    std::vector<double> win(n * n);
    {
        const double c = (static_cast<double>(n) - 1.0) / 2.0;
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                const double dx = static_cast<double>(i) - c;
                const double dy = static_cast<double>(j) - c;
                const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * cfg.window_sigma * cfg.window_sigma));
                win[j * n + i] = v;
                total += v;
            }
        }
        for (double& v : win) v /= total;
    }
    const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
    const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);

    // Products are formed symmetrically (w * (x * y)) so ssim(a, b) == ssim(b, a) exactly.
    CompensatedSum total;
    std::size_t count = 0;
    for (std::size_t y0 = 0; y0 + n <= a.height(); ++y0) {
        for (std::size_t x0 = 0; x0 + n <= a.width(); ++x0) {
            // Centred second pass: constant windows give exactly zero variance.
            double mu_a = 0.0, mu_b = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double w = win[j * n + i];
                    mu_a += w * a(x0 + i, y0 + j);
                    mu_b += w * b(x0 + i, y0 + j);
                }
            }
            double var_a = 0.0, var_b = 0.0, cov = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double w = win[j * n + i];
                    const double da = a(x0 + i, y0 + j) - mu_a;
                    const double db = b(x0 + i, y0 + j) - mu_b;
                    var_a += w * (da * da);
                    var_b += w * (db * db);
                    cov += w * (da * db);
                }
            }
            const double num = (2.0 * (mu_a * mu_b) + c1) * (2.0 * cov + c2);
            const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            ++count;
        }
    }
    return total.value() / static_cast<double>(count);
}

}  // namespace despeckle
