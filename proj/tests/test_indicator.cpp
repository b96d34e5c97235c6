#include <doctest.h>

#include <cmath>

#include "despeckle/errors.hpp"
#include "despeckle/indicator.hpp"
#include "oracles.hpp"

using namespace despeckle;

namespace {

IndicatorParams params(double sigma, double beta, double lambda, bool clamp) {
    IndicatorParams p;
    p.sigma = sigma;
    p.beta = beta;
    p.lambda = lambda;
    p.clamp = clamp;
    return p;
}

}  // namespace

TEST_CASE("constant and beta-zero examples") {
    const Grid f(9, 7, 42.0);
    const IndicatorField a = grayscale_indicator(f, params(2.0, 1.0, 0.9, false));
    const IndicatorField b = grayscale_indicator(f, params(2.0, 1.0, 0.5, false));
    const IndicatorField c = grayscale_indicator(f, params(2.0, 1.0, 0.3, false));
    for (double v : a.g.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    for (double v : b.g.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    for (double v : c.g.values()) CHECK(std::abs(v) < 1e-14);
    const IndicatorField d = grayscale_indicator(oracle::random_grid(9, 7, 1), params(1.0, 0.0, 0.6, false));
    for (double v : d.g.values()) CHECK(v == 1.0);
}

TEST_CASE("indicator formula") {
    const Grid f = oracle::random_grid(15, 12, 4, 0.0, 255.0);
    const Grid blurred = oracle::blur(f, 2.0);
    const double peak = grid_stats(blurred).max;
    const IndicatorField hi = grayscale_indicator(f, params(2.0, 2.0, 0.9, false));
    const IndicatorField lo = grayscale_indicator(f, params(2.0, 2.0, 0.1, false));
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double t = std::pow(blurred[i] / peak, 2.0);
        CHECK(hi.g[i] == doctest::Approx(t).epsilon(1e-10));
        CHECK(lo.g[i] == doctest::Approx(1.0 - t).epsilon(1e-10));
    }
    CHECK(hi.params.beta == 2.0);
    CHECK_FALSE(hi.masked);
}

TEST_CASE("clamping bounds") {
    for (std::uint32_t seed = 1; seed <= 5; ++seed) {
        const Grid f = oracle::random_grid(20, 16, seed, 0.0, 255.0);
        for (double lambda : {0.0, 0.49, 0.5, 1.0}) {
            const IndicatorField g = grayscale_indicator(f, params(1.0, 3.0, lambda, true));
            for (double v : g.g.values()) {
                CHECK(v >= 1e-3);
                CHECK(v <= 1.0 - 1e-3);
            }
            const IndicatorField raw = grayscale_indicator(f, params(1.0, 3.0, lambda, false));
            for (double v : raw.g.values()) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
    }
    IndicatorParams bad = params(1.0, 1.0, 0.9, true);
    bad.g_min = 0.0;
    CHECK_THROWS_AS(grayscale_indicator(Grid(5, 5, 1.0), bad), InvalidArgument);
}

TEST_CASE("monotone in the smoothed intensity") {
    const Grid f = oracle::random_grid(24, 18, 9, 0.0, 255.0);
    const Grid fs = gaussian_blur(f, 1.5);
    const Grid up = grayscale_indicator(f, params(1.5, 1.7, 0.7, true)).g;
    const Grid down = grayscale_indicator(f, params(1.5, 1.7, 0.2, true)).g;
    for (std::size_t p = 0; p < f.size(); p += 7) {
        for (std::size_t q = 0; q < f.size(); q += 5) {
            if (fs[p] >= fs[q]) {
                CHECK(up[p] >= up[q]);
                CHECK(down[p] <= down[q]);
            }
        }
    }
}

TEST_CASE("scale invariance of the normalised intensity") {
    const Grid f = oracle::random_grid(17, 13, 2, 1.0, 255.0);
    const Grid base = normalized_intensity(f, 2.0, 1.5);
    for (double c : {0.25, 2.0, 1024.0}) {
        Grid cf = f;
        for (double& v : cf.values()) v *= c;
        CHECK(normalized_intensity(cf, 2.0, 1.5) == base);
    }
    // Other factors round once per multiply and divide.
    Grid cf = f;
    for (double& v : cf.values()) v *= 3.7;
    CHECK(oracle::max_abs_diff(normalized_intensity(cf, 2.0, 1.5), base) < 1e-14);
}

TEST_CASE("texture mask") {
    Grid levels(12, 10, 0.0);
    for (std::size_t y = 0; y < 10; ++y)
        for (std::size_t x = 6; x < 12; ++x) levels(x, y) = 255.0;
    levels(0, 0) = 128.0;
    levels(1, 0) = 127.0;
    const TextureMask m = TextureMask::from_levels(levels);
    CHECK(m.sigma1 == 0.5);
    CHECK(m.chi(0, 0) == TextureMask::kTexture);
    CHECK(m.chi(1, 0) == TextureMask::kBackground);
    CHECK(m.chi(8, 5) == TextureMask::kTexture);

    const Grid f(12, 10, 100.0);
    const Grid chi = gaussian_blur(m.chi, 0.5);
    const IndicatorField g = grayscale_indicator(f, params(1.0, 1.0, 0.9, false), m);
    CHECK(g.masked);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(g.g[i] == doctest::Approx(chi[i]).epsilon(1e-13));
    const IndicatorField h = grayscale_indicator(f, params(1.0, 1.0, 0.1, false), m);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(h.g[i] == doctest::Approx(1.0 - chi[i]).epsilon(1e-13));

    CHECK_THROWS_AS(grayscale_indicator(Grid(5, 5, 1.0), params(1.0, 1.0, 0.9, false), m), InvalidArgument);
}

TEST_CASE("degenerate and invalid input") {
    CHECK_THROWS_AS(grayscale_indicator(Grid(6, 6, 0.0), params(1.0, 1.0, 0.9, true)), DegenerateInput);
    CHECK_THROWS_AS(grayscale_indicator(Grid(6, 6, 1.0), params(1.0, -1.0, 0.9, true)), InvalidArgument);
    CHECK_THROWS_AS(grayscale_indicator(Grid(6, 6, 1.0), params(-1.0, 1.0, 0.9, true)), InvalidArgument);
}

TEST_CASE("constant field") {
    const IndicatorField c = IndicatorField::constant(4, 3, 0.25);
    CHECK(c.width() == 4);
    CHECK(c.height() == 3);
    CHECK(c[11] == 0.25);
}
