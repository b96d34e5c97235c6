#include <doctest.h>

#include <cmath>

#include "despeckle/errors.hpp"
#include "despeckle/flow_solver.hpp"
#include "despeckle/indicator.hpp"
#include "despeckle/noise.hpp"
#include "despeckle/p_flow.hpp"
#include "despeckle/synthetic.hpp"
#include "oracles.hpp"

using namespace despeckle;

namespace {

PFlowConfig pcfg(double p, double lambda, double tau, double eps) {
    PFlowConfig c;
    c.p = p;
    c.lambda = lambda;
    c.tau = tau;
    c.eps = eps;
    return c;
}

IndicatorField random_g(std::size_t w, std::size_t h, std::uint32_t seed) {
    return IndicatorField{oracle::random_grid(w, h, seed, 0.001, 0.999), {}, false};
}

}  // namespace

TEST_CASE("configuration") {
    CHECK_NOTHROW(PFlowConfig{}.validate());
    CHECK_THROWS_AS(pcfg(1.0, 0.5, 0.01, 1e-5).validate(), InvalidArgument);
    CHECK_THROWS_AS(pcfg(0.5, 0.5, 0.01, 1e-5).validate(), InvalidArgument);
    CHECK_THROWS_AS(pcfg(1.5, 0.5, 0.01, 0.0).validate(), InvalidArgument);
    CHECK_NOTHROW(pcfg(2.0, 0.5, 0.01, 0.0).validate());
    CHECK_THROWS_AS(pcfg(1.5, 1.5, 0.01, 1e-5).validate(), InvalidArgument);
    const Grid u(8, 8, 1.0);
    CHECK_THROWS_AS(p_step(u, IndicatorField::constant(8, 8, 0.5), pcfg(1.0, 0.5, 0.01, 1e-5)), InvalidArgument);
}

TEST_CASE("constant grids are fixed points") {
    const Grid u(10, 10, 42.0);
    const IndicatorField g = random_g(10, 10, 1);
    for (double p : {1.05, 1.5, 2.0, 3.0}) {
        for (double lambda : {0.0, 0.5, 1.0}) CHECK(p_step(u, g, pcfg(p, lambda, 0.05, 1e-5)) == u);
    }
}

TEST_CASE("p = 2 reduces to a weighted Laplacian") {
    SUBCASE("spike") {
        Grid u(5, 5, 0.0);
        u(2, 2) = 1.0;
        const Grid l = p_local_flux(u, IndicatorField::constant(5, 5, 0.5), 2.0, 0.0);
        CHECK(l(2, 2) == -2.0);
        CHECK(l(1, 2) == 0.5);
        CHECK(l(2, 3) == 0.5);
        CHECK(l(1, 1) == 0.0);
    }
    SUBCASE("random inputs against the oracle step") {
        for (std::uint32_t seed = 1; seed <= 5; ++seed) {
            const Grid u = oracle::random_grid(8, 8, seed);
            const IndicatorField g = random_g(8, 8, seed + 100);
            const Grid got = p_step(u, g, pcfg(2.0, 0.0, 0.05, 0.0));
            const Grid ref = oracle::weighted_laplacian_step(u, g.g, 0.05);
            CHECK(oracle::max_abs_diff(got, ref) < 1e-12);
        }
    }
}

TEST_CASE("p near 1 matches the TV schemes") {
    const Grid u = oracle::random_grid(16, 16, 11);
    const IndicatorField g = random_g(16, 16, 12);
    SolverConfig tv;
    tv.mode = SolverMode::tv_only;
    tv.lambda = 0.0;
    tv.tau = 0.05;
    const Grid a = p_step(u, g, pcfg(1.0 + 1e-9, 0.0, 0.05, 1e-5));
    const Grid b = step(u, WeightGraph{}, g, tv);
    CHECK(oracle::max_abs_diff(a, b) < 1e-5);

    const KernelSpec k = make_kernel(KernelProfile::truncated_gaussian, 2);
    PFlowConfig c = pcfg(1.0 + 1e-9, 0.4, 0.05, 1e-5);
    c.kernel = k;
    CHECK(oracle::max_abs_diff(p_step(u, g, c), kernel_coupled_step(u, g, k, 0.4, 0.05, 1e-5)) < 1e-5);
}

TEST_CASE("patch-graph nonlocal term") {
    const Grid u = oracle::random_grid(12, 12, 21);
    const IndicatorField g = random_g(12, 12, 22);
    const KernelSpec k = make_kernel(KernelProfile::box, 2);
    const SymmetricGraph edges = kernel_edges(12, 12, k);
    for (double p : {1.3, 2.0}) {
        const Grid a = p_nonlocal_flux(u, g, k, p, 1e-5);
        const Grid b = p_nonlocal_flux(u, g, edges, p, 1e-5);
        CHECK(oracle::max_abs_diff(a, b) < 1e-11 * (1.0 + oracle::max_abs(a)));
        PFlowConfig c = pcfg(p, 0.6, 0.01, 1e-5);
        c.kernel = k;
        CHECK(oracle::max_abs_diff(p_step(u, g, c), p_step(u, g, c, edges)) < 1e-11 * (1.0 + oracle::max_abs(u)));
        CHECK(nonlocal_p_energy(u, g, k, p) == doctest::Approx(nonlocal_p_energy(u, g, edges, p)).epsilon(1e-12));
    }
}

TEST_CASE("nonlocal p-energy") {
    const SymmetricGraph pair(2, 1, {Edge{0, 1, 1.0}});
    const Grid toy(2, 1, std::vector<double>{0.0, 2.0});
    CHECK(nonlocal_p_energy(toy, IndicatorField::constant(2, 1, 1.0), pair, 2.0) == 4.0);
    CHECK(nonlocal_p_energy(Grid(2, 1, 3.0), IndicatorField::constant(2, 1, 1.0), pair, 1.5) == 0.0);
    CHECK_THROWS_AS(nonlocal_p_energy(toy, IndicatorField::constant(2, 1, 1.0), pair, 0.9), InvalidArgument);

    const Grid u = oracle::random_grid(14, 12, 31);
    const IndicatorField g = random_g(14, 12, 32);
    const KernelSpec k = make_kernel(KernelProfile::truncated_gaussian, 3);
    const SymmetricGraph edges = kernel_edges(14, 12, k);
    CHECK(nonlocal_p_energy(u, g, k, 1.0) == doctest::Approx(discrete_energy(u, edges, g, 1.0, 1e-300)).epsilon(1e-13));
}

TEST_CASE("L2 norm dissipation") {
    const KernelSpec k = make_kernel(KernelProfile::truncated_gaussian, 2);
    for (const synthetic::CorpusImage& img : synthetic::corpus()) {
        for (bool speckled : {false, true}) {
            const Grid f = speckled ? gamma_speckle(img.image, GammaNoiseSpec{10, 7}) : img.image;
            IndicatorParams ip;
            ip.lambda = 0.5;
            const IndicatorField g = grayscale_indicator(f, ip);
            for (double p : {1.05, 1.5, 2.0}) {
                CAPTURE(img.name);
                CAPTURE(speckled);
                CAPTURE(p);
                PFlowConfig c = pcfg(p, 0.5, 0.05, 1e-5);
                c.kernel = k;
                Grid u = f;
                double prev = grid_stats(u).l2_norm;
                long violations = 0;
                for (int n = 0; n < 40; ++n) {
                    u = p_step(u, g, c);
                    const double cur = grid_stats(u).l2_norm;
                    if (cur > prev * (1.0 + 1e-12)) ++violations;
                    prev = cur;
                }
                CHECK(violations == 0);
            }
        }
    }
}

TEST_CASE("p-limit study") {
    PFlowConfig shared = pcfg(1.5, 0.5, 0.01, 1e-5);
    shared.kernel = make_kernel(KernelProfile::truncated_gaussian, 2);
    SUBCASE("constant input has zero energies") {
        const PLimitResult r = p_limit_study(Grid(16, 16, 9.0), IndicatorField::constant(16, 16, 0.5), {2.0, 1.5}, 0.1, shared);
        REQUIRE(r.rows.size() == 2);
        CHECK(r.tv_energy == 0.0);
        CHECK(r.iterations == 10);
        for (const PLimitRow& row : r.rows) {
            CHECK(row.energy == 0.0);
            CHECK(row.abs_diff == 0.0);
            CHECK(row.iterations == 10);
        }
    }
    SUBCASE("rows follow the exponent list") {
        const Grid f = synthetic::radial_bump(16, 16);
        const PLimitResult r = p_limit_study(f, IndicatorField::constant(16, 16, 0.5), {2.0, 1.2}, 0.1, shared);
        REQUIRE(r.rows.size() == 2);
        CHECK(r.rows[0].p == 2.0);
        CHECK(r.rows[1].p == 1.2);
        CHECK(r.tv_energy > 0.0);
        for (const PLimitRow& row : r.rows) CHECK(row.abs_diff == doctest::Approx(std::abs(row.energy - r.tv_energy)).epsilon(1e-15));
    }
    SUBCASE("invalid lists") {
        const Grid f(16, 16, 1.0);
        CHECK_THROWS_AS(p_limit_study(f, IndicatorField::constant(16, 16, 0.5), {}, 0.1, shared), InvalidArgument);
        CHECK_THROWS_AS(p_limit_study(f, IndicatorField::constant(16, 16, 0.5), {1.5, 2.0}, 0.1, shared), InvalidArgument);
        CHECK_THROWS_AS(p_limit_study(f, IndicatorField::constant(16, 16, 0.5), {2.0, 1.0}, 0.1, shared), InvalidArgument);
        CHECK_THROWS_AS(p_limit_study(f, IndicatorField::constant(16, 16, 0.5), {2.0}, 0.105, shared), InvalidArgument);
    }
}
