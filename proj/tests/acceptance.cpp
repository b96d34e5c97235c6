// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cli.hpp"
#include "despeckle/errors.hpp"
#include "despeckle/flow_solver.hpp"
#include "despeckle/indicator.hpp"
#include "despeckle/kernel_flow.hpp"
#include "despeckle/metrics.hpp"
#include "despeckle/nl_graph.hpp"
#include "despeckle/noise.hpp"
#include "despeckle/p_flow.hpp"
#include "despeckle/summation.hpp"
#include "despeckle/synthetic.hpp"
#include "oracles.hpp"

using namespace despeckle;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, const std::function<Verdict()>& body) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("%s %2d %s [%.2fs] %s\n", v.pass ? "PASS" : "FAIL", id, title, s, v.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const SolverMode kFlowModes[] = {SolverMode::coupled, SolverMode::tv_only, SolverMode::nltv_only,
                                 SolverMode::symmetric_conservative};

PatchConfig patch_for(const Grid& f) {
    PatchConfig pc;
    pc.filter_scale_h = default_filter_scale(f);
    return pc;
}

IndicatorField grayscale(const Grid& f, double lambda) {
    IndicatorParams ip;
    ip.lambda = lambda;
    return grayscale_indicator(f, ip);
}

Verdict fixed_points() {
    const auto t0 = Clock::now();
    const Grid f(64, 64, 123.0);
    const WeightGraph graph = build_weight_graph(f, patch_for(f));
    const IndicatorField g = grayscale(f, 0.5);
    double worst = 0.0;
    for (SolverMode m : {SolverMode::coupled, SolverMode::tv_only, SolverMode::nltv_only,
                         SolverMode::symmetric_conservative, SolverMode::aa_baseline}) {
        SolverConfig c;
        c.mode = m;
        c.lambda = 0.5;
        c.max_iters = 100;
        c.record_diagnostics = false;
        worst = std::max(worst, oracle::max_abs_diff(run(f, graph, g, c).u, f));
    }
    const double s = seconds(t0);
    return {worst == 0.0 && s < 1.0, fmt("max|du|=%g", worst) + fmt(" runtime=%.3fs (limit 1s)", s)};
}

Verdict mode_equivalence() {
    long mismatches = 0;
    for (std::uint32_t seed = 1; seed <= 10; ++seed) {
        const Grid f = oracle::random_grid(32, 32, seed);
        const WeightGraph graph = build_weight_graph(f, patch_for(f));
        const IndicatorField g = grayscale(f, 0.5);
        for (double lambda : {0.0, 1.0}) {
            SolverConfig a;
            a.lambda = lambda;
            a.mode = SolverMode::coupled;
            SolverConfig b = a;
            b.mode = lambda == 0.0 ? SolverMode::tv_only : SolverMode::nltv_only;
            Grid u = f;
            for (int n = 0; n < 10; ++n) {
                const Grid ua = step(u, graph, g, a);
                if (!(ua == step(u, graph, g, b))) ++mismatches;
                u = ua;
            }
        }
    }
    return {mismatches == 0, "mismatching steps=" + std::to_string(mismatches) + " of 200"};
}

struct PropRuns {
    double drift = 0.0;
    double below = 0.0;  // worst excursion below min f
    double above = 0.0;
};

const PropRuns& conservative_runs() {
    static const PropRuns runs = [] {
        PropRuns r;
        for (std::uint32_t seed = 101; seed <= 105; ++seed) {
            const Grid f = oracle::random_grid(64, 64, seed);
            const WeightGraph graph = build_weight_graph(f, patch_for(f));
            const IndicatorField g = grayscale(f, 0.5);
            SolverConfig c;
            c.mode = SolverMode::symmetric_conservative;
            c.lambda = 0.5;
            c.tau = 0.05;
            c.max_iters = 1000;
            const RunResult res = run(f, graph, g, c);
            const GridStats s = grid_stats(f);
            for (const DiagnosticsRecord& rec : res.trace.records) {
                r.drift = std::max(r.drift, std::abs(rec.mean - s.mean) / std::abs(s.mean));
                r.below = std::max(r.below, s.min - rec.min);
                r.above = std::max(r.above, rec.max - s.max);
            }
        }
        return r;
    }();
    return runs;
}

Verdict conservation() {
    const PropRuns& r = conservative_runs();
    return {r.drift < 1e-10, fmt("max relative mean drift=%.3g (limit 1e-10)", r.drift)};
}

Verdict boundedness() {
    const PropRuns& r = conservative_runs();
    return {r.below <= 1e-6 && r.above <= 1e-6,
            fmt("max undershoot=%.3g", r.below) + fmt(" overshoot=%.3g (limit 1e-6)", r.above)};
}

Verdict dissipation() {
    long violations = 0;
    std::string worst_where;
    double worst = 0.0;
    long runs = 0;
    long per_mode[4] = {0, 0, 0, 0};
    for (const synthetic::CorpusImage& img : synthetic::corpus()) {
        for (bool speckled : {false, true}) {
            const Grid f = speckled ? gamma_speckle(img.image, GammaNoiseSpec{10, 7}) : img.image;
            const WeightGraph graph = build_weight_graph(f, patch_for(f));
            const IndicatorField g = grayscale(f, 0.5);
            for (int mi = 0; mi < 4; ++mi) {
                const SolverMode m = kFlowModes[mi];
                SolverConfig c;
                c.mode = m;
                c.lambda = 0.5;
                c.tau = 0.05;
                c.max_iters = 500;
                std::string where = img.name + (speckled ? "+speckle/" : "/") + std::string(to_string(m));
                ++runs;
                RunResult res;
                try {
                    res = run(f, graph, g, c);
                } catch (const NumericalFailure& e) {
                    ++violations;
                    ++per_mode[mi];
                    worst = std::numeric_limits<double>::infinity();
                    worst_where = where + " (diverged at iteration " + std::to_string(e.iteration()) + ")";
                    continue;
                }
                double prev = res.trace.initial.energy;
                for (const DiagnosticsRecord& rec : res.trace.records) {
                    const double rel = (rec.energy - prev) / std::abs(prev);
                    if (rel > 1e-9) {
                        ++violations;
                        ++per_mode[mi];
                        if (rel > worst) {
                            worst = rel;
                            worst_where = where + " iteration " + std::to_string(rec.iteration);
                        }
                    }
                    prev = rec.energy;
                }
            }
        }
    }
    std::string detail = std::to_string(runs) + " runs, increasing steps=" + std::to_string(violations);
    for (int mi = 0; mi < 4; ++mi) detail += " " + std::string(to_string(kFlowModes[mi])) + "=" + std::to_string(per_mode[mi]);
    if (violations) detail += fmt(", worst relative increase=%.3g at ", worst) + worst_where;
    return {violations == 0, detail};
}

Verdict decay_to_mean() {
    const auto t0 = Clock::now();
    const Grid f = synthetic::radial_bump(32, 32);
    const WeightGraph graph = build_weight_graph(f, patch_for(f));
    SolverConfig c;
    c.mode = SolverMode::symmetric_conservative;
    c.lambda = 0.5;
    c.tau = 0.05;
    c.max_iters = 100000;
    c.record_diagnostics = false;
    const Grid u = run(f, graph, IndicatorField::constant(32, 32, 0.5), c).u;
    const double mean = grid_stats(f).mean;
    CompensatedSum du, df;
    for (std::size_t i = 0; i < f.size(); ++i) {
        du += (u[i] - mean) * (u[i] - mean);
        df += (f[i] - mean) * (f[i] - mean);
    }
    const double ratio = std::sqrt(du.value() / df.value());
    const double s = seconds(t0);
    return {ratio < 0.01 && s < 60.0, fmt("|u-mean|/|f-mean|=%.3g (limit 0.01)", ratio) + fmt(" runtime=%.1fs", s)};
}

Verdict rescaling() {
    const auto t0 = Clock::now();
    const Grid f = synthetic::radial_bump(64, 64);
    RescalingConfig cfg;
    cfg.radii = {8, 4, 2, 1};
    cfg.time = 2.0;
    const std::vector<RescalingRow> rows = rescaling_study(f, IndicatorField::constant(64, 64, 1.0), cfg);
    const double s = seconds(t0);
    bool decreasing = true;
    std::string detail = "D(r):";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        detail += " r=" + std::to_string(rows[i].radius) + fmt(" %.4g", rows[i].l1_distance);
        if (i > 0 && !(rows[i].l1_distance < rows[i - 1].l1_distance)) decreasing = false;
    }
    const double contraction = rows.back().l1_distance / rows.front().l1_distance;
    detail += fmt("; D(1)/D(8)=%.3g (limit 0.25)", contraction) + (decreasing ? "" : "; not decreasing");
    detail += fmt(" runtime=%.1fs", s);
    return {decreasing && contraction <= 0.25 && s < 120.0, detail};
}

Verdict p_limit() {
    const auto t0 = Clock::now();
    const Grid f = synthetic::radial_bump(64, 64);
    PFlowConfig shared;
    shared.lambda = 0.5;
    const PLimitResult r = p_limit_study(f, IndicatorField::constant(64, 64, 0.5), {2.0, 1.5, 1.2, 1.05}, 1.0, shared);
    const double s = seconds(t0);
    bool decreasing = true;
    std::string detail = fmt("E1=%.6g |Ep-E1|:", r.tv_energy);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        detail += fmt(" p=%.2f", r.rows[i].p) + fmt(" %.4g", r.rows[i].abs_diff);
        if (i > 0 && !(r.rows[i].abs_diff < r.rows[i - 1].abs_diff)) decreasing = false;
    }
    const double rel = r.rows.back().abs_diff / r.tv_energy;
    detail += fmt("; E_1.05 off by %.2f%% (limit 10%%)", 100.0 * rel) + fmt(" runtime=%.1fs", s);
    return {decreasing && rel <= 0.10 && s < 120.0, detail};
}

Verdict noise_statistics() {
    bool ok = true;
    std::string detail;
    const Grid ones(1000, 1000, 1.0);
    for (int looks : {4, 10}) {
        const Grid eta = gamma_speckle(ones, GammaNoiseSpec{looks, 2024});
        CompensatedSum s;
        for (double v : eta.values()) s += v;
        const double n = static_cast<double>(eta.size());
        const double mean = s.value() / n;
        CompensatedSum q;
        for (double v : eta.values()) q += (v - mean) * (v - mean);
        const double var = q.value() / (n - 1.0);
        const double mean_err = std::abs(mean - 1.0);
        const double var_err = std::abs(var * looks - 1.0);
        ok = ok && mean_err <= 0.01 && var_err <= 0.05;
        detail += "L=" + std::to_string(looks) + fmt(" mean=%.5f", mean) + fmt(" var*L=%.5f; ", var * looks);
    }
    return {ok, detail};
}

Verdict immerkaer() {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const double e = estimate_noise_h(gaussian_noise(Grid(256, 256, 128.0), 10.0, seed));
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    return {lo >= 8.5 && hi <= 11.5, fmt("estimates in [%.4f", lo) + fmt(", %.4f] (limits 8.5, 11.5)", hi)};
}

Verdict lambda_trend() {
    const synthetic::Hybrid hy = synthetic::hybrid(128, 128);
    cli::StudyLambdaConfig cfg;
    cfg.looks = 10;
    cfg.seed = 7;
    cfg.lambdas = {0.0, 1.0, 0.3};
    cfg.mask = TextureMask::from_levels(hy.texture_levels);
    const cli::StudyLambdaResult r = cli::study_lambda(hy.image, cfg);
    const double p0 = r.rows[0].psnr, p1 = r.rows[1].psnr, pc = r.rows[2].psnr;
    const bool ok = pc >= r.noisy_psnr + 2.0 && pc >= p0 && pc >= p1;
    return {ok, fmt("noisy=%.3f dB", r.noisy_psnr) + fmt(" lambda0=%.3f", p0) + fmt(" lambda1=%.3f", p1) +
                    fmt(" lambda0.3=%.3f", pc) + " iterations=" + std::to_string(r.rows[2].iterations)};
}

Verdict metric_oracles() {
    const Grid a = oracle::random_grid(32, 32, 1);
    Grid b = a;
    for (double& v : b.values()) v += 1.0;
    const double p = psnr(a, b);
    bool ok = std::abs(p - 48.1308) <= 1e-3 && ssim(a, a) == 1.0;
    int asym = 0;
    for (std::uint32_t seed = 0; seed < 10; ++seed) {
        const Grid x = oracle::random_grid(24, 20, 2 * seed + 10);
        const Grid y = oracle::random_grid(24, 20, 2 * seed + 11);
        if (ssim(x, y) != ssim(y, x)) ++asym;
    }
    ok = ok && asym == 0;
    return {ok, fmt("psnr=%.6f", p) + fmt(" ssim(a,a)=%.17g", ssim(a, a)) + " asymmetric pairs=" + std::to_string(asym)};
}

Verdict brute_force_graph() {
    PatchConfig pc;
    pc.search_radius = 3;
    pc.patch_edge = 3;
    pc.patch_sigma_a = 1.0;
    pc.k_neighbors = 3;
    pc.filter_scale_h = 40.0;
    double worst = 0.0;
    long index_mismatch = 0;
    for (std::uint32_t seed = 1; seed <= 100; ++seed) {
        const Grid f = oracle::random_grid(4, 4, seed);
        const Grid u = oracle::random_grid(4, 4, seed + 1000);
        const Grid gv = oracle::random_grid(4, 4, seed + 2000, 0.0, 1.0);
        const IndicatorField g{gv, {}, false};
        const WeightGraph graph = build_weight_graph(f, pc);
        const oracle::Lists lists = oracle::graph(f, 3, 3, 1.0, 3, 40.0);
        for (std::size_t p = 0; p < lists.size(); ++p) {
            const auto got = graph.neighbors(p);
            if (got.size() != lists[p].size()) {
                ++index_mismatch;
                continue;
            }
            for (std::size_t k = 0; k < got.size(); ++k)
                if (got[k].index != lists[p][k].q) ++index_mismatch;
        }
        const Grid ref = oracle::alpha_flux(u, lists, gv, 1e-5);
        const Grid flux = nonlocal_flux(u, graph, g, 1e-5);
        worst = std::max(worst, oracle::max_abs_diff(flux, ref) / std::max(1.0, oracle::max_abs(ref)));
    }
    return {worst <= 1e-12 && index_mismatch == 0,
            fmt("max scaled |flux-oracle|=%.3g (limit 1e-12)", worst) + " neighbour mismatches=" + std::to_string(index_mismatch)};
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    criterion(1, "fixed points of every mode", fixed_points);
    criterion(2, "mode equivalence", mode_equivalence);
    criterion(3, "mass conservation", conservation);
    criterion(4, "boundedness", boundedness);
    criterion(5, "energy dissipation", dissipation);
    criterion(6, "decay to the mean", decay_to_mean);
    criterion(7, "rescaling convergence", rescaling);
    criterion(8, "p -> 1 limit", p_limit);
    criterion(9, "speckle statistics", noise_statistics);
    criterion(10, "Immerkaer estimator", immerkaer);
    criterion(11, "lambda trend on the hybrid image", lambda_trend);
    criterion(12, "metric oracles", metric_oracles);
    criterion(13, "brute-force nonlocal flux", brute_force_graph);
    std::printf("%d of 13 criteria failed, total %.1fs\n", failures, seconds(t0));
    return failures == 0 ? 0 : 1;
}
