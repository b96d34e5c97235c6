#include "despeckle/flow_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "despeckle/errors.hpp"
#include "despeckle/summation.hpp"
#include "local_stencil.hpp"
#include "parallel.hpp"

namespace despeckle {
namespace {

bool uses_graph(SolverMode mode) {
    return mode == SolverMode::coupled || mode == SolverMode::nltv_only ||
           mode == SolverMode::symmetric_conservative;
}

// Effective trade-off that the step of each mode descends.
double energy_lambda(const SolverConfig& cfg) {
    switch (cfg.mode) {
        case SolverMode::tv_only: return 0.0;
        case SolverMode::nltv_only: return 1.0;
        default: return cfg.lambda;
    }
}

double l2_distance(const Grid& a, const Grid& b) {
    CompensatedSum s;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s.value());
}

void check_inputs(const Grid& u, const WeightGraph& graph, const IndicatorField& g, const SolverConfig& cfg) {
    if (cfg.mode == SolverMode::aa_baseline) return;
    require_same_shape(u, g.g, "indicator");
    if (uses_graph(cfg.mode) && (graph.width() != u.width() || graph.height() != u.height())) {
        throw InvalidArgument("weight graph dimensions do not match the image");
    }
}

}  // namespace

std::string_view to_string(SolverMode mode) {
    switch (mode) {
        case SolverMode::coupled: return "coupled";
        case SolverMode::tv_only: return "tv_only";
        case SolverMode::nltv_only: return "nltv_only";
        case SolverMode::symmetric_conservative: return "symmetric_conservative";
        case SolverMode::aa_baseline: return "aa_baseline";
    }
    return "unknown";
}

SolverMode parse_solver_mode(std::string_view name) {
    for (SolverMode m : {SolverMode::coupled, SolverMode::tv_only, SolverMode::nltv_only,
                         SolverMode::symmetric_conservative, SolverMode::aa_baseline}) {
        if (name == to_string(m)) return m;
    }
    throw InvalidArgument("unknown solver mode '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("tau must be positive");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("eps must be positive");
    if (max_iters < 0) throw InvalidArgument("max_iters must be nonnegative");
    if (!(stop_tol >= 0.0)) throw InvalidArgument("stop_tol must be nonnegative");
    if (mode == SolverMode::aa_baseline && !(aa_fidelity > 0.0)) {
        throw InvalidArgument("aa_fidelity must be positive");
    }
    if (refresh_every < 0) throw InvalidArgument("refresh_every must be nonnegative");
    if (refresh_every > 0 && !refresh_patch) {
        throw InvalidArgument("graph refresh needs a patch configuration");
    }
}

void DiagnosticsTrace::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "iter,energy,mean,min,max,step_l2\n";
    auto row = [&](const DiagnosticsRecord& r) {
        out << r.iteration << ',' << r.energy << ',' << r.mean << ',' << r.min << ',' << r.max << ','
            << r.step_l2 << '\n';
    };
    row(initial);
    for (const auto& r : records) row(r);
    if (!out) throw IoError("write failed for " + path.string());
}

Grid local_tv_flux(const Grid& u, const IndicatorField& g, double eps) {
    require_same_shape(u, g.g, "local TV flux");
    return detail::midpoint_flux(u, g.g, eps, [](double s) { return 1.0 / std::sqrt(s); });
}

Grid symmetric_nonlocal_flux(const Grid& u, const SymmetricGraph& graph, const IndicatorField& g,
                             double eps) {
    if (u.width() != graph.width() || u.height() != graph.height()) {
        throw InvalidArgument("symmetric flux: graph dimensions do not match the image");
    }
    require_same_shape(u, g.g, "symmetric flux indicator");
    Grid out(u.width(), u.height());
    for (const Edge& e : graph.edges()) {
        const double d = u[e.q] - u[e.p];
        const double m = 0.5 * (g[e.p] + g[e.q]) * e.weight * d / std::sqrt(d * d + eps);
        out[e.p] += m;
        out[e.q] -= m;
    }
    return out;
}

Grid symmetric_nonlocal_flux(const Grid& u, const WeightGraph& graph, const IndicatorField& g,
                             double eps) {
    return symmetric_nonlocal_flux(u, SymmetricGraph::from(graph), g, eps);
}

Grid step(const Grid& u, const WeightGraph& graph, const SymmetricGraph& sym, const IndicatorField& g,
          const SolverConfig& cfg) {
    check_inputs(u, graph, g, cfg);
    Grid out = u;
    switch (cfg.mode) {
        case SolverMode::tv_only: {
            const Grid local = local_tv_flux(u, g, cfg.eps);
            for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + cfg.tau * local[i];
            break;
        }
        case SolverMode::nltv_only: {
            const Grid nonlocal = nonlocal_flux(u, graph, g, cfg.eps);
            for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + cfg.tau * nonlocal[i];
            break;
        }
        case SolverMode::coupled:
        case SolverMode::symmetric_conservative: {
            const Grid local = local_tv_flux(u, g, cfg.eps);
            const Grid nonlocal = cfg.mode == SolverMode::coupled
                                      ? nonlocal_flux(u, graph, g, cfg.eps)
                                      : symmetric_nonlocal_flux(u, sym, g, cfg.eps);
            for (std::size_t i = 0; i < u.size(); ++i) {
                out[i] = u[i] + cfg.tau * ((1.0 - cfg.lambda) * local[i] + cfg.lambda * nonlocal[i]);
            }
            break;
        }
        case SolverMode::aa_baseline:
            throw InvalidArgument("aa_baseline steps need the noisy image; use aa_step");
    }
    return out;
}

Grid step(const Grid& u, const WeightGraph& graph, const IndicatorField& g, const SolverConfig& cfg) {
    if (cfg.mode == SolverMode::symmetric_conservative) {
        return step(u, graph, SymmetricGraph::from(graph), g, cfg);
    }
    return step(u, graph, SymmetricGraph{}, g, cfg);
}

Grid aa_step(const Grid& u, const Grid& f, const SolverConfig& cfg) {
    require_same_shape(u, f, "AA step");
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] > 0.0)) {
            throw NumericalFailure("AA step requires a strictly positive iterate (pixel " +
                                       std::to_string(i) + ")",
                                   -1);
        }
    }
    const IndicatorField zero = IndicatorField::constant(u.width(), u.height(), 0.0);
    const Grid local = local_tv_flux(u, zero, cfg.eps);
    Grid out(u.width(), u.height());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double fidelity = cfg.aa_fidelity * (f[i] - u[i]) / (u[i] * u[i] + cfg.eps);
        out[i] = std::max(u[i] + cfg.tau * (local[i] + fidelity), kAaFloor);
    }
    return out;
}

namespace {

double local_energy(const Grid& u, const Grid& g, double eps) {
    const std::size_t w = u.width();
    const std::size_t h = u.height();
    CompensatedSum s;
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t yn = std::min(y + 1, h - 1);
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t xn = std::min(x + 1, w - 1);
            const double dx = u(xn, y) - u(x, y);
            const double dy = u(x, yn) - u(x, y);
            const double g_mid = (2.0 * g(x, y) + g(xn, y) + g(x, yn)) / 4.0;
            s += (1.0 - g_mid) * std::sqrt(dx * dx + dy * dy + eps);
        }
    }
    return s.value();
}

double pair_energy(const Grid& u, const SymmetricGraph& graph, const Grid& g, double eps) {
    CompensatedSum s;
    for (const Edge& e : graph.edges()) {
        const double d = u[e.q] - u[e.p];
        s += 0.5 * (g[e.p] + g[e.q]) * e.weight * std::sqrt(d * d + eps);
    }
    return s.value();
}

}  // namespace

double discrete_energy(const Grid& u, const SymmetricGraph& graph, const IndicatorField& g,
                       double lambda, double eps) {
    require_same_shape(u, g.g, "energy indicator");
    double e = 0.0;
    if (lambda < 1.0) e += (1.0 - lambda) * local_energy(u, g.g, eps);
    if (lambda > 0.0) {
        if (u.width() != graph.width() || u.height() != graph.height()) {
            throw InvalidArgument("energy: graph dimensions do not match the image");
        }
        // Each unordered edge appears twice among the ordered pairs, cancelling the 1/2.
        e += lambda * pair_energy(u, graph, g.g, eps);
    }
    return e;
}

double discrete_energy(const Grid& u, const WeightGraph& graph, const IndicatorField& g,
                       double lambda, double eps) {
    return discrete_energy(u, lambda > 0.0 ? SymmetricGraph::from(graph) : SymmetricGraph{}, g, lambda, eps);
}

double aa_energy(const Grid& u, const Grid& f, const SolverConfig& cfg) {
    const Grid zero(u.width(), u.height(), 0.0);
    CompensatedSum fid;
    for (std::size_t i = 0; i < u.size(); ++i) fid += std::log(u[i]) + f[i] / u[i];
    return local_energy(u, zero, cfg.eps) + cfg.aa_fidelity * fid.value();
}

RunResult run(const Grid& f, const WeightGraph& graph, const IndicatorField& g, const SolverConfig& cfg) {
    cfg.validate();
    check_inputs(f, graph, g, cfg);
    const bool aa = cfg.mode == SolverMode::aa_baseline;

    WeightGraph refreshed;
    const WeightGraph* active = &graph;
    SymmetricGraph sym;
    auto rebuild_symmetric = [&] {
        if (cfg.mode == SolverMode::symmetric_conservative || cfg.record_diagnostics) {
            sym = uses_graph(cfg.mode) ? SymmetricGraph::from(*active) : SymmetricGraph{};
        }
    };
    rebuild_symmetric();

    auto energy = [&](const Grid& u) {
        if (aa) return aa_energy(u, f, cfg);
        return discrete_energy(u, sym, g, energy_lambda(cfg), cfg.eps);
    };
    auto record = [&](long iter, const Grid& u, double step_l2) {
        const GridStats s = grid_stats(u);
        return DiagnosticsRecord{iter, energy(u), s.mean, s.min, s.max, step_l2};
    };

    RunResult result;
    result.u = f;
    if (aa) {
        for (double& v : result.u.values()) v = std::max(v, kAaFloor);
    }
    if (cfg.record_diagnostics) result.trace.initial = record(0, result.u, 0.0);

    for (long n = 1; n <= cfg.max_iters; ++n) {
        if (cfg.refresh_every > 0 && n > 1 && (n - 1) % cfg.refresh_every == 0 && uses_graph(cfg.mode)) {
            refreshed = build_weight_graph(result.u, *cfg.refresh_patch);
            active = &refreshed;
            rebuild_symmetric();
        }
        Grid next = aa ? aa_step(result.u, f, cfg) : step(result.u, *active, sym, g, cfg);
        if (!next.all_finite()) {
            throw NumericalFailure("non-finite value at iteration " + std::to_string(n), n);
        }
        const double step_l2 = l2_distance(next, result.u);
        const double norm = grid_stats(result.u).l2_norm;
        result.u = std::move(next);
        result.iterations = n;
        if (cfg.record_diagnostics) result.trace.records.push_back(record(n, result.u, step_l2));
        if (cfg.stop_tol > 0.0 && step_l2 < cfg.stop_tol * (norm > 0.0 ? norm : 1.0)) break;
    }
    return result;
}

}  // namespace despeckle
