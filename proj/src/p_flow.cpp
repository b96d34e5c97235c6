#include "despeckle/p_flow.hpp"

#include <cmath>
#include <string>

#include "despeckle/errors.hpp"
#include "despeckle/summation.hpp"
#include "local_stencil.hpp"
#include "parallel.hpp"

namespace despeckle {
namespace {

void require_p(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("p must exceed 1");
}

}  // namespace

void PFlowConfig::validate() const {
    require_p(p);
    if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
    if (!(eps >= 0.0)) throw InvalidArgument("eps must be nonnegative");
    if (p < 2.0 && !(eps > 0.0)) throw InvalidArgument("p < 2 needs eps > 0");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
    if (max_iters < 0) throw InvalidArgument("max_iters must be nonnegative");
}

Grid p_local_flux(const Grid& u, const IndicatorField& g, double p, double eps) {
    require_same_shape(u, g.g, "p-flow indicator");
    const double e = (p - 2.0) / 2.0;
    return detail::midpoint_flux(u, g.g, eps, [e](double s) { return std::pow(s, e); });
}

Grid p_nonlocal_flux(const Grid& u, const IndicatorField& g, const KernelSpec& kernel, double p, double eps) {
    require_same_shape(u, g.g, "p-flow indicator");
    const long r = kernel.support_radius_px;
    if (2 * static_cast<std::size_t>(r) > std::min(u.width(), u.height())) {
        throw InvalidArgument("kernel radius exceeds half the image size");
    }
    const std::vector<KernelTap> taps = rescaled_taps(kernel);
    const double e = (p - 2.0) / 2.0;
    const long w = static_cast<long>(u.width());
    const long h = static_cast<long>(u.height());
    Grid out(u.width(), u.height());
    parallel_for(u.height(), [&](std::size_t yy) {
        const long y = static_cast<long>(yy);
        for (long x = 0; x < w; ++x) {
            const std::size_t pi = static_cast<std::size_t>(y * w + x);
            double s = 0.0;
            for (const KernelTap& t : taps) {
                const long qx = x + t.dx;
                const long qy = y + t.dy;
                if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                const std::size_t q = static_cast<std::size_t>(qy * w + qx);
                const double d = u[q] - u[pi];
                s += 0.5 * (g[pi] + g[q]) * t.weight * std::pow(d * d + eps, e) * d;
            }
            out[pi] = s;
        }
    });
    return out;
}

Grid p_nonlocal_flux(const Grid& u, const IndicatorField& g, const SymmetricGraph& graph, double p, double eps) {
    require_same_shape(u, g.g, "p-flow indicator");
    if (graph.width() != u.width() || graph.height() != u.height()) {
        throw InvalidArgument("p-flow graph dimensions do not match the image");
    }
    const double e = (p - 2.0) / 2.0;
    Grid out(u.width(), u.height());
    for (const Edge& edge : graph.edges()) {
        const double d = u[edge.q] - u[edge.p];
        const double m = 0.5 * (g[edge.p] + g[edge.q]) * edge.weight * std::pow(d * d + eps, e) * d;
        out[edge.p] += m;
        out[edge.q] -= m;
    }
    return out;
}

namespace {

Grid combine(const Grid& u, const Grid& local, const Grid& nonlocal, const PFlowConfig& cfg) {
    Grid out = u;
    for (std::size_t i = 0; i < u.size(); ++i) {
        out[i] = u[i] + cfg.tau * ((1.0 - cfg.lambda) * local[i] + cfg.lambda * nonlocal[i]);
    }
    return out;
}

}  // namespace

Grid p_step(const Grid& u, const IndicatorField& g, const PFlowConfig& cfg) {
    cfg.validate();
    const Grid zero(u.width(), u.height());
    const Grid local = cfg.lambda < 1.0 ? p_local_flux(u, g, cfg.p, cfg.eps) : zero;
    const Grid nonlocal = cfg.lambda > 0.0 ? p_nonlocal_flux(u, g, cfg.kernel, cfg.p, cfg.eps) : zero;
    return combine(u, local, nonlocal, cfg);
}

Grid p_step(const Grid& u, const IndicatorField& g, const PFlowConfig& cfg, const SymmetricGraph& graph) {
    cfg.validate();
    const Grid zero(u.width(), u.height());
    const Grid local = cfg.lambda < 1.0 ? p_local_flux(u, g, cfg.p, cfg.eps) : zero;
    const Grid nonlocal = cfg.lambda > 0.0 ? p_nonlocal_flux(u, g, graph, cfg.p, cfg.eps) : zero;
    return combine(u, local, nonlocal, cfg);
}

double nonlocal_p_energy(const Grid& u, const IndicatorField& g, const SymmetricGraph& graph, double p) {
    if (!(p >= 1.0)) throw InvalidArgument("p-energy needs p >= 1");
    require_same_shape(u, g.g, "p-energy indicator");
    if (graph.width() != u.width() || graph.height() != u.height()) {
        throw InvalidArgument("p-energy graph dimensions do not match the image");
    }
    // Unordered edges counted once equals half the ordered-pair sum.
    CompensatedSum s;
    for (const Edge& e : graph.edges()) {
        const double d = std::fabs(u[e.q] - u[e.p]);
        s += 0.5 * (g[e.p] + g[e.q]) * e.weight * (p == 1.0 ? d : std::pow(d, p));
    }
    return s.value();
}

double nonlocal_p_energy(const Grid& u, const IndicatorField& g, const KernelSpec& kernel, double p) {
    return nonlocal_p_energy(u, g, kernel_edges(u.width(), u.height(), kernel), p);
}

PLimitResult p_limit_study(const Grid& f, const IndicatorField& g, const std::vector<double>& ps, double time,
                           const PFlowConfig& shared) {
    if (ps.empty()) throw InvalidArgument("p-limit study needs at least one exponent");
    for (std::size_t i = 0; i < ps.size(); ++i) {
        require_p(ps[i]);
        if (i > 0 && !(ps[i] < ps[i - 1])) throw InvalidArgument("exponents must be strictly decreasing");
    }
    require_same_shape(f, g.g, "p-limit indicator");
    const long steps = integral_steps(time, shared.tau);
    const SymmetricGraph edges = kernel_edges(f.width(), f.height(), shared.kernel);

    auto integrate = [&](auto&& advance, double p) {
        Grid u = f;
        CompensatedSum area;
        double prev = nonlocal_p_energy(u, g, edges, p);
        for (long n = 0; n < steps; ++n) {
            u = advance(u);
            if (!u.all_finite()) throw NumericalFailure("non-finite p-flow iterate", n + 1);
            const double cur = nonlocal_p_energy(u, g, edges, p);
            area += 0.5 * shared.tau * (prev + cur);
            prev = cur;
        }
        return area.value();
    };

    PLimitResult result;
    result.iterations = steps;
    result.tv_energy = integrate(
        [&](const Grid& u) {
            return kernel_coupled_step(u, g, shared.kernel, shared.lambda, shared.tau, shared.eps);
        },
        1.0);
    for (double p : ps) {
        PFlowConfig cfg = shared;
        cfg.p = p;
        cfg.validate();
        const double e = integrate([&](const Grid& u) { return p_step(u, g, cfg); }, p);
        result.rows.push_back({p, steps, e, std::fabs(e - result.tv_energy)});
    }
    return result;
}

}  // namespace despeckle
