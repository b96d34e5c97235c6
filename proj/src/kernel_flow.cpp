#include "despeckle/kernel_flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "despeckle/errors.hpp"
#include "despeckle/flow_solver.hpp"
#include "despeckle/summation.hpp"
#include "parallel.hpp"

namespace despeckle {
namespace {

double raw_profile(KernelProfile profile, int radius, int dx, int dy) {
    const int r = radius;
    if (std::abs(dx) > r || std::abs(dy) > r) return 0.0;
    const double rho2 = static_cast<double>(dx * dx + dy * dy) / static_cast<double>(r * r);
    switch (profile) {
        case KernelProfile::box: return 1.0;
        case KernelProfile::triangle: return rho2 <= 1.0 ? std::max(0.0, 1.0 - std::sqrt(rho2)) : 0.0;
        case KernelProfile::truncated_gaussian:
            // sigma = r / 2 in pixels, i.e. 1/2 on the unit-scale support.
            return rho2 <= 1.0 ? std::exp(-2.0 * rho2) : 0.0;
    }
    return 0.0;
}

double raw_total(KernelProfile profile, int r) {
    double total = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) total += raw_profile(profile, r, dx, dy);
    }
    return total;
}

void check_radius(int r) {
    if (r < 1) throw InvalidArgument("kernel support radius must be positive");
}

}  // namespace

std::string_view to_string(KernelProfile profile) {
    switch (profile) {
        case KernelProfile::box: return "box";
        case KernelProfile::triangle: return "triangle";
        case KernelProfile::truncated_gaussian: return "truncated-gaussian";
    }
    return "unknown";
}

KernelProfile parse_kernel_profile(std::string_view name) {
    for (KernelProfile p : {KernelProfile::box, KernelProfile::triangle, KernelProfile::truncated_gaussian}) {
        if (name == to_string(p)) return p;
    }
    throw InvalidArgument("unknown kernel profile '" + std::string(name) + "'");
}

double kernel_mass(const KernelSpec& spec, int dx, int dy) {
    check_radius(spec.support_radius_px);
    return raw_profile(spec.profile, spec.support_radius_px, dx, dy) /
           raw_total(spec.profile, spec.support_radius_px);
}

double kernel_first_moment(const KernelSpec& spec, int axis) {
    check_radius(spec.support_radius_px);
    const int r = spec.support_radius_px;
    const double total = raw_total(spec.profile, r);
    // Same term sequence for both axes so the radial symmetry holds bit for bit.
    double m = 0.0;
    for (int a = -r; a <= r; ++a) {
        for (int b = -r; b <= r; ++b) {
            const double raw = axis == 0 ? raw_profile(spec.profile, r, a, b) : raw_profile(spec.profile, r, b, a);
            m += (raw / total) * (std::abs(a) / static_cast<double>(r));
        }
    }
    return 0.5 * m;
}

double cj1_normalizer(const KernelSpec& spec) {
    const double moment = kernel_first_moment(spec, 0);
    if (!(moment > 0.0)) {
        throw DegenerateInput("kernel first moment vanishes (support only at the origin)");
    }
    return 1.0 / moment;
}

KernelSpec make_kernel(KernelProfile profile, int radius) {
    KernelSpec spec{profile, radius, 0.0};
    spec.cj1 = cj1_normalizer(spec);
    return spec;
}

double rescaled_weight(const KernelSpec& spec, int dx, int dy) {
    const double r = spec.support_radius_px;
    // J(o / eps) as a density is mass * r^2; times cj1 / r^3.
    return spec.cj1 * kernel_mass(spec, dx, dy) / r;
}

std::vector<KernelTap> rescaled_taps(const KernelSpec& spec) {
    if (!(spec.cj1 > 0.0)) throw InvalidArgument("kernel spec has no normaliser; use make_kernel");
    const int r = spec.support_radius_px;
    std::vector<KernelTap> taps;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const double w = rescaled_weight(spec, dx, dy);
            if (w > 0.0) taps.push_back({dx, dy, w});
        }
    }
    return taps;
}

Grid kernel_nltv_flux(const Grid& u, const IndicatorField& g, const KernelSpec& spec, double eps) {
    require_same_shape(u, g.g, "kernel flux indicator");
    const long r = spec.support_radius_px;
    if (2 * static_cast<std::size_t>(r) > std::min(u.width(), u.height())) {
        throw InvalidArgument("kernel radius " + std::to_string(r) + " exceeds half the image size");
    }
    const std::vector<KernelTap> taps = rescaled_taps(spec);
    const long w = static_cast<long>(u.width());
    const long h = static_cast<long>(u.height());
    Grid out(u.width(), u.height());
    parallel_for(u.height(), [&](std::size_t yy) {
        const long y = static_cast<long>(yy);
        for (long x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y * w + x);
            double s = 0.0;
            for (const KernelTap& t : taps) {
                const long qx = x + t.dx;
                const long qy = y + t.dy;
                if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                const std::size_t q = static_cast<std::size_t>(qy * w + qx);
                const double d = u[q] - u[p];
                s += 0.5 * (g[p] + g[q]) * t.weight * d / std::sqrt(d * d + eps);
            }
            out[p] = s;
        }
    });
    return out;
}

SymmetricGraph kernel_edges(std::size_t width, std::size_t height, const KernelSpec& spec) {
    const std::vector<KernelTap> taps = rescaled_taps(spec);
    const long w = static_cast<long>(width);
    const long h = static_cast<long>(height);
    std::vector<Edge> edges;
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            const auto p = static_cast<std::uint32_t>(y * w + x);
            for (const KernelTap& t : taps) {
                const long qx = x + t.dx;
                const long qy = y + t.dy;
                if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                const auto q = static_cast<std::uint32_t>(qy * w + qx);
                if (q > p) edges.push_back({p, q, t.weight});
            }
        }
    }
    return SymmetricGraph(width, height, std::move(edges));
}

Grid kernel_coupled_step(const Grid& u, const IndicatorField& g, const KernelSpec& spec, double lambda,
                         double tau, double eps) {
    Grid out = u;
    const Grid local = lambda < 1.0 ? local_tv_flux(u, g, eps) : Grid(u.width(), u.height());
    const Grid nonlocal = lambda > 0.0 ? kernel_nltv_flux(u, g, spec, eps) : Grid(u.width(), u.height());
    for (std::size_t i = 0; i < u.size(); ++i) {
        out[i] = u[i] + tau * ((1.0 - lambda) * local[i] + lambda * nonlocal[i]);
    }
    return out;
}

IndicatorField limit_indicator(const IndicatorField& g, double lambda) {
    IndicatorField out = g;
    for (double& v : out.g.values()) v = 1.0 - ((1.0 - lambda) * (1.0 - v) + lambda * v);
    return out;
}

long integral_steps(double time, double tau) {
    if (!(time >= 0.0) || !(tau > 0.0)) throw InvalidArgument("time must be nonnegative and tau positive");
    const double ratio = time / tau;
    const double n = std::round(ratio);
    if (std::fabs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidArgument("time / tau must be an integer number of steps");
    }
    return static_cast<long>(n);
}

std::vector<RescalingRow> rescaling_study(const Grid& f, const IndicatorField& g, const RescalingConfig& cfg) {
    require_same_shape(f, g.g, "rescaling study indicator");
    if (cfg.radii.empty()) throw InvalidArgument("rescaling study needs at least one radius");
    for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
        if (cfg.radii[i] < 1) throw InvalidArgument("radii must be positive");
        if (i > 0 && !(cfg.radii[i] < cfg.radii[i - 1])) {
            throw InvalidArgument("radii must be strictly decreasing");
        }
    }
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
    const long steps = integral_steps(cfg.time, cfg.tau);

    auto evolve_local = [&](const IndicatorField& coef) {
        Grid u = f;
        for (long n = 0; n < steps; ++n) {
            const Grid flux = local_tv_flux(u, coef, cfg.eps);
            for (std::size_t i = 0; i < u.size(); ++i) u[i] += cfg.tau * flux[i];
        }
        return u;
    };
    const Grid plain = evolve_local(IndicatorField::constant(f.width(), f.height(), 0.0));
    const Grid adaptive = evolve_local(limit_indicator(g, cfg.lambda));

    auto mean_abs = [&](const Grid& a, const Grid& b) {
        CompensatedSum s;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
        return s.value() / static_cast<double>(a.size());
    };

    std::vector<RescalingRow> rows;
    for (int r : cfg.radii) {
        const KernelSpec spec = make_kernel(cfg.profile, r);
        Grid u = f;
        for (long n = 0; n < steps; ++n) u = kernel_coupled_step(u, g, spec, cfg.lambda, cfg.tau, cfg.eps);
        if (!u.all_finite()) throw NumericalFailure("non-finite kernel flow at radius " + std::to_string(r), steps);
        rows.push_back({r, steps, mean_abs(u, plain), mean_abs(u, adaptive)});
    }
    return rows;
}

}  // namespace despeckle
