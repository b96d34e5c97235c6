#pragma once

#include <string_view>
#include <vector>

#include "despeckle/grid.hpp"
#include "despeckle/indicator.hpp"
#include "despeckle/nl_graph.hpp"

namespace despeckle {

enum class KernelProfile { box, triangle, truncated_gaussian };

std::string_view to_string(KernelProfile profile);
KernelProfile parse_kernel_profile(std::string_view name);

/// Compactly supported radial kernel discretised on integer offsets |o| <= r
/// (the full square for box). The unit-scale argument is z = o / r.
struct KernelSpec {
    KernelProfile profile = KernelProfile::truncated_gaussian;
    int support_radius_px = 2;
    double cj1 = 0.0;  // filled by make_kernel
};

/// Builds the kernel and its first-moment normaliser.
KernelSpec make_kernel(KernelProfile profile, int radius);

/// Unit-mass weight of offset (dx, dy); zero outside the support.
double kernel_mass(const KernelSpec& spec, int dx, int dy);

/// (1/2) sum_o J(o) |z_axis| with z = o / r; axis 0 is x, 1 is y.
double kernel_first_moment(const KernelSpec& spec, int axis);

/// C_{J,1} = 1 / kernel_first_moment(spec, 0). Throws DegenerateInput if the
/// kernel is concentrated at the origin.
double cj1_normalizer(const KernelSpec& spec);

/// Weight of offset o in the rescaled operator: C_{J,1} / eps^{3} * J(o / eps)
/// with eps = r pixels and J read as a density on the unit-scale support.
double rescaled_weight(const KernelSpec& spec, int dx, int dy);

struct KernelTap {
    int dx;
    int dy;
    double weight;  // rescaled_weight
};
/// Nonzero taps excluding the origin, row-major.
std::vector<KernelTap> rescaled_taps(const KernelSpec& spec);

/// sum_y ((g_x + g_y) / 2) J_eps(y - x) (u_y - u_x) ((u_y - u_x)^2 + eps)^(-1/2),
/// neighbours outside the image skipped.
Grid kernel_nltv_flux(const Grid& u, const IndicatorField& g, const KernelSpec& spec, double eps);

/// All in-image unordered pairs within the support, weighted by rescaled_weight.
SymmetricGraph kernel_edges(std::size_t width, std::size_t height, const KernelSpec& spec);

/// u + tau [(1 - lambda) local TV flux + lambda kernel flux].
Grid kernel_coupled_step(const Grid& u, const IndicatorField& g, const KernelSpec& spec, double lambda,
                         double tau, double eps);

struct RescalingConfig {
    std::vector<int> radii{8, 4, 2, 1};
    double time = 2.0;
    double tau = 0.01;
    double lambda = 1.0;
    double eps = 1e-5;
    KernelProfile profile = KernelProfile::truncated_gaussian;
};

struct RescalingRow {
    int radius = 0;
    long iterations = 0;
    double l1_distance = 0.0;           // against the plain local TV flow
    double l1_distance_adaptive = 0.0;  // against the zero-range limit with the adaptive local term
};

/// Runs the kernel-coupled flow for each radius to time T and reports mean
/// absolute distances to the local reference flows at T.
std::vector<RescalingRow> rescaling_study(const Grid& f, const IndicatorField& g, const RescalingConfig& cfg);

/// Indicator g' whose local flux coefficient 1 - g' equals (1 - lambda)(1 - g) + lambda g.
IndicatorField limit_indicator(const IndicatorField& g, double lambda);

/// Number of steps tau that make up time T; InvalidArgument if T / tau is not integral.
long integral_steps(double time, double tau);

}  // namespace despeckle
