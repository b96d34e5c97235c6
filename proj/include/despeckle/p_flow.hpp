#pragma once

#include <vector>

#include "despeckle/grid.hpp"
#include "despeckle/indicator.hpp"
#include "despeckle/kernel_flow.hpp"
#include "despeckle/nl_graph.hpp"

namespace despeckle {

struct PFlowConfig {
    double p = 1.5;
    double tau = 0.01;
    double eps = 1e-5;
    long max_iters = 100;
    double lambda = 0.5;
    KernelSpec kernel = make_kernel(KernelProfile::truncated_gaussian, 2);

    void validate() const;
};

/// Midpoint local term with coefficient (1 - g_mid)(|grad u|^2 + eps)^((p-2)/2) plus the
/// kernel term ((g_x+g_y)/2) J_eps ((u_y-u_x)^2 + eps)^((p-2)/2) (u_y - u_x).
Grid p_local_flux(const Grid& u, const IndicatorField& g, double p, double eps);
Grid p_nonlocal_flux(const Grid& u, const IndicatorField& g, const KernelSpec& kernel, double p, double eps);
/// Same nonlocal term over an arbitrary symmetric edge set (e.g. a symmetrised patch graph).
Grid p_nonlocal_flux(const Grid& u, const IndicatorField& g, const SymmetricGraph& graph, double p, double eps);

/// u + tau [(1 - lambda) local + lambda nonlocal]. Throws InvalidArgument for p <= 1.
Grid p_step(const Grid& u, const IndicatorField& g, const PFlowConfig& cfg);
/// Patch-graph variant of the nonlocal term.
Grid p_step(const Grid& u, const IndicatorField& g, const PFlowConfig& cfg, const SymmetricGraph& graph);

/// (1/2) sum over ordered pairs ((g_x+g_y)/2) J |u_y - u_x|^p, compensated.
double nonlocal_p_energy(const Grid& u, const IndicatorField& g, const KernelSpec& kernel, double p);
double nonlocal_p_energy(const Grid& u, const IndicatorField& g, const SymmetricGraph& graph, double p);

struct PLimitRow {
    double p = 0.0;
    long iterations = 0;
    double energy = 0.0;    // time-integrated nonlocal p-energy
    double abs_diff = 0.0;  // |E_p - E_1|
};

struct PLimitResult {
    std::vector<PLimitRow> rows;
    double tv_energy = 0.0;  // E_1 from the p = 1 (TV) flow
    long iterations = 0;
};

/// For each p evolves p_step to time T and integrates the nonlocal p-energy with the
/// trapezoidal rule; the reference E_1 uses the kernel-coupled TV flow and p = 1.
PLimitResult p_limit_study(const Grid& f, const IndicatorField& g, const std::vector<double>& ps, double time,
                           const PFlowConfig& shared);

}  // namespace despeckle
