#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "despeckle/grid.hpp"
#include "despeckle/indicator.hpp"
#include "despeckle/nl_graph.hpp"

namespace despeckle {

enum class SolverMode {
    coupled,                 // (1 - lambda) local + lambda * nonlocal alpha term
    tv_only,                 // local term only
    nltv_only,               // nonlocal term only
    symmetric_conservative,  // (1 - lambda) local + lambda * pairwise antisymmetric nonlocal
    aa_baseline,             // TV flow with the Aubert-Aujol fidelity
};

std::string_view to_string(SolverMode mode);
/// Throws InvalidArgument for unknown names.
SolverMode parse_solver_mode(std::string_view name);

/// Positivity floor applied by the AA update.
inline constexpr double kAaFloor = 1e-6;

struct SolverConfig {
    double lambda = 0.9;
    double tau = 0.2;
    double eps = 1e-5;
    long max_iters = 100;
    double stop_tol = 0.0;  // relative step norm; 0 runs the full budget
    SolverMode mode = SolverMode::coupled;
    double aa_fidelity = 1.0;
    bool record_diagnostics = true;
    // Rebuild the weight graph from the current iterate every N iterations (0 = frozen).
    long refresh_every = 0;
    std::optional<PatchConfig> refresh_patch;

    void validate() const;
};

struct DiagnosticsRecord {
    long iteration = 0;
    double energy = 0.0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double step_l2 = 0.0;
};

struct DiagnosticsTrace {
    DiagnosticsRecord initial;               // state u^0, step_l2 = 0
    std::vector<DiagnosticsRecord> records;  // one per completed iteration

    /// Columns iter,energy,mean,min,max,step_l2; the first row is iteration 0.
    void write_csv(const std::filesystem::path& path) const;
};

/// Midpoint local TV flux with Neumann ghosts and coefficient (1 - g_mid)(|grad u|^2 + eps)^(-1/2).
Grid local_tv_flux(const Grid& u, const IndicatorField& g, double eps);

/// Conservative nonlocal flux over the symmetrised edge set:
/// each edge adds m_pq at p and subtracts it at q,
/// m_pq = ((g_p + g_q) / 2) w~_pq (u_q - u_p) ((u_q - u_p)^2 + eps)^(-1/2).
Grid symmetric_nonlocal_flux(const Grid& u, const SymmetricGraph& graph, const IndicatorField& g,
                             double eps);
Grid symmetric_nonlocal_flux(const Grid& u, const WeightGraph& graph, const IndicatorField& g,
                             double eps);

/// One explicit Euler step of the selected mode (aa_baseline is not handled here; see aa_step).
Grid step(const Grid& u, const WeightGraph& graph, const IndicatorField& g, const SolverConfig& cfg);
/// Same, with the symmetrised graph precomputed (used by symmetric_conservative).
Grid step(const Grid& u, const WeightGraph& graph, const SymmetricGraph& sym, const IndicatorField& g,
          const SolverConfig& cfg);

/// u + tau [TV flux (g = 0) + aa_fidelity (f - u) / (u^2 + eps)], floored at kAaFloor.
/// Throws NumericalFailure if u has nonpositive entries.
Grid aa_step(const Grid& u, const Grid& f, const SolverConfig& cfg);

/// eps-smoothed energy
///   (1 - lambda) sum (1 - g~) sqrt(|grad u|^2 + eps)
///   + (lambda / 2) sum over ordered pairs ((g_p + g_q) / 2) w~_pq sqrt((u_q - u_p)^2 + eps)
/// with forward differences and g~ = (2 g_ij + g_i+1,j + g_i,j+1) / 4.
double discrete_energy(const Grid& u, const SymmetricGraph& graph, const IndicatorField& g,
                       double lambda, double eps);
double discrete_energy(const Grid& u, const WeightGraph& graph, const IndicatorField& g,
                       double lambda, double eps);

/// Smoothed TV plus aa_fidelity * sum(log u + f / u).
double aa_energy(const Grid& u, const Grid& f, const SolverConfig& cfg);

struct RunResult {
    Grid u;
    DiagnosticsTrace trace;
    long iterations = 0;
};

/// Iterates from u^0 = f until max_iters or the relative step norm drops below stop_tol.
/// Modes that do not use the graph or indicator accept empty ones.
RunResult run(const Grid& f, const WeightGraph& graph, const IndicatorField& g, const SolverConfig& cfg);

}  // namespace despeckle
