#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "despeckle/flow_solver.hpp"
#include "despeckle/grid.hpp"
#include "despeckle/indicator.hpp"
#include "despeckle/nl_graph.hpp"

namespace despeckle::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;

/// Runs one subcommand. args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

/// Shortest round-trip decimal; integral values get a trailing ".0".
std::string format_number(double v);

struct StudyLambdaConfig {
    int looks = 10;
    std::uint64_t seed = 7;
    std::vector<double> lambdas{0.0, 1.0, 0.3};
    // Per-lambda indicator parameters; empty selects the built-in table.
    std::vector<double> sigmas;
    std::vector<double> betas;
    std::optional<TextureMask> mask;
    SolverConfig solver = [] {
        SolverConfig c;
        c.max_iters = 200;
        c.record_diagnostics = false;
        return c;
    }();
    PatchConfig patch;
    double h_scale = 1.0;
    std::optional<double> h;
};

struct LambdaRow {
    double lambda = 0.0;
    double sigma = 0.0;
    double beta = 0.0;
    long iterations = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    GridStats difference;  // of f - u
};

struct StudyLambdaResult {
    Grid noisy;
    double noisy_psnr = 0.0;
    double noisy_ssim = 0.0;
    double h = 0.0;
    std::vector<LambdaRow> rows;
};

/// (sigma, beta) used for lambda when none are given: (2, 2) for 0, (3, 1) for 1, (3, 2) otherwise.
std::pair<double, double> default_lambda_indicator(double lambda);

/// Speckles the clean image once, builds one graph from the noisy image and
/// denoises it in coupled mode for each lambda.
StudyLambdaResult study_lambda(const Grid& clean, const StudyLambdaConfig& cfg);

}  // namespace despeckle::cli
