#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <string_view>
#include <system_error>
#include <utility>

#include "despeckle/errors.hpp"
#include "despeckle/image_io.hpp"
#include "despeckle/kernel_flow.hpp"
#include "despeckle/metrics.hpp"
#include "despeckle/noise.hpp"
#include "despeckle/p_flow.hpp"
#include "despeckle/synthetic.hpp"
#include "despeckle/threads.hpp"

#ifndef DESPECKLE_VERSION
#define DESPECKLE_VERSION "0.0.0"
#endif

namespace despeckle::cli {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

namespace {

namespace fs = std::filesystem;

std::string text(double v) { return format_number(v); }
std::string text(int v) { return std::to_string(v); }
std::string text(long v) { return std::to_string(v); }
std::string text(std::uint64_t v) { return std::to_string(v); }
std::string text(bool v) { return v ? "true" : "false"; }
std::string text(const std::string& v) { return v; }

std::vector<double> parse_list(const std::string& s, std::string_view what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size() && !s.empty()) {
        std::size_t end = s.find(',', pos);
        if (end == std::string::npos) end = s.size();
        std::string_view item(s.data() + pos, end - pos);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        double v = 0.0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
            throw InvalidArgument("malformed entry '" + std::string(item) + "' in " + std::string(what));
        }
        out.push_back(v);
        pos = end + 1;
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& s, std::string_view what) {
    std::vector<int> out;
    for (double v : parse_list(s, what)) {
        if (v != std::floor(v) || std::abs(v) > 1e9) {
            throw InvalidArgument(std::string(what) + " must be integers");
        }
        out.push_back(static_cast<int>(v));
    }
    return out;
}

// Options bound to variables, remembered for the manifest.
class Params {
public:
    explicit Params(CLI::App* app) : app_(app) {}

    template <class T>
    CLI::Option* option(const std::string& flag, T& var, const std::string& desc) {
        CLI::Option* opt = app_->add_option(flag, var, desc)->capture_default_str();
        remember(opt, [&var] { return text(var); });
        return opt;
    }
    CLI::Option* flag(const std::string& flag, bool& var, const std::string& desc) {
        CLI::Option* opt = app_->add_flag(flag, var, desc);
        remember(opt, [&var] { return text(var); });
        return opt;
    }
    CLI::Option* positional(const std::string& name, std::string& var, const std::string& desc) {
        CLI::Option* opt = app_->add_option(name, var, desc)->required();
        positionals_.emplace_back(name, [&var] { return var; });
        return opt;
    }

    void extra(const std::string& key, std::string value) { extras_.emplace_back(key, std::move(value)); }

    std::set<std::string> positional_names() const {
        std::set<std::string> names;
        for (const auto& p : positionals_) names.insert(p.first);
        return names;
    }

    void write_manifest(const fs::path& path, double seconds) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write manifest " + path.string());
        out << "command = " << app_->get_name() << '\n';
        out << "version = " << DESPECKLE_VERSION << '\n';
        for (const auto& [name, value] : positionals_) out << name << " = " << value() << '\n';
        for (const auto& [name, value] : options_) {
            const std::string v = value();
            if (!v.empty()) out << name << " = " << v << '\n';
        }
        for (const auto& [name, value] : extras_) out << "resolved_" << name << " = " << value << '\n';
        out << "wall_seconds = " << format_number(seconds) << '\n';
        if (!out) throw IoError("cannot write manifest " + path.string());
    }

private:
    void remember(CLI::Option* opt, std::function<std::string()> value) {
        options_.emplace_back(opt->get_lnames().front(), std::move(value));
    }

    CLI::App* app_;
    std::vector<std::pair<std::string, std::function<std::string()>>> options_;
    std::vector<std::pair<std::string, std::function<std::string()>>> positionals_;
    std::vector<std::pair<std::string, std::string>> extras_;
};

struct Subcommand {
    CLI::App* app = nullptr;
    std::unique_ptr<Params> params;
    std::function<void(std::ostream&)> run;
    std::string config;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path manifest_path(const std::string& output) { return fs::path(output + ".manifest"); }

void apply_threads(int threads) {
    if (threads < 0) throw InvalidArgument("--threads must be nonnegative");
    if (threads > 0) set_thread_limit(threads);
}

bool mode_uses_graph(SolverMode m) {
    return m == SolverMode::coupled || m == SolverMode::nltv_only || m == SolverMode::symmetric_conservative;
}

IndicatorField study_indicator(const Grid& f, const std::string& kind, double g_value, double sigma, double beta,
                               double lambda) {
    if (kind == "constant") {
        if (!(g_value >= 0.0 && g_value <= 1.0)) throw InvalidArgument("--g must lie in [0, 1]");
        return IndicatorField::constant(f.width(), f.height(), g_value);
    }
    if (kind == "grayscale") {
        IndicatorParams ip;
        ip.sigma = sigma;
        ip.beta = beta;
        ip.lambda = lambda;
        return grayscale_indicator(f, ip);
    }
    throw InvalidArgument("--indicator must be 'constant' or 'grayscale'");
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << body;
    if (!out) throw IoError("cannot write " + path.string());
}

// ---- add-noise -----------------------------------------------------------

struct AddNoiseArgs {
    std::string input, output, out_pfm;
    int looks = 10;
    std::uint64_t seed = 0;
};

Subcommand make_add_noise(CLI::App& root) {
    Subcommand cmd;
    cmd.app = root.add_subcommand("add-noise", "Multiply an image by unit-mean Gamma speckle");
    cmd.params = std::make_unique<Params>(cmd.app);
    auto a = std::make_shared<AddNoiseArgs>();
    Params& p = *cmd.params;
    p.positional("input", a->input, "Clean image (.pgm or .pfm)");
    p.positional("output", a->output, "Speckled image (.pgm or .pfm)");
    p.option("--looks", a->looks, "Number of looks L");
    p.option("--seed", a->seed, "Noise seed");
    p.option("--out-pfm", a->out_pfm, "Also write the unquantised result as PFM");
    cmd.run = [a, &p](std::ostream&) {
        const auto t0 = Clock::now();
        const Grid clean = read_image(a->input);
        const Grid noisy = gamma_speckle(clean, {a->looks, a->seed});
        write_image(noisy, a->output);
        if (!a->out_pfm.empty()) write_pfm(noisy, a->out_pfm);
        p.write_manifest(manifest_path(a->output), seconds_since(t0));
    };
    return cmd;
}

// ---- denoise -------------------------------------------------------------

struct DenoiseArgs {
    std::string input, output, mode = "coupled", mask, trace, out_pfm, graph_dump, graph_load;
    double lambda = 0.9, tau = 0.2, eps = 1e-5, sigma = 2.0, beta = 2.0, stop_tol = 0.0;
    double patch_sigma = 2.5, h = 0.0, h_scale = 1.0, aa_fidelity = 1.0;
    long iters = 100, refresh_every = 0;
    int search_radius = 10, patch = 10, k = 20, threads = 0;
    bool deterministic = false;
};

Subcommand make_denoise(CLI::App& root) {
    Subcommand cmd;
    cmd.app = root.add_subcommand("denoise", "Run the coupled local/nonlocal TV flow");
    cmd.params = std::make_unique<Params>(cmd.app);
    auto a = std::make_shared<DenoiseArgs>();
    Params& p = *cmd.params;
    p.positional("input", a->input, "Noisy image");
    p.positional("output", a->output, "Restored image");
    p.option("--lambda", a->lambda, "Local/nonlocal trade-off in [0, 1]");
    p.option("--tau", a->tau, "Time step");
    p.option("--eps", a->eps, "Regulariser");
    p.option("--iters", a->iters, "Iteration budget (0 copies the input)");
    p.option("--mode", a->mode, "coupled | tv_only | nltv_only | symmetric_conservative | aa_baseline");
    p.option("--sigma", a->sigma, "Indicator smoothing scale");
    p.option("--beta", a->beta, "Indicator exponent");
    p.option("--mask", a->mask, "Texture mask PGM (>= 128 is texture)");
    p.option("--trace", a->trace, "Per-iteration diagnostics CSV");
    p.option("--stop-tol", a->stop_tol, "Relative step-norm stopping threshold (0 disables)");
    p.option("--search-radius", a->search_radius, "Search window radius");
    p.option("--patch", a->patch, "Patch edge length");
    p.option("--patch-sigma", a->patch_sigma, "Patch Gaussian standard deviation");
    p.option("--k", a->k, "Neighbours kept per pixel");
    p.option("--h", a->h, "Weight filter scale (0 estimates it from the input)");
    p.option("--h-scale", a->h_scale, "Multiplier on the estimated filter scale");
    p.option("--aa-fidelity", a->aa_fidelity, "Fidelity weight of aa_baseline");
    p.option("--refresh-every", a->refresh_every, "Rebuild the graph from the iterate every N steps (0 = never)");
    p.option("--out-pfm", a->out_pfm, "Also write the unquantised result as PFM");
    p.option("--graph-dump", a->graph_dump, "Write the weight graph to this file");
    p.option("--graph-load", a->graph_load, "Read the weight graph instead of building it");
    p.option("--threads", a->threads, "Worker cap (0 = runtime default)");
    p.flag("--deterministic", a->deterministic, "Fixed reduction order");
    cmd.run = [a, &p](std::ostream&) {
        const auto t0 = Clock::now();
        apply_threads(a->threads);
        const Grid f = read_image(a->input);

        SolverConfig cfg;
        cfg.lambda = a->lambda;
        cfg.tau = a->tau;
        cfg.eps = a->eps;
        cfg.max_iters = a->iters;
        cfg.stop_tol = a->stop_tol;
        cfg.mode = parse_solver_mode(a->mode);
        cfg.aa_fidelity = a->aa_fidelity;
        cfg.record_diagnostics = !a->trace.empty();
        cfg.refresh_every = a->refresh_every;
        if (a->iters < 0) throw InvalidArgument("--iters must be nonnegative");

        PatchConfig pc;
        pc.search_radius = a->search_radius;
        pc.patch_edge = a->patch;
        pc.patch_sigma_a = a->patch_sigma;
        pc.k_neighbors = a->k;
        pc.filter_scale_h = a->h > 0.0 ? a->h : default_filter_scale(f, a->h_scale);
        pc.validate();
        if (a->h < 0.0) throw InvalidArgument("--h must be nonnegative");
        p.extra("h", format_number(pc.filter_scale_h));
        if (cfg.refresh_every > 0) cfg.refresh_patch = pc;

        Grid u = f;
        if (a->iters > 0) {
            cfg.validate();
            const bool graph_needed = mode_uses_graph(cfg.mode) || !a->graph_dump.empty();
            WeightGraph graph;
            if (!a->graph_load.empty()) {
                graph = WeightGraph::load(a->graph_load);
                if (graph.width() != f.width() || graph.height() != f.height()) {
                    throw InvalidArgument("loaded graph does not match the image size");
                }
            } else if (graph_needed) {
                graph = build_weight_graph(f, pc);
            }
            if (!a->graph_dump.empty()) graph.save(a->graph_dump);

            IndicatorField g;
            if (cfg.mode != SolverMode::aa_baseline) {
                IndicatorParams ip;
                ip.sigma = a->sigma;
                ip.beta = a->beta;
                ip.lambda = a->lambda;
                std::optional<TextureMask> mask;
                if (!a->mask.empty()) mask = TextureMask::load(a->mask);
                g = grayscale_indicator(f, ip, mask);
            }
            RunResult r = run(f, mode_uses_graph(cfg.mode) ? graph : WeightGraph{}, g, cfg);
            u = std::move(r.u);
            p.extra("iterations", std::to_string(r.iterations));
            if (!a->trace.empty()) r.trace.write_csv(a->trace);
        } else {
            p.extra("iterations", "0");
            if (!a->trace.empty()) {
                DiagnosticsTrace empty;
                const GridStats s = grid_stats(f);
                empty.initial = {0, 0.0, s.mean, s.min, s.max, 0.0};
                empty.write_csv(a->trace);
            }
        }
        write_image(u, a->output);
        if (!a->out_pfm.empty()) write_pfm(u, a->out_pfm);
        p.write_manifest(manifest_path(a->output), seconds_since(t0));
    };
    return cmd;
}

// ---- metrics -------------------------------------------------------------

struct MetricsArgs {
    std::string reference, test;
    double peak = 255.0;
};

Subcommand make_metrics(CLI::App& root) {
    Subcommand cmd;
    cmd.app = root.add_subcommand("metrics", "Print psnr and ssim of test against reference");
    cmd.params = std::make_unique<Params>(cmd.app);
    auto a = std::make_shared<MetricsArgs>();
    Params& p = *cmd.params;
    p.positional("reference", a->reference, "Reference image");
    p.positional("test", a->test, "Test image");
    p.option("--peak", a->peak, "Peak signal value");
    cmd.run = [a](std::ostream& out) {
        const Grid ref = read_image(a->reference);
        const Grid test = read_image(a->test);
        SsimConfig sc;
        sc.dynamic_range = a->peak;
        out << "psnr=" << format_number(psnr(ref, test, a->peak)) << ",ssim=" << format_number(ssim(ref, test, sc))
            << '\n';
    };
    return cmd;
}

// ---- study-rescale -------------------------------------------------------

struct RescaleArgs {
    std::string input, report, radii = "8,4,2,1", profile = "truncated-gaussian", indicator = "constant";
    std::string reference = "tv";
    double time = 2.0, tau = 0.01, lambda = 1.0, eps = 1e-5, g = 1.0, sigma = 2.0, beta = 2.0;
    int threads = 0;
};

Subcommand make_study_rescale(CLI::App& root) {
    Subcommand cmd;
    cmd.app = root.add_subcommand("study-rescale", "Distance of the rescaled kernel flow to the local TV flow");
    cmd.params = std::make_unique<Params>(cmd.app);
    auto a = std::make_shared<RescaleArgs>();
    Params& p = *cmd.params;
    p.positional("input", a->input, "Input image");
    p.positional("report", a->report, "Output CSV");
    p.option("--radii", a->radii, "Comma-separated, strictly decreasing kernel radii");
    p.option("--time", a->time, "Final time T");
    p.option("--tau", a->tau, "Time step");
    p.option("--lambda", a->lambda, "Weight of the kernel term");
    p.option("--eps", a->eps, "Regulariser");
    p.option("--profile", a->profile, "box | triangle | truncated-gaussian");
    p.option("--indicator", a->indicator, "constant | grayscale");
    p.option("--g", a->g, "Value of the constant indicator");
    p.option("--sigma", a->sigma, "Grayscale indicator smoothing");
    p.option("--beta", a->beta, "Grayscale indicator exponent");
    p.option("--reference", a->reference, "tv (plain TV flow) | adaptive (zero-range limit of the coupled flow)");
    p.option("--threads", a->threads, "Worker cap (0 = runtime default)");
    cmd.run = [a, &p](std::ostream&) {
        const auto t0 = Clock::now();
        apply_threads(a->threads);
        if (a->reference != "tv" && a->reference != "adaptive") {
            throw InvalidArgument("--reference must be 'tv' or 'adaptive'");
        }
        const Grid f = read_image(a->input);
        RescalingConfig rc;
        rc.radii = parse_int_list(a->radii, "--radii");
        rc.time = a->time;
        rc.tau = a->tau;
        rc.lambda = a->lambda;
        rc.eps = a->eps;
        rc.profile = parse_kernel_profile(a->profile);
        const IndicatorField g = study_indicator(f, a->indicator, a->g, a->sigma, a->beta, a->lambda);
        std::ostringstream csv;
        csv << "radius,iterations,l1_distance\n";
        for (const RescalingRow& row : rescaling_study(f, g, rc)) {
            const double d = a->reference == "tv" ? row.l1_distance : row.l1_distance_adaptive;
            csv << row.radius << ',' << row.iterations << ',' << format_number(d) << '\n';
        }
        write_text(a->report, csv.str());
        p.write_manifest(manifest_path(a->report), seconds_since(t0));
    };
    return cmd;
}

// ---- study-p -------------------------------------------------------------

struct PStudyArgs {
    std::string input, report, ps = "2,1.5,1.2,1.05", profile = "truncated-gaussian", indicator = "constant";
    double time = 1.0, tau = 0.01, lambda = 0.5, eps = 1e-5, g = 0.5, sigma = 2.0, beta = 2.0;
    int radius = 2, threads = 0;
};

Subcommand make_study_p(CLI::App& root) {
    Subcommand cmd;
    cmd.app = root.add_subcommand("study-p", "Time-integrated nonlocal p-energy against the p = 1 flow");
    cmd.params = std::make_unique<Params>(cmd.app);
    auto a = std::make_shared<PStudyArgs>();
    Params& p = *cmd.params;
    p.positional("input", a->input, "Input image");
    p.positional("report", a->report, "Output CSV");
    p.option("--ps", a->ps, "Comma-separated exponents, strictly decreasing towards 1");
    p.option("--time", a->time, "Final time T");
    p.option("--tau", a->tau, "Time step");
    p.option("--lambda", a->lambda, "Weight of the nonlocal term");
    p.option("--eps", a->eps, "Regulariser");
    p.option("--radius", a->radius, "Kernel radius in pixels");
    p.option("--profile", a->profile, "box | triangle | truncated-gaussian");
    p.option("--indicator", a->indicator, "constant | grayscale");
    p.option("--g", a->g, "Value of the constant indicator");
    p.option("--sigma", a->sigma, "Grayscale indicator smoothing");
    p.option("--beta", a->beta, "Grayscale indicator exponent");
    p.option("--threads", a->threads, "Worker cap (0 = runtime default)");
    cmd.run = [a, &p](std::ostream&) {
        const auto t0 = Clock::now();
        apply_threads(a->threads);
        const Grid f = read_image(a->input);
        PFlowConfig pc;
        pc.tau = a->tau;
        pc.eps = a->eps;
        pc.lambda = a->lambda;
        pc.kernel = make_kernel(parse_kernel_profile(a->profile), a->radius);
        const IndicatorField g = study_indicator(f, a->indicator, a->g, a->sigma, a->beta, a->lambda);
        const PLimitResult res = p_limit_study(f, g, parse_list(a->ps, "--ps"), a->time, pc);
        std::ostringstream csv;
        csv << "p,iterations,energy,abs_diff\n";
        for (const PLimitRow& row : res.rows) {
            csv << format_number(row.p) << ',' << row.iterations << ',' << format_number(row.energy) << ','
                << format_number(row.abs_diff) << '\n';
        }
        csv << "1.0," << res.iterations << ',' << format_number(res.tv_energy) << ",0.0\n";
        write_text(a->report, csv.str());
        p.write_manifest(manifest_path(a->report), seconds_since(t0));
    };
    return cmd;
}

// ---- study-lambda --------------------------------------------------------

struct LambdaArgs {
    std::string input, report, lambdas = "0,1,0.3", sigmas, betas, mask, noisy_out;
    int looks = 10, search_radius = 10, patch = 10, k = 20, threads = 0;
    std::uint64_t seed = 7;
    long iters = 200;
    double tau = 0.2, eps = 1e-5, patch_sigma = 2.5, h = 0.0, h_scale = 1.0;
};

Subcommand make_study_lambda(CLI::App& root) {
    Subcommand cmd;
    cmd.app = root.add_subcommand("study-lambda", "Denoise one speckled image for several lambdas");
    cmd.params = std::make_unique<Params>(cmd.app);
    auto a = std::make_shared<LambdaArgs>();
    Params& p = *cmd.params;
    p.positional("input", a->input, "Clean image");
    p.positional("report", a->report, "Output CSV");
    p.option("--looks", a->looks, "Number of looks L");
    p.option("--seed", a->seed, "Noise seed");
    p.option("--lambdas", a->lambdas, "Comma-separated lambdas");
    p.option("--sigmas", a->sigmas, "Per-lambda indicator smoothing (default: built-in per-lambda table)");
    p.option("--betas", a->betas, "Per-lambda indicator exponents (default: built-in per-lambda table)");
    p.option("--mask", a->mask, "Texture mask PGM (>= 128 is texture)");
    p.option("--iters", a->iters, "Iteration budget per lambda");
    p.option("--tau", a->tau, "Time step");
    p.option("--eps", a->eps, "Regulariser");
    p.option("--search-radius", a->search_radius, "Search window radius");
    p.option("--patch", a->patch, "Patch edge length");
    p.option("--patch-sigma", a->patch_sigma, "Patch Gaussian standard deviation");
    p.option("--k", a->k, "Neighbours kept per pixel");
    p.option("--h", a->h, "Weight filter scale (0 estimates it from the noisy image)");
    p.option("--h-scale", a->h_scale, "Multiplier on the estimated filter scale");
    p.option("--noisy-out", a->noisy_out, "Write the speckled image here");
    p.option("--threads", a->threads, "Worker cap (0 = runtime default)");
    cmd.run = [a, &p](std::ostream& out) {
        const auto t0 = Clock::now();
        apply_threads(a->threads);
        const Grid clean = read_image(a->input);
        StudyLambdaConfig sc;
        sc.looks = a->looks;
        sc.seed = a->seed;
        sc.lambdas = parse_list(a->lambdas, "--lambdas");
        sc.sigmas = parse_list(a->sigmas, "--sigmas");
        sc.betas = parse_list(a->betas, "--betas");
        if (!a->mask.empty()) sc.mask = TextureMask::load(a->mask);
        sc.solver.max_iters = a->iters;
        sc.solver.tau = a->tau;
        sc.solver.eps = a->eps;
        sc.patch.search_radius = a->search_radius;
        sc.patch.patch_edge = a->patch;
        sc.patch.patch_sigma_a = a->patch_sigma;
        sc.patch.k_neighbors = a->k;
        sc.h_scale = a->h_scale;
        if (a->h > 0.0) sc.h = a->h;
        const StudyLambdaResult res = study_lambda(clean, sc);
        if (!a->noisy_out.empty()) write_image(res.noisy, a->noisy_out);
        std::ostringstream csv;
        csv << "lambda,sigma,beta,iterations,psnr,ssim,diff_mean,diff_min,diff_max,diff_l2\n";
        for (const LambdaRow& r : res.rows) {
            csv << format_number(r.lambda) << ',' << format_number(r.sigma) << ',' << format_number(r.beta) << ','
                << r.iterations << ',' << format_number(r.psnr) << ',' << format_number(r.ssim) << ','
                << format_number(r.difference.mean) << ',' << format_number(r.difference.min) << ','
                << format_number(r.difference.max) << ',' << format_number(r.difference.l2_norm) << '\n';
        }
        write_text(a->report, csv.str());
        out << "noisy psnr=" << format_number(res.noisy_psnr) << ",ssim=" << format_number(res.noisy_ssim) << '\n';
        p.extra("h", format_number(res.h));
        p.extra("noisy_psnr", format_number(res.noisy_psnr));
        p.write_manifest(manifest_path(a->report), seconds_since(t0));
    };
    return cmd;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
    std::string output, kind = "cartoon", mask_out, out_pfm;
    int width = 64, height = 64;
    std::uint64_t seed = 0;
};

Subcommand make_synth(CLI::App& root) {
    Subcommand cmd;
    cmd.app = root.add_subcommand("synth", "Write an image of the synthetic corpus");
    cmd.params = std::make_unique<Params>(cmd.app);
    auto a = std::make_shared<SynthArgs>();
    Params& p = *cmd.params;
    p.positional("output", a->output, "Output image");
    p.option("--kind", a->kind, "cartoon | stripes | bump | hybrid | random");
    p.option("--width", a->width, "Width in pixels");
    p.option("--height", a->height, "Height in pixels");
    p.option("--seed", a->seed, "Seed of the random kind");
    p.option("--mask-out", a->mask_out, "Texture mask of the hybrid kind");
    p.option("--out-pfm", a->out_pfm, "Also write the image as PFM");
    cmd.run = [a, &p](std::ostream&) {
        const auto t0 = Clock::now();
        if (a->width <= 0 || a->height <= 0) throw InvalidArgument("image size must be positive");
        const auto w = static_cast<std::size_t>(a->width);
        const auto h = static_cast<std::size_t>(a->height);
        Grid img;
        if (a->kind == "cartoon") {
            img = synthetic::cartoon(w, h);
        } else if (a->kind == "stripes") {
            img = synthetic::stripes(w, h);
        } else if (a->kind == "bump") {
            img = synthetic::radial_bump(w, h);
        } else if (a->kind == "random") {
            img = synthetic::random_uniform(w, h, a->seed);
        } else if (a->kind == "hybrid") {
            synthetic::Hybrid hy = synthetic::hybrid(w, h);
            img = std::move(hy.image);
            if (!a->mask_out.empty()) write_image(hy.texture_levels, a->mask_out);
        } else {
            throw InvalidArgument("unknown --kind '" + a->kind + "'");
        }
        if (a->kind != "hybrid" && !a->mask_out.empty()) throw InvalidArgument("--mask-out needs --kind hybrid");
        write_image(img, a->output);
        if (!a->out_pfm.empty()) write_pfm(img, a->out_pfm);
        p.write_manifest(manifest_path(a->output), seconds_since(t0));
    };
    return cmd;
}

// ---- config files --------------------------------------------------------

const std::set<std::string> kReservedKeys{"command", "version", "wall_seconds", "config"};

// Turns `key = value` lines into `--key=value` arguments.
std::vector<std::string> config_arguments(const std::string& path, const std::set<std::string>& positionals) {
    if (!fs::exists(path)) throw IoError("config file not found: " + path);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_file(path);
    } catch (const CLI::FileError& e) {
        throw IoError(e.what());
    }
    std::vector<std::string> out;
    for (const CLI::ConfigItem& item : items) {
        std::string key = item.name;
        std::replace(key.begin(), key.end(), '_', '-');
        if (kReservedKeys.count(item.name) || positionals.count(item.name) || item.name.rfind("resolved_", 0) == 0) {
            continue;
        }
        std::string value;
        for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
        out.push_back("--" + key + "=" + value);
    }
    return out;
}

std::string find_config(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    return path;
}

int run_guarded(const std::function<void()>& body, std::ostream& err) {
    try {
        body();
        return kExitOk;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kExitIo;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DegenerateInput& e) {
        err << "degenerate input: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace

std::pair<double, double> default_lambda_indicator(double lambda) {
    if (lambda == 0.0) return {2.0, 2.0};
    if (lambda == 1.0) return {3.0, 1.0};
    return {3.0, 2.0};
}

StudyLambdaResult study_lambda(const Grid& clean, const StudyLambdaConfig& cfg) {
    if (cfg.lambdas.empty()) throw InvalidArgument("lambda list is empty");
    if (!cfg.sigmas.empty() && cfg.sigmas.size() != cfg.lambdas.size()) {
        throw InvalidArgument("need one sigma per lambda");
    }
    if (!cfg.betas.empty() && cfg.betas.size() != cfg.lambdas.size()) {
        throw InvalidArgument("need one beta per lambda");
    }
    for (double l : cfg.lambdas) {
        if (!(l >= 0.0 && l <= 1.0)) throw InvalidArgument("lambdas must lie in [0, 1]");
    }
    StudyLambdaResult res;
    res.noisy = gamma_speckle(clean, {cfg.looks, cfg.seed});
    res.noisy_psnr = psnr(clean, res.noisy);
    res.noisy_ssim = ssim(clean, res.noisy);

    PatchConfig pc = cfg.patch;
    pc.filter_scale_h = cfg.h ? *cfg.h : default_filter_scale(res.noisy, cfg.h_scale);
    res.h = pc.filter_scale_h;
    const WeightGraph graph = build_weight_graph(res.noisy, pc);

    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
        LambdaRow row;
        row.lambda = cfg.lambdas[i];
        const auto [sigma, beta] = default_lambda_indicator(row.lambda);
        row.sigma = cfg.sigmas.empty() ? sigma : cfg.sigmas[i];
        row.beta = cfg.betas.empty() ? beta : cfg.betas[i];
        IndicatorParams ip;
        ip.sigma = row.sigma;
        ip.beta = row.beta;
        ip.lambda = row.lambda;
        const IndicatorField g = grayscale_indicator(res.noisy, ip, cfg.mask);
        SolverConfig sc = cfg.solver;
        sc.lambda = row.lambda;
        sc.mode = SolverMode::coupled;
        const RunResult r = run(res.noisy, graph, g, sc);
        row.iterations = r.iterations;
        row.psnr = psnr(clean, r.u);
        row.ssim = ssim(clean, r.u);
        Grid diff = res.noisy;
        for (std::size_t p = 0; p < diff.size(); ++p) diff[p] -= r.u[p];
        row.difference = grid_stats(diff);
        res.rows.push_back(row);
    }
    return res;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Speckle removal with coupled local and nonlocal total variation flows", "despeckle"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    // Long form only: "--h" is the filter scale.
    app.set_help_flag("--help", "Print this help");
    app.set_version_flag("--version", DESPECKLE_VERSION);

    std::vector<Subcommand> commands;
    commands.push_back(make_add_noise(app));
    commands.push_back(make_denoise(app));
    commands.push_back(make_metrics(app));
    commands.push_back(make_study_rescale(app));
    commands.push_back(make_study_p(app));
    commands.push_back(make_study_lambda(app));
    commands.push_back(make_synth(app));
    for (Subcommand& c : commands) {
        c.app->add_option("--config", c.config, "key = value defaults file; flags override it");
    }

    CLI::App* selected = nullptr;
    if (!args.empty()) selected = app.get_subcommand_no_throw(args.front());
    const auto usage = [&](const std::string& msg) {
        err << msg << '\n' << (selected ? selected->help() : app.help());
        return kExitUsage;
    };

    std::vector<std::string> argv = args;
    if (selected) {
        const std::string config = find_config(args);
        if (!config.empty()) {
            const Subcommand& c =
                *std::find_if(commands.begin(), commands.end(), [&](const Subcommand& s) { return s.app == selected; });
            std::vector<std::string> injected;
            const int rc = run_guarded([&] { injected = config_arguments(config, c.params->positional_names()); }, err);
            if (rc != kExitOk) return rc;
            argv.insert(argv.begin() + 1, injected.begin(), injected.end());
        }
    }
    // CLI11 consumes the vector from the back.
    std::reverse(argv.begin(), argv.end());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << (selected ? selected->help() : app.help());
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << DESPECKLE_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return usage(std::string("usage error: ") + e.what());
    }

    for (Subcommand& c : commands) {
        if (c.app->parsed()) return run_guarded([&] { c.run(out); }, err);
    }
    return usage("usage error: no subcommand given");
}

int dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace despeckle::cli
