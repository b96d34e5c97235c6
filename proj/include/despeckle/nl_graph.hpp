#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "despeckle/grid.hpp"
#include "despeckle/indicator.hpp"

namespace despeckle {

struct PatchConfig {
    int search_radius = 10;      // window (2r+1)^2
    int patch_edge = 10;         // patch is edge x edge
    double patch_sigma_a = 2.5;  // intra-patch Gaussian std in pixels
    int k_neighbors = 20;
    double filter_scale_h = 1.0;

    void validate() const;
};

struct Pixel {
    std::size_t x = 0;
    std::size_t y = 0;
};

/// multiplier * Immerkaer estimate of f, floored at 1 so noise-free inputs still get
/// a usable filter scale.
double default_filter_scale(const Grid& f, double multiplier = 1.0);

/// Gaussian-weighted squared patch difference. Patches of even edge are anchored
/// with their upper-left cell at (-(edge-1)/2, -(edge-1)/2); samples outside the
/// image are mirrored.
double patch_distance(const Grid& f, Pixel p, Pixel q, const PatchConfig& cfg);

/// Unit-sum Gaussian weights over the patch footprint, row-major from the anchor.
std::vector<double> patch_gaussian(const PatchConfig& cfg);

struct Neighbor {
    std::uint32_t index;
    double weight;
};

/// Per-pixel neighbour lists (CSR). Each list holds at most `capacity` entries.
class WeightGraph {
public:
    WeightGraph() = default;
    /// lists[p] holds the neighbours of pixel p. Validates uniqueness, self-exclusion
    /// and index range; weights are stored as given.
    WeightGraph(std::size_t width, std::size_t height, std::size_t capacity,
                const std::vector<std::vector<Neighbor>>& lists);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    std::size_t capacity() const noexcept { return capacity_; }
    bool empty() const noexcept { return offsets_.empty(); }

    std::span<const Neighbor> neighbors(std::size_t p) const noexcept {
        return {entries_.data() + offsets_[p], entries_.data() + offsets_[p + 1]};
    }
    std::size_t edge_count() const noexcept { return entries_.size(); }

    /// Flat binary table: header, then per pixel (index, K neighbour indices, K weights).
    void save(const std::filesystem::path& path) const;
    static WeightGraph load(const std::filesystem::path& path);

    friend bool operator==(const WeightGraph&, const WeightGraph&);

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::size_t capacity_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<Neighbor> entries_;
};

/// K most similar patches per pixel in the clipped search window (ties by
/// ascending row-major index), weights exp(-d/h^2) renormalised to unit sum.
WeightGraph build_weight_graph(const Grid& f, const PatchConfig& cfg);

/// g_p * sum_q alpha_pq (u_q - u_p) with
/// alpha_pq = w_pq |(n_p + eps)^(-1/2) + (n_q + eps)^(-1/2)|, n_p = sum_k w_pk (u_p - u_k)^2.
Grid nonlocal_flux(const Grid& u, const WeightGraph& graph, const IndicatorField& g, double eps);

/// Undirected edge with symmetrised weight.
struct Edge {
    std::uint32_t p;
    std::uint32_t q;  // p < q
    double weight;
};

/// Unordered edge set; used by the conservative flux, the energies and the kernel flows.
class SymmetricGraph {
public:
    SymmetricGraph() = default;
    SymmetricGraph(std::size_t width, std::size_t height, std::vector<Edge> edges);

    /// Union of both endpoints' lists with w~_pq = (w_pq + w_qp) / 2.
    static SymmetricGraph from(const WeightGraph& graph);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::span<const Edge> edges() const noexcept { return edges_; }

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<Edge> edges_;
};

}  // namespace despeckle
