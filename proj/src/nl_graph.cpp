#include "despeckle/nl_graph.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "despeckle/errors.hpp"
#include "despeckle/noise.hpp"
#include "parallel.hpp"

namespace despeckle {
namespace {

constexpr char kGraphMagic[8] = {'D', 'S', 'P', 'K', 'W', 'G', '0', '1'};
constexpr std::uint32_t kNoNeighbor = 0xFFFFFFFFu;

int patch_anchor(int edge) { return -((edge - 1) / 2); }

template <typename T>
void put(std::vector<unsigned char>& out, T value) {
    const auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::little) {
        out.insert(out.end(), bits.begin(), bits.end());
    } else {
        out.insert(out.end(), bits.rbegin(), bits.rend());
    }
}

template <typename T>
T get(const std::vector<unsigned char>& in, std::size_t& at) {
    if (in.size() - at < sizeof(T)) throw FormatError("truncated weight graph", in.size());
    std::array<unsigned char, sizeof(T)> bits;
    std::memcpy(bits.data(), in.data() + at, sizeof(T));
    if constexpr (std::endian::native != std::endian::little) std::reverse(bits.begin(), bits.end());
    at += sizeof(T);
    return std::bit_cast<T>(bits);
}

// Mirror-padded copy so that patch lookups need no bounds handling.
struct PaddedImage {
    std::size_t margin;
    std::size_t stride;
    std::vector<double> data;

    PaddedImage(const Grid& f, std::size_t m) : margin(m), stride(f.width() + 2 * m) {
        const std::size_t rows = f.height() + 2 * m;
        data.resize(stride * rows);
        for (std::size_t py = 0; py < rows; ++py) {
            const std::size_t y = mirror_index(static_cast<long>(py) - static_cast<long>(m), f.height());
            for (std::size_t px = 0; px < stride; ++px) {
                const std::size_t x = mirror_index(static_cast<long>(px) - static_cast<long>(m), f.width());
                data[py * stride + px] = f(x, y);
            }
        }
    }

    std::size_t at(std::size_t x, std::size_t y) const noexcept {
        return (y + margin) * stride + x + margin;
    }
};

}  // namespace

void PatchConfig::validate() const {
    if (search_radius < 1) throw InvalidArgument("search radius must be positive");
    if (patch_edge < 1) throw InvalidArgument("patch edge must be positive");
    if (!(patch_sigma_a > 0.0)) throw InvalidArgument("patch sigma must be positive");
    if (k_neighbors < 1) throw InvalidArgument("k_neighbors must be positive");
    const long window = (2L * search_radius + 1) * (2L * search_radius + 1);
    if (k_neighbors > window - 1) {
        throw InvalidArgument("k_neighbors exceeds the search window capacity");
    }
    if (!(filter_scale_h > 0.0) || !std::isfinite(filter_scale_h)) {
        throw InvalidArgument("filter scale h must be positive");
    }
}

std::vector<double> patch_gaussian(const PatchConfig& cfg) {
    const int lo = patch_anchor(cfg.patch_edge);
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(cfg.patch_edge * cfg.patch_edge));
    double total = 0.0;
    for (int dy = lo; dy < lo + cfg.patch_edge; ++dy) {
        for (int dx = lo; dx < lo + cfg.patch_edge; ++dx) {
            const double v = std::exp(-0.5 * (dx * dx + dy * dy) / (cfg.patch_sigma_a * cfg.patch_sigma_a));
            weights.push_back(v);
            total += v;
        }
    }
    for (double& v : weights) v /= total;
    return weights;
}

double default_filter_scale(const Grid& f, double multiplier) {
    if (!(multiplier > 0.0)) throw InvalidArgument("filter scale multiplier must be positive");
    return std::max(multiplier * estimate_noise_h(f), 1.0);
}

double patch_distance(const Grid& f, Pixel p, Pixel q, const PatchConfig& cfg) {
    const std::vector<double> weights = patch_gaussian(cfg);
    const int lo = patch_anchor(cfg.patch_edge);
    double d = 0.0;
    std::size_t k = 0;
    for (int dy = lo; dy < lo + cfg.patch_edge; ++dy) {
        for (int dx = lo; dx < lo + cfg.patch_edge; ++dx, ++k) {
            const double a = f(mirror_index(static_cast<long>(p.x) + dx, f.width()),
                               mirror_index(static_cast<long>(p.y) + dy, f.height()));
            const double b = f(mirror_index(static_cast<long>(q.x) + dx, f.width()),
                               mirror_index(static_cast<long>(q.y) + dy, f.height()));
            d += weights[k] * (a - b) * (a - b);
        }
    }
    return d;
}

WeightGraph::WeightGraph(std::size_t width, std::size_t height, std::size_t capacity,
                         const std::vector<std::vector<Neighbor>>& lists)
    : width_(width), height_(height), capacity_(capacity) {
    const std::size_t n = width * height;
    if (lists.size() != n) throw InvalidArgument("weight graph needs one list per pixel");
    offsets_.reserve(n + 1);
    offsets_.push_back(0);
    for (std::size_t p = 0; p < n; ++p) {
        const auto& list = lists[p];
        if (list.size() > capacity) throw InvalidArgument("neighbour list exceeds capacity");
        for (std::size_t a = 0; a < list.size(); ++a) {
            if (list[a].index >= n) throw InvalidArgument("neighbour index out of range");
            if (list[a].index == p) throw InvalidArgument("pixel listed as its own neighbour");
            if (!(list[a].weight >= 0.0) || !std::isfinite(list[a].weight)) {
                throw InvalidArgument("neighbour weights must be finite and nonnegative");
            }
            for (std::size_t b = 0; b < a; ++b) {
                if (list[b].index == list[a].index) throw InvalidArgument("duplicate neighbour");
            }
        }
        entries_.insert(entries_.end(), list.begin(), list.end());
        offsets_.push_back(entries_.size());
    }
}

bool operator==(const WeightGraph& a, const WeightGraph& b) {
    if (a.width_ != b.width_ || a.height_ != b.height_ || a.capacity_ != b.capacity_ ||
        a.offsets_ != b.offsets_ || a.entries_.size() != b.entries_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
        if (a.entries_[i].index != b.entries_[i].index ||
            std::bit_cast<std::uint64_t>(a.entries_[i].weight) !=
                std::bit_cast<std::uint64_t>(b.entries_[i].weight)) {
            return false;
        }
    }
    return true;
}

void WeightGraph::save(const std::filesystem::path& path) const {
    std::vector<unsigned char> out(std::begin(kGraphMagic), std::end(kGraphMagic));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(width_));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(height_));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(capacity_));
    for (std::size_t p = 0; p < pixel_count(); ++p) {
        const auto list = neighbors(p);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p));
        for (std::size_t k = 0; k < capacity_; ++k) {
            put<std::uint32_t>(out, k < list.size() ? list[k].index : kNoNeighbor);
        }
        for (std::size_t k = 0; k < capacity_; ++k) {
            put<double>(out, k < list.size() ? list[k].weight : 0.0);
        }
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed for " + path.string());
}

WeightGraph WeightGraph::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for reading");
    const std::vector<unsigned char> in{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    if (in.size() < sizeof(kGraphMagic) || std::memcmp(in.data(), kGraphMagic, sizeof(kGraphMagic)) != 0) {
        throw FormatError("not a weight graph file", 0);
    }
    std::size_t at = sizeof(kGraphMagic);
    const auto width = get<std::uint32_t>(in, at);
    const auto height = get<std::uint32_t>(in, at);
    const auto capacity = get<std::uint32_t>(in, at);
    const std::size_t n = std::size_t{width} * height;
    std::vector<std::vector<Neighbor>> lists(n);
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t row_at = at;
        if (get<std::uint32_t>(in, at) != p) throw FormatError("pixel rows out of order", row_at);
        std::vector<std::uint32_t> idx(capacity);
        for (auto& v : idx) v = get<std::uint32_t>(in, at);
        for (std::size_t k = 0; k < capacity; ++k) {
            const double w = get<double>(in, at);
            if (idx[k] != kNoNeighbor) lists[p].push_back({idx[k], w});
        }
    }
    if (at != in.size()) throw FormatError("trailing bytes in weight graph", at);
    try {
        return WeightGraph(width, height, capacity, lists);
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("invalid weight graph: ") + e.what(), sizeof(kGraphMagic));
    }
}

WeightGraph build_weight_graph(const Grid& f, const PatchConfig& cfg) {
    if (cfg.k_neighbors == 0) throw InvalidArgument("k_neighbors must be positive");
    cfg.validate();
    const std::size_t w = f.width();
    const std::size_t h = f.height();
    if (w * h < 2) throw InvalidArgument("weight graph needs at least two pixels");

    const int lo = patch_anchor(cfg.patch_edge);
    const std::vector<double> gauss = patch_gaussian(cfg);
    const PaddedImage pad(f, static_cast<std::size_t>(cfg.patch_edge));
    std::vector<long> taps;
    for (int dy = lo; dy < lo + cfg.patch_edge; ++dy) {
        for (int dx = lo; dx < lo + cfg.patch_edge; ++dx) {
            taps.push_back(static_cast<long>(dy) * static_cast<long>(pad.stride) + dx);
        }
    }
    const double inv_h2 = 1.0 / (cfg.filter_scale_h * cfg.filter_scale_h);
    const std::size_t k_max = static_cast<std::size_t>(cfg.k_neighbors);
    const long r = cfg.search_radius;

    std::vector<std::vector<Neighbor>> lists(w * h);
    parallel_for(h, [&](std::size_t y) {
        std::vector<std::pair<double, std::uint32_t>> candidates;
        for (std::size_t x = 0; x < w; ++x) {
            candidates.clear();
            const double* pp = pad.data.data() + pad.at(x, y);
            const long y0 = std::max(0L, static_cast<long>(y) - r);
            const long y1 = std::min(static_cast<long>(h) - 1, static_cast<long>(y) + r);
            const long x0 = std::max(0L, static_cast<long>(x) - r);
            const long x1 = std::min(static_cast<long>(w) - 1, static_cast<long>(x) + r);
            for (long qy = y0; qy <= y1; ++qy) {
                for (long qx = x0; qx <= x1; ++qx) {
                    if (qx == static_cast<long>(x) && qy == static_cast<long>(y)) continue;
                    const double* qq = pad.data.data() + pad.at(static_cast<std::size_t>(qx), static_cast<std::size_t>(qy));
                    double d = 0.0;
                    for (std::size_t k = 0; k < taps.size(); ++k) {
                        const double diff = pp[taps[k]] - qq[taps[k]];
                        d += gauss[k] * diff * diff;
                    }
                    candidates.emplace_back(d, static_cast<std::uint32_t>(qy * static_cast<long>(w) + qx));
                }
            }
            const std::size_t keep = std::min(k_max, candidates.size());
            std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(keep), candidates.end());
            // Weights relative to the closest patch; the shift cancels in the normalisation.
            const double d_min = candidates.front().first;
            auto& list = lists[y * w + x];
            list.reserve(keep);
            double total = 0.0;
            for (std::size_t k = 0; k < keep; ++k) {
                const double wgt = std::exp(-(candidates[k].first - d_min) * inv_h2);
                list.push_back({candidates[k].second, wgt});
                total += wgt;
            }
            for (auto& nb : list) nb.weight /= total;
        }
    });
    return WeightGraph(w, h, k_max, lists);
}

Grid nonlocal_flux(const Grid& u, const WeightGraph& graph, const IndicatorField& g, double eps) {
    if (u.width() != graph.width() || u.height() != graph.height()) {
        throw InvalidArgument("nonlocal flux: graph dimensions do not match the image");
    }
    require_same_shape(u, g.g, "nonlocal flux indicator");
    const std::size_t n = u.size();
    std::vector<double> inv_norm(n);
    parallel_for(n, [&](std::size_t p) {
        double s = 0.0;
        for (const Neighbor& nb : graph.neighbors(p)) {
            const double d = u[p] - u[nb.index];
            s += nb.weight * d * d;
        }
        inv_norm[p] = 1.0 / std::sqrt(s + eps);
    });
    Grid out(u.width(), u.height());
    parallel_for(n, [&](std::size_t p) {
        double s = 0.0;
        for (const Neighbor& nb : graph.neighbors(p)) {
            const double alpha = nb.weight * std::fabs(inv_norm[p] + inv_norm[nb.index]);
            s += alpha * (u[nb.index] - u[p]);
        }
        out[p] = g[p] * s;
    });
    return out;
}

SymmetricGraph::SymmetricGraph(std::size_t width, std::size_t height, std::vector<Edge> edges)
    : width_(width), height_(height), edges_(std::move(edges)) {
    const std::size_t n = width * height;
    for (const Edge& e : edges_) {
        if (!(e.p < e.q) || e.q >= n) throw InvalidArgument("edges must satisfy p < q < pixel count");
    }
}

SymmetricGraph SymmetricGraph::from(const WeightGraph& graph) {
    std::vector<Edge> directed;
    directed.reserve(graph.edge_count());
    for (std::size_t p = 0; p < graph.pixel_count(); ++p) {
        for (const Neighbor& nb : graph.neighbors(p)) {
            const auto a = static_cast<std::uint32_t>(p);
            directed.push_back({std::min(a, nb.index), std::max(a, nb.index), 0.5 * nb.weight});
        }
    }
    std::sort(directed.begin(), directed.end(), [](const Edge& a, const Edge& b) {
        return a.p != b.p ? a.p < b.p : a.q < b.q;
    });
    std::vector<Edge> merged;
    merged.reserve(directed.size());
    for (const Edge& e : directed) {
        if (!merged.empty() && merged.back().p == e.p && merged.back().q == e.q) {
            merged.back().weight += e.weight;
        } else {
            merged.push_back(e);
        }
    }
    return SymmetricGraph(graph.width(), graph.height(), std::move(merged));
}

}  // namespace despeckle
