#include "despeckle/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "despeckle/errors.hpp"

namespace despeckle {
namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::string& header,
          const std::vector<unsigned char>& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

// Netpbm header tokenizer: whitespace separated, '#' comments run to end of line.
class HeaderReader {
public:
    explicit HeaderReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

    std::size_t pos() const noexcept { return pos_; }

    void skip_space_and_comments(bool allow_comments) {
        while (pos_ < bytes_.size()) {
            const unsigned char c = bytes_[pos_];
            if (allow_comments && c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string token(bool allow_comments = true) {
        skip_space_and_comments(allow_comments);
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) &&
               !(allow_comments && bytes_[pos_] == '#')) {
            ++pos_;
        }
        if (start == pos_) throw FormatError("unexpected end of header", pos_);
        return {bytes_.begin() + static_cast<long>(start), bytes_.begin() + static_cast<long>(pos_)};
    }

    std::size_t positive_integer(const char* what) {
        const std::size_t at = (skip_space_and_comments(true), pos_);
        const std::string t = token();
        std::size_t value = 0;
        for (char c : t) {
            if (!std::isdigit(static_cast<unsigned char>(c))) {
                throw FormatError(std::string("malformed ") + what + " '" + t + "'", at);
            }
            value = value * 10 + static_cast<std::size_t>(c - '0');
            if (value > (std::size_t{1} << 31)) {
                throw FormatError(std::string(what) + " out of range", at);
            }
        }
        if (value == 0) throw FormatError(std::string(what) + " must be positive", at);
        return value;
    }

    // Exactly one whitespace byte separates the header from a binary payload.
    void single_whitespace() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw FormatError("missing whitespace after header", pos_);
        }
        ++pos_;
    }

private:
    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 0;
};

bool has_extension(const std::filesystem::path& p, const char* ext) {
    std::string e = p.extension().string();
    for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e == ext;
}

}  // namespace

Grid read_pgm(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = slurp(path);
    HeaderReader hdr(bytes);
    const std::string magic = hdr.token();
    if (magic != "P5" && magic != "P2") {
        throw FormatError("not a graymap (magic '" + magic + "')", 0);
    }
    const std::size_t width = hdr.positive_integer("width");
    const std::size_t height = hdr.positive_integer("height");
    const std::size_t maxval_at = (hdr.skip_space_and_comments(true), hdr.pos());
    const std::size_t maxval = hdr.positive_integer("maxval");
    if (maxval != 255) {
        throw FormatError("maxval " + std::to_string(maxval) + " unsupported, expected 255",
                          maxval_at);
    }
    const std::size_t n = width * height;
    std::vector<double> values(n);
    if (magic == "P5") {
        hdr.single_whitespace();
        const std::size_t start = hdr.pos();
        if (bytes.size() - start < n) {
            throw FormatError("truncated payload: expected " + std::to_string(n) + " bytes, found " +
                                  std::to_string(bytes.size() - start),
                              bytes.size());
        }
        for (std::size_t i = 0; i < n; ++i) values[i] = bytes[start + i];
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            hdr.skip_space_and_comments(true);
            const std::size_t at = hdr.pos();
            if (at >= bytes.size()) {
                throw FormatError("truncated payload after " + std::to_string(i) + " samples", at);
            }
            const std::string t = hdr.token();
            std::size_t v = 0;
            for (char c : t) {
                if (!std::isdigit(static_cast<unsigned char>(c))) {
                    throw FormatError("malformed sample '" + t + "'", at);
                }
                v = v * 10 + static_cast<std::size_t>(c - '0');
                if (v > 255) throw FormatError("sample exceeds maxval", at);
            }
            values[i] = static_cast<double>(v);
        }
    }
    return Grid(width, height, std::move(values));
}

void write_pgm(const Grid& g, const std::filesystem::path& path) {
    std::vector<unsigned char> payload(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = std::clamp(g[i], 0.0, 255.0);
        payload[i] = static_cast<unsigned char>(std::lround(v));
    }
    dump(path, "P5\n" + std::to_string(g.width()) + " " + std::to_string(g.height()) + "\n255\n",
         payload);
}

Grid read_pfm(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = slurp(path);
    HeaderReader hdr(bytes);
    const std::string magic = hdr.token(false);
    if (magic == "PF") throw UnsupportedFormat("colour PFM is not supported", 0);
    if (magic != "Pf") throw FormatError("not a portable float map (magic '" + magic + "')", 0);
    const std::size_t width = hdr.positive_integer("width");
    const std::size_t height = hdr.positive_integer("height");
    hdr.skip_space_and_comments(false);
    const std::size_t scale_at = hdr.pos();
    const std::string scale_text = hdr.token(false);
    double scale = 0.0;
    try {
        std::size_t used = 0;
        scale = std::stod(scale_text, &used);
        if (used != scale_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw FormatError("malformed scale '" + scale_text + "'", scale_at);
    }
    if (!(scale < 0.0)) {
        throw UnsupportedFormat("big-endian PFM (positive scale) is not supported", scale_at);
    }
    hdr.single_whitespace();
    const std::size_t start = hdr.pos();
    const std::size_t n = width * height;
    if (bytes.size() - start < n * 4) {
        throw FormatError("truncated payload: expected " + std::to_string(n * 4) + " bytes",
                          bytes.size());
    }
    Grid g(width, height);
    for (std::size_t row = 0; row < height; ++row) {
        const std::size_t y = height - 1 - row;
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t at = start + 4 * (row * width + x);
            std::uint32_t bits = static_cast<std::uint32_t>(bytes[at]) |
                                 static_cast<std::uint32_t>(bytes[at + 1]) << 8 |
                                 static_cast<std::uint32_t>(bytes[at + 2]) << 16 |
                                 static_cast<std::uint32_t>(bytes[at + 3]) << 24;
            const float v = std::bit_cast<float>(bits);
            if (!std::isfinite(v)) throw FormatError("non-finite sample", at);
            g(x, y) = static_cast<double>(v);
        }
    }
    return g;
}

void write_pfm(const Grid& g, const std::filesystem::path& path) {
    std::vector<unsigned char> payload(g.size() * 4);
    std::size_t at = 0;
    for (std::size_t row = 0; row < g.height(); ++row) {
        const std::size_t y = g.height() - 1 - row;
        for (std::size_t x = 0; x < g.width(); ++x) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(g(x, y)));
            for (int b = 0; b < 4; ++b) payload[at++] = static_cast<unsigned char>(bits >> (8 * b));
        }
    }
    dump(path, "Pf\n" + std::to_string(g.width()) + " " + std::to_string(g.height()) + "\n-1.0\n",
         payload);
}

Grid read_image(const std::filesystem::path& path) {
    return has_extension(path, ".pfm") ? read_pfm(path) : read_pgm(path);
}

void write_image(const Grid& g, const std::filesystem::path& path) {
    if (has_extension(path, ".pfm")) {
        write_pfm(g, path);
    } else {
        write_pgm(g, path);
    }
}

}  // namespace despeckle
