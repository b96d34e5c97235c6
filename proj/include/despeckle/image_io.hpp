#pragma once

#include <filesystem>

#include "despeckle/grid.hpp"

namespace despeckle {

/// Reads binary (P5) or ASCII (P2) graymaps with maxval 255; byte k maps to k.
Grid read_pgm(const std::filesystem::path& path);

/// Writes binary P5, maxval 255. Values are clamped to [0, 255] and rounded
/// half away from zero.
void write_pgm(const Grid& g, const std::filesystem::path& path);

/// Reads a grayscale little-endian portable float map ("Pf", negative scale).
Grid read_pfm(const std::filesystem::path& path);

/// Writes "Pf", scale -1.0, scanlines bottom to top.
void write_pfm(const Grid& g, const std::filesystem::path& path);

/// Dispatches on the file extension: ".pfm" is a float map, anything else a graymap.
Grid read_image(const std::filesystem::path& path);
void write_image(const Grid& g, const std::filesystem::path& path);

}  // namespace despeckle
