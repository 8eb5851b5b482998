#pragma once

#include <string>

#include "vcnet/image.hpp"

namespace vcnet::pngio {

// Writes an 8-bit grayscale PNG. Deterministic: fixed zlib settings, no
// ancillary chunks.
void write_gray(const std::string& path, const Raster& img);

// Writes an 8-bit paletted PNG; pixel values are palette indices. The default
// palette maps 0 -> black, 1 -> red, 2 -> white (background / connected /
// non-connected).
void write_mask(const std::string& path, const Raster& mask);

// Reads an 8-bit grayscale PNG (rejects other layouts).
Raster read_gray(const std::string& path);

// Reads an 8-bit paletted PNG as raw palette indices (rejects other layouts).
Raster read_mask(const std::string& path);

} // namespace vcnet::pngio
