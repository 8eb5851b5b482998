#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace vcnet {

inline constexpr double kEdtInf = std::numeric_limits<double>::infinity();

// Exact squared Euclidean distance transform (two-pass lower-envelope method).
// For every pixel, the squared distance to the nearest pixel with feature!=0,
// measured between pixel centers. All-zero input yields +inf everywhere.
std::vector<double> squared_edt(const std::vector<std::uint8_t>& feature, int h, int w);

} // namespace vcnet
