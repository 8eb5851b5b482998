#pragma once

#include <cstdint>
#include <vector>

#include "vcnet/error.hpp"

namespace vcnet {

// Row-major 2D raster of bytes. Used for grayscale images (0..255), binary
// vessel rasters (0/1) and label masks (0/1/2).
class Raster {
public:
    Raster() = default;
    Raster(int height, int width, std::uint8_t fill = 0)
        : h_(height), w_(width), px_(static_cast<std::size_t>(height) * width, fill) {
        if (height <= 0 || width <= 0) throw Error("image.Raster", "non-positive dimensions");
    }

    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return px_.size(); }
    bool same_shape(const Raster& o) const { return h_ == o.h_ && w_ == o.w_; }

    std::uint8_t operator()(int y, int x) const { return px_[static_cast<std::size_t>(y) * w_ + x]; }
    std::uint8_t& operator()(int y, int x) { return px_[static_cast<std::size_t>(y) * w_ + x]; }
    std::uint8_t at(std::size_t i) const { return px_[i]; }
    std::uint8_t& at(std::size_t i) { return px_[i]; }

    bool in_bounds(int y, int x) const { return y >= 0 && y < h_ && x >= 0 && x < w_; }

    const std::vector<std::uint8_t>& pixels() const { return px_; }
    std::vector<std::uint8_t>& pixels() { return px_; }

    bool operator==(const Raster& o) const = default;

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<std::uint8_t> px_;
};

// Mask label values.
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kConnected = 1;
inline constexpr std::uint8_t kNonConnected = 2;
inline constexpr int kNumClasses = 3;

} // namespace vcnet
