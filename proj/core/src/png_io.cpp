#include "vcnet/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace vcnet::pngio {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& op, const std::string& path, const std::string& why) {
    throw Error("png_io." + op, path + ": " + why);
}

void write_png(const std::string& path, const Raster& img, int color_type,
               const png_color* palette, int palette_len) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) fail("write", path, "cannot open for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail("write", path, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail("write", path, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("write", path, "libpng error");
    }

    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, img.width(), img.height(), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (palette) png_set_PLTE(png, info, const_cast<png_color*>(palette), palette_len);
    png_write_info(png, info);

    std::vector<png_bytep> rows(img.height());
    auto& px = const_cast<Raster&>(img).pixels();
    for (int y = 0; y < img.height(); ++y)
        rows[y] = px.data() + static_cast<std::size_t>(y) * img.width();
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Raster read_png(const std::string& path, int expected_color_type, const char* op) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(op, path, "cannot open for reading");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(op, path, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(op, path, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(op, path, "libpng error (not a PNG?)");
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (color_type != expected_color_type || bit_depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(op, path, "unsupported PNG layout (need 8-bit, color type " +
                           std::to_string(expected_color_type) + ")");
    }

    Raster out(static_cast<int>(png_get_image_height(png, info)),
               static_cast<int>(png_get_image_width(png, info)));
    std::vector<png_bytep> rows(out.height());
    for (int y = 0; y < out.height(); ++y)
        rows[y] = out.pixels().data() + static_cast<std::size_t>(y) * out.width();
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

} // namespace

void write_gray(const std::string& path, const Raster& img) {
    write_png(path, img, PNG_COLOR_TYPE_GRAY, nullptr, 0);
}

void write_mask(const std::string& path, const Raster& mask) {
    // Paper-style colors: black background, red connected, white non-connected.
    static const png_color palette[3] = {{0, 0, 0}, {220, 20, 60}, {255, 255, 255}};
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask.at(i) > 2) fail("write_mask", path, "mask value outside {0,1,2}");
    write_png(path, mask, PNG_COLOR_TYPE_PALETTE, palette, 3);
}

Raster read_gray(const std::string& path) {
    return read_png(path, PNG_COLOR_TYPE_GRAY, "read_gray");
}

Raster read_mask(const std::string& path) {
    return read_png(path, PNG_COLOR_TYPE_PALETTE, "read_mask");
}

} // namespace vcnet::pngio
