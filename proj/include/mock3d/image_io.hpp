#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mock3d/raster.hpp"

namespace mock3d {

/// A decoded PNG at its native channel depth, expanded to RGBA.
/// `max_value` is 255 for 8-bit sources and 65535 for 16-bit sources.
struct PngImage {
    Raster<std::array<std::uint16_t, 4>> pixels;
    int max_value = 255;

    int width() const { return pixels.width(); }
    int height() const { return pixels.height(); }
    /// Channel c of pixel (x, y) as a ratio in [0, 1].
    double ratio(int x, int y, int c) const {
        return static_cast<double>(pixels(x, y)[static_cast<std::size_t>(c)]) / max_value;
    }
};

using Bytes = std::vector<std::uint8_t>;

PngImage decode_png(std::span<const std::uint8_t> bytes);
PngImage read_png(const std::filesystem::path& path);

struct PngWriteOptions {
    /// Tags the file as sRGB; used for rendered color output, never for data maps.
    bool srgb = false;
};

Bytes encode_png(const Rgba8Image& image, const PngWriteOptions& options = {});
Bytes encode_png_gray(const Raster<std::uint8_t>& image);
void write_png(const std::filesystem::path& path, const Rgba8Image& image,
               const PngWriteOptions& options = {});
void write_png_gray(const std::filesystem::path& path, const Raster<std::uint8_t>& image);

/// Narrows a decoded image to 8 bits per channel (16-bit values are rounded).
Rgba8Image to_rgba8(const PngImage& image);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace mock3d
