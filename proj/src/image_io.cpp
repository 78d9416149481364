#include "mock3d/image_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "mock3d/error.hpp"

namespace mock3d {
namespace {

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
    auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cursor->offset + count > cursor->bytes.size()) {
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(out, cursor->bytes.data() + cursor->offset, count);
    cursor->offset += count;
}

void write_to_memory(png_structp png, png_bytep data, png_size_t count) {
    auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

void flush_noop(png_structp) {}

void error_to_longjmp(png_structp png, png_const_charp message) {
    auto* text = static_cast<std::string*>(png_get_error_ptr(png));
    if (text) *text = message ? message : "libpng error";
    png_longjmp(png, 1);
}

void warning_ignore(png_structp, png_const_charp) {}

// Shared writer for 8-bit gray and RGBA rows.
Bytes encode_rows(int width, int height, int color_type, int channels,
                  const std::uint8_t* pixels, bool srgb) {
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("cannot encode an empty image");
    }
    std::string error_text;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error_text,
                                              error_to_longjmp, warning_ignore);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    Bytes out;
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG encode failed: " + error_text);
    }
    png_set_write_fn(png, &out, write_to_memory, flush_noop);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    if (srgb) png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
    const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(pixels + stride * static_cast<std::size_t>(y));
    }
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

} // namespace

PngImage decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw DecodeError("not a PNG file");
    }
    std::string error_text;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error_text,
                                             error_to_longjmp, warning_ignore);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    ReadCursor cursor{bytes, 0};
    PngImage image;
    std::vector<std::uint8_t> buffer;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("PNG decode failed: " + error_text);
    }
    png_set_read_fn(png, &cursor, read_from_memory);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    const bool sixteen = bit_depth == 16;
    if (sixteen) png_set_swap(png);  // little-endian uint16 in memory
    png_set_add_alpha(png, sixteen ? 0xFFFF : 0xFF, PNG_FILLER_AFTER);
    png_read_update_info(png, info);

    const std::size_t row_bytes = png_get_rowbytes(png, info);
    const std::size_t expected = static_cast<std::size_t>(width) * (sixteen ? 8u : 4u);
    if (row_bytes != expected) {
        png_error(png, "unsupported PNG layout");
    }
    buffer.resize(row_bytes * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + row_bytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (width == 0 || height == 0) throw DecodeError("PNG has zero size");
    image.max_value = sixteen ? 65535 : 255;
    image.pixels = Raster<std::array<std::uint16_t, 4>>(static_cast<int>(width), static_cast<int>(height));
    for (png_uint_32 y = 0; y < height; ++y) {
        const std::uint8_t* row = rows[y];
        for (png_uint_32 x = 0; x < width; ++x) {
            auto& px = image.pixels(static_cast<int>(x), static_cast<int>(y));
            for (int c = 0; c < 4; ++c) {
                if (sixteen) {
                    std::uint16_t v;
                    std::memcpy(&v, row + (x * 4 + static_cast<unsigned>(c)) * 2, 2);
                    px[static_cast<std::size_t>(c)] = v;
                } else {
                    px[static_cast<std::size_t>(c)] = row[x * 4 + static_cast<unsigned>(c)];
                }
            }
        }
    }
    return image;
}

PngImage read_png(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    try {
        return decode_png(bytes);
    } catch (const DecodeError& e) {
        throw DecodeError(path.string() + ": " + e.what());
    }
}

Bytes encode_png(const Rgba8Image& image, const PngWriteOptions& options) {
    static_assert(sizeof(Rgba8) == 4);
    return encode_rows(image.width(), image.height(), PNG_COLOR_TYPE_RGB_ALPHA, 4,
                       reinterpret_cast<const std::uint8_t*>(image.data().data()), options.srgb);
}

Bytes encode_png_gray(const Raster<std::uint8_t>& image) {
    return encode_rows(image.width(), image.height(), PNG_COLOR_TYPE_GRAY, 1, image.data().data(),
                       false);
}

void write_png(const std::filesystem::path& path, const Rgba8Image& image,
               const PngWriteOptions& options) {
    write_file(path, encode_png(image, options));
}

void write_png_gray(const std::filesystem::path& path, const Raster<std::uint8_t>& image) {
    write_file(path, encode_png_gray(image));
}

Rgba8Image to_rgba8(const PngImage& image) {
    Rgba8Image out(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const auto& px = image.pixels(x, y);
            auto narrow = [&](std::uint16_t v) -> std::uint8_t {
                if (image.max_value == 255) return static_cast<std::uint8_t>(v);
                return static_cast<std::uint8_t>(std::lround(v * 255.0 / image.max_value));
            };
            out(x, y) = {narrow(px[0]), narrow(px[1]), narrow(px[2]), narrow(px[3])};
        }
    }
    return out;
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace mock3d
