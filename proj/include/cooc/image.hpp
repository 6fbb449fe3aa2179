#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cooc {

// 8-bit raster, channel-interleaved, row-major. A pixel's samples are
// contiguous: data[(y*width + x)*channels + c]. channels is 1 (gray)
// or 3 (RGB). See docs/FORMATS.md.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> data;

    Image() = default;
    Image(int w, int h, int c)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, 0) {}

    uint8_t& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    uint8_t at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool same_pixels(const Image& o) const {
        return width == o.width && height == o.height &&
               channels == o.channels && data == o.data;
    }
};

// Decodes PNG (8-bit gray/RGB; palette expanded, alpha stripped),
// binary PPM (P6) and PGM (P5) with maxval 255.
// Errors: unreadable_file / unsupported_format / corrupt_stream.
Image load_image(const std::string& path);

// Encodes P6 for 3-channel images, P5 for single-channel.
// Round-trips bit-exactly through load_image.
void save_image_pnm(const std::string& path, const Image& img);

std::vector<uint8_t> encode_pnm(const Image& img);
Image decode_pnm(const uint8_t* bytes, size_t len);

} // namespace cooc
