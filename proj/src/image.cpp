#include "cooc/image.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <png.h>

#include "cooc/error.hpp"

namespace cooc {

namespace {

bool is_pnm_magic(const uint8_t* b, size_t len) {
    return len >= 2 && b[0] == 'P' && (b[1] == '5' || b[1] == '6');
}

// Skips PNM whitespace and '#' comments, then parses one decimal field.
int parse_pnm_int(const uint8_t* b, size_t len, size_t& pos) {
    while (pos < len) {
        if (std::isspace(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < len && b[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= len || !std::isdigit(b[pos]))
        throw Error(ErrorKind::corrupt_stream, "malformed PNM header");
    long v = 0;
    while (pos < len && std::isdigit(b[pos])) {
        v = v * 10 + (b[pos] - '0');
        if (v > 1 << 30)
            throw Error(ErrorKind::corrupt_stream, "PNM header value out of range");
        ++pos;
    }
    return static_cast<int>(v);
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;

    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

void png_error_fn(png_structp png, png_const_charp) {
    longjmp(png_jmpbuf(png), 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

Image load_png(const std::string& path) {
    PngReader r;
    r.fp = std::fopen(path.c_str(), "rb");
    if (!r.fp)
        throw Error(ErrorKind::unreadable_file, "cannot open " + path);

    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                   png_error_fn, png_warning_fn);
    if (!r.png)
        throw Error(ErrorKind::io_failure, "libpng init failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info)
        throw Error(ErrorKind::io_failure, "libpng init failed");

    Image img;
    std::vector<png_bytep> row_ptrs;

    if (setjmp(png_jmpbuf(r.png)))
        throw Error(ErrorKind::corrupt_stream, "corrupt PNG stream: " + path);

    png_init_io(r.png, r.fp);
    png_read_info(r.png, r.info);

    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);
    if (bit_depth == 16)
        throw Error(ErrorKind::unsupported_format,
                    "16-bit PNG not supported: " + path);

    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(r.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(r.png);
    if (color_type & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);

    const int channels = png_get_channels(r.png, r.info);
    if (channels != 1 && channels != 3)
        throw Error(ErrorKind::unsupported_format,
                    "unsupported PNG channel layout: " + path);

    img.width = static_cast<int>(png_get_image_width(r.png, r.info));
    img.height = static_cast<int>(png_get_image_height(r.png, r.info));
    img.channels = channels;
    img.data.resize(static_cast<size_t>(img.width) * img.height * channels);

    row_ptrs.resize(img.height);
    const size_t stride = static_cast<size_t>(img.width) * channels;
    for (int y = 0; y < img.height; ++y)
        row_ptrs[y] = img.data.data() + y * stride;
    png_read_image(r.png, row_ptrs.data());
    png_read_end(r.png, nullptr);

    return img;
}

} // namespace

Image decode_pnm(const uint8_t* bytes, size_t len) {
    if (len < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw Error(ErrorKind::unsupported_format, "not a binary PNM stream");
    const int channels = bytes[1] == '6' ? 3 : 1;
    size_t pos = 2;
    const int width = parse_pnm_int(bytes, len, pos);
    const int height = parse_pnm_int(bytes, len, pos);
    const int maxval = parse_pnm_int(bytes, len, pos);
    if (width <= 0 || height <= 0)
        throw Error(ErrorKind::corrupt_stream, "bad PNM dimensions");
    if (maxval != 255)
        throw Error(ErrorKind::unsupported_format,
                    "only 8-bit PNM supported (maxval 255)");
    if (pos >= len || !std::isspace(bytes[pos]))
        throw Error(ErrorKind::corrupt_stream, "malformed PNM header");
    ++pos; // single whitespace separates header and raster

    Image img(width, height, channels);
    if (len - pos < img.data.size())
        throw Error(ErrorKind::corrupt_stream, "truncated PNM raster");
    std::memcpy(img.data.data(), bytes + pos, img.data.size());
    return img;
}

std::vector<uint8_t> encode_pnm(const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw Error(ErrorKind::invalid_argument, "PNM supports 1 or 3 channels");
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "%s\n%d %d\n255\n",
                                img.channels == 3 ? "P6" : "P5",
                                img.width, img.height);
    std::vector<uint8_t> out(header, header + n);
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

void save_image_pnm(const std::string& path, const Image& img) {
    const std::vector<uint8_t> bytes = encode_pnm(img);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw Error(ErrorKind::io_failure, "cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f)
        throw Error(ErrorKind::io_failure, "short write: " + path);
}

Image load_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f || std::filesystem::is_directory(path))
        throw Error(ErrorKind::unreadable_file, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (!f.good() && !f.eof())
        throw Error(ErrorKind::unreadable_file, "read failed: " + path);

    static const uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0)
        return load_png(path);
    if (is_pnm_magic(bytes.data(), bytes.size()))
        return decode_pnm(bytes.data(), bytes.size());
    throw Error(ErrorKind::unsupported_format,
                "unsupported image format: " + path);
}

} // namespace cooc
