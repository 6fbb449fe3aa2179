#include <doctest.h>

#include <cstdint>
#include <vector>

#include "cooc/error.hpp"
#include "cooc/image.hpp"
#include "test_util.hpp"

using namespace cooc;
using namespace testutil;

namespace {

// Tiny fixtures written by an external encoder, embedded as bytes.
const std::vector<uint8_t> kGray1x1Png = {137,80,78,71,13,10,26,10,0,0,0,13,73,72,68,82,0,0,0,1,0,0,0,1,8,0,0,0,0,58,126,155,85,0,0,0,10,73,68,65,84,120,156,99,104,0,0,0,130,0,129,119,205,114,182,0,0,0,0,73,69,78,68,174,66,96,130};
const std::vector<uint8_t> kRgb2x2Png = {137,80,78,71,13,10,26,10,0,0,0,13,73,72,68,82,0,0,0,2,0,0,0,2,8,2,0,0,0,253,212,154,115,0,0,0,22,73,68,65,84,120,156,99,96,96,96,248,255,255,63,35,151,136,156,156,156,28,0,28,198,3,149,236,229,97,159,0,0,0,0,73,69,78,68,174,66,96,130};
const std::vector<uint8_t> kGray16Png = {137,80,78,71,13,10,26,10,0,0,0,13,73,72,68,82,0,0,0,1,0,0,0,1,16,0,0,0,0,106,238,71,22,0,0,0,11,73,68,65,84,120,156,99,152,227,0,0,1,123,0,221,64,230,5,129,0,0,0,0,73,69,78,68,174,66,96,130};

} // namespace

TEST_CASE("hand-written 2x2 P6 decodes to the exact pixels") {
    const std::string ppm = "P6\n2 2\n255\n";
    std::vector<uint8_t> bytes(ppm.begin(), ppm.end());
    const uint8_t px[12] = {0, 0, 0, 255, 255, 255, 10, 20, 30, 40, 50, 60};
    bytes.insert(bytes.end(), px, px + 12);

    TempDir td("image_ppm");
    write_bytes(td.file("a.ppm"), bytes);
    const Image img = load_image(td.file("a.ppm"));
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.channels == 3);
    CHECK(img.data == std::vector<uint8_t>(px, px + 12));
}

TEST_CASE("PNM comments and whitespace are tolerated") {
    const std::string ppm = "P5\n# a comment\n 3 # widths\n1\n255\n";
    std::vector<uint8_t> bytes(ppm.begin(), ppm.end());
    const uint8_t px[3] = {7, 8, 9};
    bytes.insert(bytes.end(), px, px + 3);
    const Image img = decode_pnm(bytes.data(), bytes.size());
    CHECK(img.width == 3);
    CHECK(img.height == 1);
    CHECK(img.channels == 1);
    CHECK(img.data[2] == 9);
}

TEST_CASE("PNM round-trip is bit-exact on random images") {
    for (int i = 0; i < 20; ++i) {
        const int ch = i % 2 ? 1 : 3;
        const Image img = random_image(1 + i * 3 % 40, 1 + i * 7 % 33, ch, i);
        const std::vector<uint8_t> enc = encode_pnm(img);
        const Image back = decode_pnm(enc.data(), enc.size());
        CHECK(back.same_pixels(img));
    }
}

TEST_CASE("1x1 grayscale PNG decodes to value 128") {
    TempDir td("image_png");
    write_bytes(td.file("g.png"), kGray1x1Png);
    const Image img = load_image(td.file("g.png"));
    CHECK(img.width == 1);
    CHECK(img.height == 1);
    CHECK(img.channels == 1);
    CHECK(img.data == std::vector<uint8_t>{128});
}

TEST_CASE("RGB PNG decodes to the same pixels as the equivalent PPM") {
    TempDir td("image_png_rgb");
    write_bytes(td.file("c.png"), kRgb2x2Png);
    const Image img = load_image(td.file("c.png"));
    CHECK(img.width == 2);
    CHECK(img.channels == 3);
    const uint8_t px[12] = {0, 0, 0, 255, 255, 255, 10, 20, 30, 40, 50, 60};
    CHECK(img.data == std::vector<uint8_t>(px, px + 12));
}

TEST_CASE("error paths are distinct") {
    TempDir td("image_errors");

    SUBCASE("missing file is unreadable") {
        try {
            load_image(td.file("nope.png"));
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::unreadable_file);
        }
    }

    SUBCASE("unknown magic is unsupported") {
        write_bytes(td.file("x.dat"), {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
        try {
            load_image(td.file("x.dat"));
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::unsupported_format);
        }
    }

    SUBCASE("truncated PNG stream is corrupt") {
        std::vector<uint8_t> cut(kRgb2x2Png.begin(), kRgb2x2Png.begin() + 40);
        write_bytes(td.file("t.png"), cut);
        try {
            load_image(td.file("t.png"));
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::corrupt_stream);
        }
    }

    SUBCASE("16-bit PNG is rejected as unsupported") {
        write_bytes(td.file("deep.png"), kGray16Png);
        try {
            load_image(td.file("deep.png"));
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::unsupported_format);
        }
    }

    SUBCASE("truncated PNM raster is corrupt") {
        const std::string hdr = "P6\n4 4\n255\nxx";
        write_bytes(td.file("short.ppm"), {hdr.begin(), hdr.end()});
        try {
            load_image(td.file("short.ppm"));
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::corrupt_stream);
        }
    }

    SUBCASE("16-bit PNM is rejected as unsupported") {
        const std::string hdr = "P5\n2 2\n65535\n";
        std::vector<uint8_t> b(hdr.begin(), hdr.end());
        b.resize(b.size() + 8, 0);
        try {
            decode_pnm(b.data(), b.size());
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::unsupported_format);
        }
    }
}
