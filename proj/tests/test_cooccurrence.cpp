#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cooc/cooccurrence.hpp"
#include "cooc/error.hpp"
#include "cooc/reference.hpp"
#include "test_util.hpp"

using namespace cooc;
using namespace testutil;

namespace {

Image from_rows(const std::vector<std::vector<uint8_t>>& rows) {
    Image img(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()), 1);
    for (size_t y = 0; y < rows.size(); ++y)
        for (size_t x = 0; x < rows[y].size(); ++x)
            img.at(static_cast<int>(y), static_cast<int>(x), 0) = rows[y][x];
    return img;
}

Image flip_horizontal(const Image& img) {
    Image out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
    return out;
}

Image flip_vertical(const Image& img) {
    Image out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(img.height - 1 - y, x, c);
    return out;
}

Image rot90_cw(const Image& img) {
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(img.height - 1 - x, y, c);
    return out;
}

std::vector<uint64_t> transpose_counts(const std::vector<uint64_t>& c, int bins) {
    std::vector<uint64_t> t(c.size());
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j)
            t[static_cast<size_t>(j) * bins + i] = c[static_cast<size_t>(i) * bins + j];
    return t;
}

} // namespace

TEST_CASE("2x2 example: horizontal pairs land at (0,1) and (2,3)") {
    const Image img = from_rows({{0, 1}, {2, 3}});
    const CooccurrenceMatrix m =
        cooccurrence(channel_view(img, 0), Direction::horizontal, 256);
    CHECK(m.total() == 2);
    CHECK(m.counts[0 * 256 + 1] == 1);
    CHECK(m.counts[2 * 256 + 3] == 1);
}

TEST_CASE("2x2 example: vertical pairs land at (0,2) and (1,3)") {
    const Image img = from_rows({{0, 1}, {2, 3}});
    const CooccurrenceMatrix m =
        cooccurrence(channel_view(img, 0), Direction::vertical, 256);
    CHECK(m.total() == 2);
    CHECK(m.counts[0 * 256 + 2] == 1);
    CHECK(m.counts[1 * 256 + 3] == 1);
}

TEST_CASE("constant channel: single spike of (H-1)*W vertical pairs") {
    const int H = 5, W = 7;
    Image img(W, H, 1);
    for (auto& v : img.data) v = 9;
    const CooccurrenceMatrix m =
        cooccurrence(channel_view(img, 0), Direction::vertical, 256);
    CHECK(m.counts[9 * 256 + 9] == static_cast<uint64_t>((H - 1) * W));
    CHECK(m.total() == static_cast<uint64_t>((H - 1) * W));
}

TEST_CASE("kernel matches the serial reference on random images") {
    for (int i = 0; i < 40; ++i) {
        Rng rng = Rng::from_stream(0xA0, i);
        const int w = 1 + static_cast<int>(rng.next_below(80));
        const int h = 1 + static_cast<int>(rng.next_below(80));
        const Image img = random_image(w, h, 3, 100 + i);
        for (int bins : {64, 256}) {
            for (Direction dir : {Direction::horizontal, Direction::vertical}) {
                for (int c = 0; c < 3; ++c) {
                    const auto a = cooccurrence(channel_view(img, c), dir, bins);
                    const auto b =
                        reference::cooccurrence_serial(channel_view(img, c), dir, bins);
                    CHECK(a.counts == b.counts);
                }
            }
        }
    }
}

TEST_CASE("count conservation: H*(W-1) and (H-1)*W exactly") {
    for (int i = 0; i < 25; ++i) {
        Rng rng = Rng::from_stream(0xB0, i);
        const int w = 1 + static_cast<int>(rng.next_below(60));
        const int h = 1 + static_cast<int>(rng.next_below(60));
        const Image img = random_image(w, h, 1, 200 + i);
        const auto mh = cooccurrence(channel_view(img, 0), Direction::horizontal, 64);
        const auto mv = cooccurrence(channel_view(img, 0), Direction::vertical, 64);
        CHECK(mh.total() == static_cast<uint64_t>(h) * (w - 1));
        CHECK(mv.total() == static_cast<uint64_t>(h - 1) * w);
    }
}

TEST_CASE("quantization: B=64 buckets values by floor(v/4)") {
    const Image img = from_rows({{0, 3}, {4, 255}});
    const CooccurrenceMatrix m =
        cooccurrence(channel_view(img, 0), Direction::horizontal, 64);
    CHECK(m.counts[0 * 64 + 0] == 1);  // (0,3) -> (0,0)
    CHECK(m.counts[1 * 64 + 63] == 1); // (4,255) -> (1,63)
}

TEST_CASE("degenerate 1-wide and 1-tall channels") {
    const Image col = from_rows({{1}, {2}, {3}});
    const auto h = cooccurrence(channel_view(col, 0), Direction::horizontal, 256);
    CHECK(h.total() == 0);
    const auto v = cooccurrence(channel_view(col, 0), Direction::vertical, 256);
    CHECK(v.total() == 2);

    ChannelView empty{};
    CHECK_THROWS_AS(cooccurrence(empty, Direction::horizontal, 256), Error);
}

TEST_CASE("bins must divide 256") {
    const Image img = from_rows({{1, 2}});
    CHECK_THROWS_AS(cooccurrence(channel_view(img, 0), Direction::horizontal, 100),
                    Error);
    CHECK_THROWS_AS(cooccurrence(channel_view(img, 0), Direction::horizontal, 0),
                    Error);
}

TEST_CASE("tensor planes are ordered [R-h,G-h,B-h,R-v,G-v,B-v]") {
    // distinct constant per channel makes the plane owner identifiable
    Image img(3, 2, 3);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) {
            img.at(y, x, 0) = 10;
            img.at(y, x, 1) = 20;
            img.at(y, x, 2) = 30;
        }
    const CooccurrenceTensor t = extract_tensor(img, 256, Normalization::raw_counts);
    REQUIRE(t.plane_count == 6);
    const uint8_t vals[3] = {10, 20, 30};
    for (int p = 0; p < 6; ++p) {
        const int v = vals[p % 3];
        const double expect = p < 3 ? 2.0 * (3 - 1) : (2 - 1) * 3.0;
        CHECK(t.plane(p)[v * 256 + v] == expect);
        double sum = 0.0;
        for (int k = 0; k < 256 * 256; ++k) sum += t.plane(p)[k];
        CHECK(sum == expect);
    }
}

TEST_CASE("constant 2x2 image: every raw plane is C[0][0]=2") {
    Image img(2, 2, 3); // zero-initialized
    const CooccurrenceTensor t = extract_tensor(img, 256, Normalization::raw_counts);
    for (int p = 0; p < 6; ++p) CHECK(t.plane(p)[0] == 2.0);

    const CooccurrenceTensor n =
        extract_tensor(img, 256, Normalization::per_plane_sum_to_one);
    for (int p = 0; p < 6; ++p) {
        double sum = 0.0;
        for (int k = 0; k < 256 * 256; ++k) sum += n.plane(p)[k];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("normalized planes sum to one (or zero when degenerate)") {
    for (int i = 0; i < 10; ++i) {
        const Image img = random_image(1 + i * 5, 2 + i * 3, 3, 300 + i);
        const CooccurrenceTensor t =
            extract_tensor(img, 64, Normalization::per_plane_sum_to_one);
        for (int p = 0; p < 6; ++p) {
            double sum = 0.0;
            for (int k = 0; k < 64 * 64; ++k) sum += t.plane(p)[k];
            if (img.width == 1 && p < 3)
                CHECK(sum == 0.0);
            else
                CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("grayscale inputs replicate to three identical channel planes") {
    const Image img = random_image(9, 11, 1, 17);
    const CooccurrenceTensor t = extract_tensor(img, 64, Normalization::raw_counts);
    for (int p : {0, 3}) {
        for (int q = 1; q < 3; ++q)
            for (int k = 0; k < 64 * 64; ++k)
                CHECK(t.plane(p)[k] == t.plane(p + q)[k]);
    }
}

TEST_CASE("horizontal flip transposes horizontal planes, keeps vertical ones") {
    for (int i = 0; i < 12; ++i) {
        Rng rng = Rng::from_stream(0xC0, i);
        const int w = 2 + static_cast<int>(rng.next_below(50));
        const int h = 2 + static_cast<int>(rng.next_below(50));
        const Image img = random_image(w, h, 3, 400 + i);
        const Image flipped = flip_horizontal(img);
        for (int c = 0; c < 3; ++c) {
            const auto orig_h =
                cooccurrence(channel_view(img, c), Direction::horizontal, 256);
            const auto flip_h =
                cooccurrence(channel_view(flipped, c), Direction::horizontal, 256);
            CHECK(flip_h.counts == transpose_counts(orig_h.counts, 256));

            const auto orig_v =
                cooccurrence(channel_view(img, c), Direction::vertical, 256);
            const auto flip_v =
                cooccurrence(channel_view(flipped, c), Direction::vertical, 256);
            CHECK(flip_v.counts == orig_v.counts);
        }
    }
}

TEST_CASE("vertical flip transposes vertical planes, keeps horizontal ones") {
    for (int i = 0; i < 12; ++i) {
        Rng rng = Rng::from_stream(0xD0, i);
        const int w = 2 + static_cast<int>(rng.next_below(50));
        const int h = 2 + static_cast<int>(rng.next_below(50));
        const Image img = random_image(w, h, 3, 500 + i);
        const Image flipped = flip_vertical(img);
        for (int c = 0; c < 3; ++c) {
            const auto orig_v =
                cooccurrence(channel_view(img, c), Direction::vertical, 256);
            const auto flip_v =
                cooccurrence(channel_view(flipped, c), Direction::vertical, 256);
            CHECK(flip_v.counts == transpose_counts(orig_v.counts, 256));

            const auto orig_h =
                cooccurrence(channel_view(img, c), Direction::horizontal, 256);
            const auto flip_h =
                cooccurrence(channel_view(flipped, c), Direction::horizontal, 256);
            CHECK(flip_h.counts == orig_h.counts);
        }
    }
}

// Pinned correspondence, derived against the serial oracle: rotating the
// image 90 degrees clockwise turns original horizontal pairs into
// vertical pairs in order (so V_rot == H_orig) and original vertical
// pairs into reversed horizontal pairs (so H_rot == transpose(V_orig)).
TEST_CASE("90-degree rotation swaps plane roles") {
    for (int i = 0; i < 10; ++i) {
        Rng rng = Rng::from_stream(0xE0, i);
        const int w = 2 + static_cast<int>(rng.next_below(40));
        const int h = 2 + static_cast<int>(rng.next_below(40));
        const Image img = random_image(w, h, 1, 600 + i);
        const Image rot = rot90_cw(img);

        const auto h_orig =
            reference::cooccurrence_serial(channel_view(img, 0), Direction::horizontal, 256);
        const auto v_orig =
            reference::cooccurrence_serial(channel_view(img, 0), Direction::vertical, 256);
        const auto h_rot = cooccurrence(channel_view(rot, 0), Direction::horizontal, 256);
        const auto v_rot = cooccurrence(channel_view(rot, 0), Direction::vertical, 256);

        CHECK(v_rot.counts == h_orig.counts);
        CHECK(h_rot.counts == transpose_counts(v_orig.counts, 256));
    }
}

TEST_CASE("tensor shape is size-independent") {
    const CooccurrenceTensor small =
        extract_tensor(random_image(16, 16, 3, 1), 64, Normalization::per_plane_sum_to_one);
    const CooccurrenceTensor large =
        extract_tensor(random_image(257, 131, 3, 2), 64, Normalization::per_plane_sum_to_one);
    CHECK(small.plane_count == large.plane_count);
    CHECK(small.bins == large.bins);
    CHECK(small.values.size() == large.values.size());
}

TEST_CASE("tensor file round-trip preserves header and binary32 payload") {
    TempDir td("tensor_io");
    const Image img = random_image(31, 17, 3, 7);
    const CooccurrenceTensor t =
        extract_tensor(img, 64, Normalization::per_plane_sum_to_one);
    write_tensor_file(td.file("a.cooc"), t);
    const CooccurrenceTensor back = read_tensor_file(td.file("a.cooc"));
    CHECK(back.bins == t.bins);
    CHECK(back.plane_count == 6);
    CHECK(back.normalization == t.normalization);
    REQUIRE(back.values.size() == t.values.size());
    for (size_t k = 0; k < t.values.size(); ++k)
        CHECK(back.values[k] == static_cast<double>(static_cast<float>(t.values[k])));

    SUBCASE("selected planes round-trip as 3-plane files") {
        const CooccurrenceTensor sel = select_planes(t, Direction::vertical);
        write_tensor_file(td.file("v.cooc"), sel);
        const CooccurrenceTensor vb = read_tensor_file(td.file("v.cooc"));
        CHECK(vb.plane_count == 3);
        for (size_t k = 0; k < sel.values.size(); ++k)
            CHECK(vb.values[k] == static_cast<double>(static_cast<float>(sel.values[k])));
    }

    SUBCASE("truncated tensor file is corrupt") {
        auto bytes = read_bytes(td.file("a.cooc"));
        bytes.resize(bytes.size() / 2);
        write_bytes(td.file("cut.cooc"), bytes);
        CHECK_THROWS_AS(read_tensor_file(td.file("cut.cooc")), Error);
    }
}

TEST_CASE("tensor header layout is pinned") {
    TempDir td("tensor_hdr");
    Image img(2, 2, 3);
    const CooccurrenceTensor t = extract_tensor(img, 64, Normalization::raw_counts);
    write_tensor_file(td.file("h.cooc"), t);
    const auto bytes = read_bytes(td.file("h.cooc"));
    REQUIRE(bytes.size() == 11 + 6ull * 64 * 64 * 4);
    CHECK(bytes[0] == 'C');
    CHECK(bytes[1] == 'O');
    CHECK(bytes[2] == 'O');
    CHECK(bytes[3] == 'C');
    CHECK(bytes[4] == 1); // version lo
    CHECK(bytes[5] == 0); // version hi
    CHECK(bytes[6] == 64); // bins lo
    CHECK(bytes[7] == 0);
    CHECK(bytes[8] == 6); // plane count lo
    CHECK(bytes[9] == 0);
    CHECK(bytes[10] == 0); // raw_counts
}
