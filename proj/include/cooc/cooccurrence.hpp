#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cooc/image.hpp"

namespace cooc {

enum class Direction : uint8_t { horizontal = 0, vertical = 1 };

enum class Normalization : uint8_t { raw_counts = 0, per_plane_sum_to_one = 1 };

// Read-only view of one H x W channel plane (8-bit samples, arbitrary
// pixel stride so interleaved images need no copy).
struct ChannelView {
    const uint8_t* data = nullptr;
    int height = 0;
    int width = 0;
    size_t row_stride = 0; // elements between rows
    size_t px_stride = 1;  // elements between columns

    uint8_t at(int y, int x) const {
        return data[static_cast<size_t>(y) * row_stride +
                    static_cast<size_t>(x) * px_stride];
    }
};

ChannelView channel_view(const Image& img, int channel);

// 2-D histogram of ordered neighbor pairs for one channel plane.
// counts[q(first) * bins + q(second)] with q(v) = floor(v * bins / 256).
// Horizontal pairs are (pixel, right neighbor), vertical pairs are
// (pixel, neighbor below). Totals are exact: H*(W-1) horizontal pairs,
// (H-1)*W vertical pairs.
struct CooccurrenceMatrix {
    int bins = 0;
    Direction direction = Direction::horizontal;
    int channel = 0;
    std::vector<uint64_t> counts; // bins x bins, row-major

    uint64_t total() const;
};

// OpenMP row-parallel kernel. Counts are integers so the merge order
// does not affect the result; output is bit-identical for any thread
// count. bins must divide 256.
CooccurrenceMatrix cooccurrence(const ChannelView& ch, Direction dir, int bins);

// Stacked classifier input: 6 planes in the order
// [R-h, G-h, B-h, R-v, G-v, B-v], each bins x bins, values stored as
// doubles (normalization divides by the plane total; all-zero planes
// stay zero). Grayscale images are replicated to three channels first.
struct CooccurrenceTensor {
    int bins = 0;
    int plane_count = 0;
    Normalization normalization = Normalization::per_plane_sum_to_one;
    std::vector<double> values; // plane-major, row-major

    double* plane(int p) { return values.data() + static_cast<size_t>(p) * bins * bins; }
    const double* plane(int p) const {
        return values.data() + static_cast<size_t>(p) * bins * bins;
    }
};

CooccurrenceTensor extract_tensor(const Image& img, int bins, Normalization norm);

// Keeps only the horizontal planes [0..2] or vertical planes [3..5].
CooccurrenceTensor select_planes(const CooccurrenceTensor& t, Direction dir);

// Tensor cache file ("COOC"): little-endian header
//   magic[4] | version u16 | bins u16 | plane_count u16 | normalization u8
// followed by plane_count * bins * bins IEEE-754 binary32 values in
// plane-major, row-major order.
void write_tensor_file(const std::string& path, const CooccurrenceTensor& t);
CooccurrenceTensor read_tensor_file(const std::string& path);

} // namespace cooc
