#include "cooc/cooccurrence.hpp"

#include <cstring>
#include <fstream>
#include <numeric>

#include <omp.h>

#include "cooc/error.hpp"

namespace cooc {

ChannelView channel_view(const Image& img, int channel) {
    ChannelView v;
    v.data = img.data.data() + channel;
    v.height = img.height;
    v.width = img.width;
    v.row_stride = static_cast<size_t>(img.width) * img.channels;
    v.px_stride = static_cast<size_t>(img.channels);
    return v;
}

uint64_t CooccurrenceMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), uint64_t{0});
}

namespace {

void check_bins(int bins) {
    if (bins < 1 || bins > 256 || 256 % bins != 0)
        throw Error(ErrorKind::invalid_argument,
                    "bins must divide 256, got " + std::to_string(bins));
}

} // namespace

CooccurrenceMatrix cooccurrence(const ChannelView& ch, Direction dir, int bins) {
    if (ch.height < 1 || ch.width < 1 || ch.data == nullptr)
        throw Error(ErrorKind::invalid_argument, "empty channel");
    check_bins(bins);

    CooccurrenceMatrix m;
    m.bins = bins;
    m.direction = dir;
    m.counts.assign(static_cast<size_t>(bins) * bins, 0);

    // q(v) = floor(v * bins / 256); bins divides 256 so this is a shift.
    const int shift = [bins] {
        int s = 0;
        for (int b = bins; b < 256; b <<= 1) ++s;
        return s;
    }();

    const int pair_rows = dir == Direction::horizontal ? ch.height : ch.height - 1;
    const int pair_cols = dir == Direction::horizontal ? ch.width - 1 : ch.width;
    if (pair_rows <= 0 || pair_cols <= 0) return m; // 1-wide/1-tall: no pairs

    const size_t second_off = dir == Direction::horizontal ? ch.px_stride : ch.row_stride;
    const size_t nbins2 = static_cast<size_t>(bins) * bins;

    #pragma omp parallel
    {
        std::vector<uint64_t> local(nbins2, 0);
        #pragma omp for schedule(static)
        for (int y = 0; y < pair_rows; ++y) {
            const uint8_t* row = ch.data + static_cast<size_t>(y) * ch.row_stride;
            for (int x = 0; x < pair_cols; ++x) {
                const uint8_t* px = row + static_cast<size_t>(x) * ch.px_stride;
                const unsigned i = *px >> shift;
                const unsigned j = px[second_off] >> shift;
                ++local[i * static_cast<size_t>(bins) + j];
            }
        }
        // Integer adds commute exactly, so the merge order is irrelevant.
        #pragma omp critical(cooc_merge)
        for (size_t k = 0; k < nbins2; ++k) m.counts[k] += local[k];
    }
    return m;
}

CooccurrenceTensor extract_tensor(const Image& img, int bins, Normalization norm) {
    if (img.channels != 1 && img.channels != 3)
        throw Error(ErrorKind::invalid_argument, "image must have 1 or 3 channels");
    check_bins(bins);

    CooccurrenceTensor t;
    t.bins = bins;
    t.plane_count = 6;
    t.normalization = norm;
    const size_t plane_sz = static_cast<size_t>(bins) * bins;
    t.values.assign(plane_sz * 6, 0.0);

    for (int p = 0; p < 6; ++p) {
        const Direction dir = p < 3 ? Direction::horizontal : Direction::vertical;
        // Grayscale replicates to three identical channels.
        const int src_channel = img.channels == 3 ? p % 3 : 0;
        CooccurrenceMatrix m = cooccurrence(channel_view(img, src_channel), dir, bins);
        double* out = t.plane(p);
        if (norm == Normalization::per_plane_sum_to_one) {
            const uint64_t total = m.total();
            if (total > 0) {
                const double inv = 1.0 / static_cast<double>(total);
                for (size_t k = 0; k < plane_sz; ++k)
                    out[k] = static_cast<double>(m.counts[k]) * inv;
            }
        } else {
            for (size_t k = 0; k < plane_sz; ++k)
                out[k] = static_cast<double>(m.counts[k]);
        }
    }
    return t;
}

CooccurrenceTensor select_planes(const CooccurrenceTensor& t, Direction dir) {
    if (t.plane_count != 6)
        throw Error(ErrorKind::shape_mismatch, "expected a 6-plane tensor");
    CooccurrenceTensor out;
    out.bins = t.bins;
    out.plane_count = 3;
    out.normalization = t.normalization;
    const size_t plane_sz = static_cast<size_t>(t.bins) * t.bins;
    const int base = dir == Direction::horizontal ? 0 : 3;
    out.values.assign(t.values.begin() + base * plane_sz,
                      t.values.begin() + (base + 3) * plane_sz);
    return out;
}

namespace {

constexpr char kTensorMagic[4] = {'C', 'O', 'O', 'C'};
constexpr uint16_t kTensorVersion = 1;

template <typename T>
void put(std::string& buf, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T)); // little-endian host
    buf.append(b, sizeof(T));
}

template <typename T>
T take(const std::vector<char>& buf, size_t& pos, const std::string& path) {
    if (pos + sizeof(T) > buf.size())
        throw Error(ErrorKind::corrupt_stream, "truncated tensor file " + path);
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

} // namespace

void write_tensor_file(const std::string& path, const CooccurrenceTensor& t) {
    std::string buf;
    buf.reserve(11 + t.values.size() * 4);
    buf.append(kTensorMagic, 4);
    put<uint16_t>(buf, kTensorVersion);
    put<uint16_t>(buf, static_cast<uint16_t>(t.bins));
    put<uint16_t>(buf, static_cast<uint16_t>(t.plane_count));
    put<uint8_t>(buf, static_cast<uint8_t>(t.normalization));
    for (double v : t.values) put<float>(buf, static_cast<float>(v));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw Error(ErrorKind::io_failure, "cannot write " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f)
        throw Error(ErrorKind::io_failure, "short write: " + path);
}

CooccurrenceTensor read_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorKind::unreadable_file, "cannot open " + path);
    std::vector<char> buf((std::istreambuf_iterator<char>(f)),
                          std::istreambuf_iterator<char>());

    size_t pos = 0;
    char magic[4];
    if (buf.size() < 4)
        throw Error(ErrorKind::corrupt_stream, "truncated tensor file " + path);
    std::memcpy(magic, buf.data(), 4);
    pos = 4;
    if (std::memcmp(magic, kTensorMagic, 4) != 0)
        throw Error(ErrorKind::unsupported_format, "not a tensor file: " + path);
    const auto version = take<uint16_t>(buf, pos, path);
    if (version != kTensorVersion)
        throw Error(ErrorKind::unsupported_format,
                    "unsupported tensor file version " + std::to_string(version));

    CooccurrenceTensor t;
    t.bins = take<uint16_t>(buf, pos, path);
    t.plane_count = take<uint16_t>(buf, pos, path);
    const auto norm = take<uint8_t>(buf, pos, path);
    if (norm > 1)
        throw Error(ErrorKind::corrupt_stream, "bad normalization byte in " + path);
    t.normalization = static_cast<Normalization>(norm);
    if (t.bins < 1 || t.bins > 256 || (t.plane_count != 3 && t.plane_count != 6))
        throw Error(ErrorKind::corrupt_stream, "bad tensor header in " + path);

    const size_t n = static_cast<size_t>(t.plane_count) * t.bins * t.bins;
    t.values.resize(n);
    for (size_t k = 0; k < n; ++k)
        t.values[k] = take<float>(buf, pos, path);
    return t;
}

} // namespace cooc
