// Times the OpenMP kernels against their serial reference
// implementations and verifies both paths agree before reporting.
//
//   ./bench_kernels [threads]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "cooc/cooccurrence.hpp"
#include "cooc/nn.hpp"
#include "cooc/reference.hpp"
#include "cooc/rng.hpp"

using namespace cooc;

namespace {

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = omp_get_wtime();
        fn();
        const double t1 = omp_get_wtime();
        if (t1 - t0 < best) best = t1 - t0;
    }
    return best;
}

Image random_image(int w, int h, uint64_t seed) {
    Image img(w, h, 3);
    Rng rng = Rng::from_stream(seed, 0xbe);
    for (auto& v : img.data) v = static_cast<uint8_t>(rng.next_below(256));
    return img;
}

void bench_cooccurrence() {
    std::printf("co-occurrence kernel (2048x2048 RGB, per-channel pairs)\n");
    const Image img = random_image(2048, 2048, 1);
    for (int bins : {64, 256}) {
        CooccurrenceMatrix serial, parallel;
        const double ts = time_best_of(3, [&] {
            serial = reference::cooccurrence_serial(channel_view(img, 0),
                                                    Direction::horizontal, bins);
        });
        const double tp = time_best_of(3, [&] {
            parallel = cooccurrence(channel_view(img, 0), Direction::horizontal, bins);
        });
        const bool ok = serial.counts == parallel.counts;
        std::printf("  B=%3d  serial %7.2f ms   openmp %7.2f ms   speedup %4.2fx   %s\n",
                    bins, ts * 1e3, tp * 1e3, ts / tp, ok ? "match" : "MISMATCH");
        if (!ok) std::exit(1);
    }
}

void bench_conv() {
    std::printf("conv2d forward (batch 16, 6x64x64 -> 16 ch, 3x3 s2 p1)\n");
    Rng rng = Rng::from_stream(7, 0xc0);
    Tensor4 in(16, 6, 64, 64);
    for (auto& v : in.v) v = rng.next_unit() - 0.5;
    const int oc = 16, k = 3, stride = 2, pad = 1;
    std::vector<double> w(static_cast<size_t>(oc) * in.c * k * k);
    std::vector<double> b(oc, 0.1);
    for (auto& x : w) x = rng.next_unit() - 0.5;

    ModelMeta meta;
    meta.bins = 64;
    Model m = make_model({LayerDesc::conv(oc, k, stride, pad), LayerDesc::gap(),
                          LayerDesc::fc(2)},
                         Shape3{6, 64, 64}, meta);
    m.params[0].w = w;
    m.params[0].b = b;

    Tensor4 serial;
    const double ts = time_best_of(3, [&] {
        serial = reference::conv2d_forward_serial(in, w, b, oc, k, stride, pad);
    });
    std::vector<double> logits;
    const double tp = time_best_of(3, [&] { logits = forward(m, in); });

    // cross-check: GAP+FC applied to the serial conv output must equal
    // the parallel full-forward logits
    {
        Tensor4 g(serial.n, serial.c, 1, 1);
        for (int n = 0; n < serial.n; ++n)
            for (int c = 0; c < serial.c; ++c) {
                double acc = 0.0;
                for (int y = 0; y < serial.h; ++y)
                    for (int x = 0; x < serial.w; ++x) acc += serial.at(n, c, y, x);
                g.at(n, c, 0, 0) = acc / (static_cast<double>(serial.h) * serial.w);
            }
        bool ok = true;
        const auto& fc = m.params[2];
        for (int n = 0; n < serial.n && ok; ++n)
            for (int o = 0; o < 2 && ok; ++o) {
                double acc = fc.b[o];
                for (int c = 0; c < serial.c; ++c)
                    acc += fc.w[static_cast<size_t>(o) * serial.c + c] * g.at(n, c, 0, 0);
                if (std::abs(acc - logits[static_cast<size_t>(n) * 2 + o]) > 1e-9)
                    ok = false;
            }
        std::printf("  serial %7.2f ms   openmp(full fwd) %7.2f ms   %s\n", ts * 1e3,
                    tp * 1e3, ok ? "match" : "MISMATCH");
        if (!ok) std::exit(1);
    }
}

void bench_extraction() {
    std::printf("tensor extraction (6 planes, 512x512 RGB)\n");
    const Image img = random_image(512, 512, 3);
    CooccurrenceTensor t;
    const double tp = time_best_of(3, [&] {
        t = extract_tensor(img, 256, Normalization::per_plane_sum_to_one);
    });
    std::printf("  openmp %7.2f ms  (%d planes of %dx%d)\n", tp * 1e3, t.plane_count,
                t.bins, t.bins);
}

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) omp_set_num_threads(std::atoi(argv[1]));
    std::printf("threads: %d\n\n", omp_get_max_threads());
    bench_cooccurrence();
    bench_conv();
    bench_extraction();
    return 0;
}
