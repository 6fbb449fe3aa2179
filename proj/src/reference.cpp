#include "cooc/reference.hpp"

#include "cooc/error.hpp"

namespace cooc::reference {

CooccurrenceMatrix cooccurrence_serial(const ChannelView& ch, Direction dir,
                                       int bins) {
    if (ch.height < 1 || ch.width < 1 || ch.data == nullptr)
        throw Error(ErrorKind::invalid_argument, "empty channel");

    CooccurrenceMatrix m;
    m.bins = bins;
    m.direction = dir;
    m.counts.assign(static_cast<size_t>(bins) * bins, 0);

    for (int y = 0; y < ch.height; ++y) {
        for (int x = 0; x < ch.width; ++x) {
            int y2 = y, x2 = x;
            if (dir == Direction::horizontal)
                x2 = x + 1;
            else
                y2 = y + 1;
            if (y2 >= ch.height || x2 >= ch.width) continue;
            const int i = ch.at(y, x) * bins / 256;
            const int j = ch.at(y2, x2) * bins / 256;
            m.counts[static_cast<size_t>(i) * bins + j] += 1;
        }
    }
    return m;
}

Tensor4 conv2d_forward_serial(const Tensor4& in, const std::vector<double>& w,
                              const std::vector<double>& b, int out_channels,
                              int kernel, int stride, int pad) {
    const int oh = (in.h + 2 * pad - kernel) / stride + 1;
    const int ow = (in.w + 2 * pad - kernel) / stride + 1;
    Tensor4 out(in.n, out_channels, oh, ow);
    for (int n = 0; n < in.n; ++n)
        for (int oc = 0; oc < out_channels; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = b[oc];
                    for (int ic = 0; ic < in.c; ++ic)
                        for (int ky = 0; ky < kernel; ++ky)
                            for (int kx = 0; kx < kernel; ++kx) {
                                const int iy = oy * stride - pad + ky;
                                const int ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w)
                                    continue;
                                acc += in.at(n, ic, iy, ix) *
                                       w[((static_cast<size_t>(oc) * in.c + ic) *
                                              kernel +
                                          ky) *
                                             kernel +
                                         kx];
                            }
                    out.at(n, oc, oy, ox) = acc;
                }
    return out;
}

} // namespace cooc::reference
