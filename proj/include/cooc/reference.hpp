#pragma once

// Serial reference implementations. These are deliberately independent
// of the OpenMP kernels in cooccurrence.cpp / nn.cpp: tests compare the
// two paths and the bench target times them against each other. Keep
// them naive; do not share helpers with the parallel code.

#include <vector>

#include "cooc/cooccurrence.hpp"
#include "cooc/nn.hpp"

namespace cooc::reference {

// Literal transcription of the counting rule: for every ordered
// neighbor pair, one increment at (quantized first, quantized second).
CooccurrenceMatrix cooccurrence_serial(const ChannelView& ch, Direction dir,
                                       int bins);

// Direct convolution, one output element at a time.
Tensor4 conv2d_forward_serial(const Tensor4& in, const std::vector<double>& w,
                              const std::vector<double>& b, int out_channels,
                              int kernel, int stride, int pad);

} // namespace cooc::reference
