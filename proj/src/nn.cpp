#include "cooc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <omp.h>

#include "cooc/error.hpp"
#include "cooc/rng.hpp"

namespace cooc {

LayerDesc LayerDesc::conv(int out_channels, int kernel, int stride, int pad) {
    LayerDesc d;
    d.kind = LayerKind::conv2d;
    d.out_channels = out_channels;
    d.kernel = kernel;
    d.stride = stride;
    d.pad = pad;
    return d;
}
LayerDesc LayerDesc::relu() { return LayerDesc{LayerKind::relu}; }
LayerDesc LayerDesc::maxpool(int kernel, int stride) {
    LayerDesc d;
    d.kind = LayerKind::maxpool;
    d.kernel = kernel;
    d.stride = stride;
    return d;
}
LayerDesc LayerDesc::gap() { return LayerDesc{LayerKind::global_avg_pool}; }
LayerDesc LayerDesc::fc(int out_features) {
    LayerDesc d;
    d.kind = LayerKind::fully_connected;
    d.out_features = out_features;
    return d;
}

const char* direction_mode_name(DirectionMode m) {
    switch (m) {
    case DirectionMode::horizontal_only: return "horizontal";
    case DirectionMode::vertical_only: return "vertical";
    case DirectionMode::both: return "both";
    }
    return "both";
}

DirectionMode direction_mode_from_name(const std::string& name) {
    if (name == "horizontal") return DirectionMode::horizontal_only;
    if (name == "vertical") return DirectionMode::vertical_only;
    if (name == "both") return DirectionMode::both;
    throw Error(ErrorKind::usage, "unknown direction mode: " + name);
}

int direction_mode_planes(DirectionMode m) {
    return m == DirectionMode::both ? 6 : 3;
}

size_t Model::param_count() const {
    size_t n = 0;
    for (const auto& p : params) n += p.w.size() + p.b.size();
    return n;
}

Shape3 conv_output_shape(Shape3 in, const LayerDesc& d) {
    Shape3 out;
    out.c = d.out_channels;
    out.h = (in.h + 2 * d.pad - d.kernel) / d.stride + 1;
    out.w = (in.w + 2 * d.pad - d.kernel) / d.stride + 1;
    return out;
}

namespace {

Shape3 layer_output_shape(Shape3 in, const LayerDesc& d) {
    switch (d.kind) {
    case LayerKind::conv2d: {
        if (d.kernel < 1 || d.stride < 1 || d.pad < 0 || d.out_channels < 1)
            throw Error(ErrorKind::invalid_argument, "bad conv2d descriptor");
        if (in.h + 2 * d.pad < d.kernel || in.w + 2 * d.pad < d.kernel)
            throw Error(ErrorKind::shape_mismatch,
                        "conv2d kernel larger than padded input");
        return conv_output_shape(in, d);
    }
    case LayerKind::relu:
        return in;
    case LayerKind::maxpool: {
        if (d.kernel < 1 || d.stride < 1)
            throw Error(ErrorKind::invalid_argument, "bad maxpool descriptor");
        if (in.h < d.kernel || in.w < d.kernel)
            throw Error(ErrorKind::shape_mismatch, "maxpool window larger than input");
        return Shape3{in.c, (in.h - d.kernel) / d.stride + 1,
                      (in.w - d.kernel) / d.stride + 1};
    }
    case LayerKind::global_avg_pool:
        return Shape3{in.c, 1, 1};
    case LayerKind::fully_connected:
        if (d.out_features < 1)
            throw Error(ErrorKind::invalid_argument, "bad fc descriptor");
        return Shape3{d.out_features, 1, 1};
    }
    throw Error(ErrorKind::invalid_argument, "unknown layer kind");
}

void check_finite(const double* v, size_t n, const char* what) {
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(v[i]))
            throw Error(ErrorKind::divergence,
                        std::string("non-finite value in ") + what);
}

} // namespace

Model make_model(std::vector<LayerDesc> layers, Shape3 input, ModelMeta meta) {
    if (input.c < 1 || input.h < 1 || input.w < 1)
        throw Error(ErrorKind::shape_mismatch, "bad model input shape");

    Model m;
    m.meta = meta;
    m.input_shape = input;
    m.layers = std::move(layers);
    m.params.resize(m.layers.size());
    m.shapes.resize(m.layers.size());

    Shape3 cur = input;
    for (size_t i = 0; i < m.layers.size(); ++i) {
        const LayerDesc& d = m.layers[i];
        Shape3 out = layer_output_shape(cur, d);
        m.shapes[i] = out;

        Rng rng = Rng::from_stream(meta.seed, 0x696e6974ull /* "init" */, i);
        if (d.kind == LayerKind::conv2d) {
            const size_t fan_in = static_cast<size_t>(cur.c) * d.kernel * d.kernel;
            const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
            m.params[i].w.resize(static_cast<size_t>(d.out_channels) * fan_in);
            for (double& x : m.params[i].w) x = scale * rng.next_gaussian();
            m.params[i].b.assign(d.out_channels, 0.0);
        } else if (d.kind == LayerKind::fully_connected) {
            const size_t fan_in = cur.count();
            const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
            m.params[i].w.resize(static_cast<size_t>(d.out_features) * fan_in);
            for (double& x : m.params[i].w) x = scale * rng.next_gaussian();
            m.params[i].b.assign(d.out_features, 0.0);
        }
        cur = out;
    }
    if (m.layers.empty() || cur.count() != 2)
        throw Error(ErrorKind::shape_mismatch, "model must emit 2 logits");
    return m;
}

Model make_coocnet_s(ModelMeta meta) {
    const int planes = direction_mode_planes(meta.direction);
    std::vector<LayerDesc> layers = {
        LayerDesc::conv(16, 3, 2, 1), LayerDesc::relu(),
        LayerDesc::conv(32, 3, 2, 1), LayerDesc::relu(),
        LayerDesc::maxpool(2, 2),
        LayerDesc::conv(64, 3, 2, 1), LayerDesc::relu(),
        LayerDesc::gap(),
        LayerDesc::fc(2),
    };
    return make_model(std::move(layers), Shape3{planes, meta.bins, meta.bins}, meta);
}

// ---------------------------------------------------------------------------
// Layer kernels. Each output element is written by exactly one thread,
// so outputs do not depend on the thread count.
// ---------------------------------------------------------------------------

namespace {

void conv2d_forward(const Tensor4& in, const LayerDesc& d, const LayerParams& p,
                    Tensor4& out) {
    const int kk = d.kernel;
    #pragma omp parallel for schedule(static)
    for (int n = 0; n < in.n; ++n) {
        for (int oc = 0; oc < out.c; ++oc) {
            for (int oy = 0; oy < out.h; ++oy) {
                for (int ox = 0; ox < out.w; ++ox) {
                    double acc = p.b[oc];
                    for (int ic = 0; ic < in.c; ++ic) {
                        const double* wbase =
                            p.w.data() +
                            ((static_cast<size_t>(oc) * in.c + ic) * kk) * kk;
                        for (int ky = 0; ky < kk; ++ky) {
                            const int iy = oy * d.stride - d.pad + ky;
                            if (iy < 0 || iy >= in.h) continue;
                            for (int kx = 0; kx < kk; ++kx) {
                                const int ix = ox * d.stride - d.pad + kx;
                                if (ix < 0 || ix >= in.w) continue;
                                acc += in.at(n, ic, iy, ix) * wbase[ky * kk + kx];
                            }
                        }
                    }
                    out.at(n, oc, oy, ox) = acc;
                }
            }
        }
    }
}

void conv2d_backward(const Tensor4& in, const LayerDesc& d, const LayerParams& p,
                     const Tensor4& gout, Tensor4& gin, LayerParams& gp) {
    const int kk = d.kernel;

    // dW: one weight element per iteration, summed in fixed (n,oy,ox) order.
    #pragma omp parallel for schedule(static)
    for (int oc = 0; oc < d.out_channels; ++oc) {
        for (int ic = 0; ic < in.c; ++ic) {
            for (int ky = 0; ky < kk; ++ky) {
                for (int kx = 0; kx < kk; ++kx) {
                    double acc = 0.0;
                    for (int n = 0; n < in.n; ++n) {
                        for (int oy = 0; oy < gout.h; ++oy) {
                            const int iy = oy * d.stride - d.pad + ky;
                            if (iy < 0 || iy >= in.h) continue;
                            for (int ox = 0; ox < gout.w; ++ox) {
                                const int ix = ox * d.stride - d.pad + kx;
                                if (ix < 0 || ix >= in.w) continue;
                                acc += gout.at(n, oc, oy, ox) * in.at(n, ic, iy, ix);
                            }
                        }
                    }
                    gp.w[((static_cast<size_t>(oc) * in.c + ic) * kk + ky) * kk + kx] = acc;
                }
            }
        }
    }

    #pragma omp parallel for schedule(static)
    for (int oc = 0; oc < d.out_channels; ++oc) {
        double acc = 0.0;
        for (int n = 0; n < in.n; ++n)
            for (int oy = 0; oy < gout.h; ++oy)
                for (int ox = 0; ox < gout.w; ++ox)
                    acc += gout.at(n, oc, oy, ox);
        gp.b[oc] = acc;
    }

    // dIn: scatter within one batch row; rows are disjoint across threads.
    #pragma omp parallel for schedule(static)
    for (int n = 0; n < in.n; ++n) {
        for (int oc = 0; oc < d.out_channels; ++oc) {
            for (int oy = 0; oy < gout.h; ++oy) {
                for (int ox = 0; ox < gout.w; ++ox) {
                    const double g = gout.at(n, oc, oy, ox);
                    for (int ic = 0; ic < in.c; ++ic) {
                        const double* wbase =
                            p.w.data() +
                            ((static_cast<size_t>(oc) * in.c + ic) * kk) * kk;
                        for (int ky = 0; ky < kk; ++ky) {
                            const int iy = oy * d.stride - d.pad + ky;
                            if (iy < 0 || iy >= in.h) continue;
                            for (int kx = 0; kx < kk; ++kx) {
                                const int ix = ox * d.stride - d.pad + kx;
                                if (ix < 0 || ix >= in.w) continue;
                                gin.at(n, ic, iy, ix) += g * wbase[ky * kk + kx];
                            }
                        }
                    }
                }
            }
        }
    }
}

void maxpool_forward(const Tensor4& in, const LayerDesc& d, Tensor4& out) {
    #pragma omp parallel for schedule(static)
    for (int n = 0; n < in.n; ++n) {
        for (int c = 0; c < in.c; ++c) {
            for (int oy = 0; oy < out.h; ++oy) {
                for (int ox = 0; ox < out.w; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    for (int ky = 0; ky < d.kernel; ++ky)
                        for (int kx = 0; kx < d.kernel; ++kx) {
                            const double v =
                                in.at(n, c, oy * d.stride + ky, ox * d.stride + kx);
                            if (v > best) best = v;
                        }
                    out.at(n, c, oy, ox) = best;
                }
            }
        }
    }
}

// Gradient goes to the first maximum in row-major window order; the same
// scan order as the forward pass keeps ties consistent.
void maxpool_backward(const Tensor4& in, const LayerDesc& d, const Tensor4& gout,
                      Tensor4& gin) {
    #pragma omp parallel for schedule(static)
    for (int n = 0; n < in.n; ++n) {
        for (int c = 0; c < in.c; ++c) {
            for (int oy = 0; oy < gout.h; ++oy) {
                for (int ox = 0; ox < gout.w; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    int by = 0, bx = 0;
                    for (int ky = 0; ky < d.kernel; ++ky)
                        for (int kx = 0; kx < d.kernel; ++kx) {
                            const int iy = oy * d.stride + ky;
                            const int ix = ox * d.stride + kx;
                            if (in.at(n, c, iy, ix) > best) {
                                best = in.at(n, c, iy, ix);
                                by = iy;
                                bx = ix;
                            }
                        }
                    gin.at(n, c, by, bx) += gout.at(n, c, oy, ox);
                }
            }
        }
    }
}

void fc_forward(const Tensor4& in, const LayerDesc& d, const LayerParams& p,
                Tensor4& out) {
    const size_t in_features = static_cast<size_t>(in.c) * in.h * in.w;
    #pragma omp parallel for schedule(static)
    for (int n = 0; n < in.n; ++n) {
        const double* x = in.v.data() + n * in_features;
        for (int o = 0; o < d.out_features; ++o) {
            const double* wrow = p.w.data() + o * in_features;
            double acc = p.b[o];
            for (size_t k = 0; k < in_features; ++k) acc += wrow[k] * x[k];
            out.v[static_cast<size_t>(n) * d.out_features + o] = acc;
        }
    }
}

void fc_backward(const Tensor4& in, const LayerDesc& d, const LayerParams& p,
                 const Tensor4& gout, Tensor4& gin, LayerParams& gp) {
    const size_t in_features = static_cast<size_t>(in.c) * in.h * in.w;

    #pragma omp parallel for schedule(static)
    for (int o = 0; o < d.out_features; ++o) {
        double bacc = 0.0;
        double* gw = gp.w.data() + o * in_features;
        for (int n = 0; n < in.n; ++n) {
            const double g = gout.v[static_cast<size_t>(n) * d.out_features + o];
            const double* x = in.v.data() + n * in_features;
            for (size_t k = 0; k < in_features; ++k) gw[k] += g * x[k];
            bacc += g;
        }
        gp.b[o] = bacc;
    }

    #pragma omp parallel for schedule(static)
    for (int n = 0; n < in.n; ++n) {
        double* gx = gin.v.data() + n * in_features;
        const double* g = gout.v.data() + static_cast<size_t>(n) * d.out_features;
        for (int o = 0; o < d.out_features; ++o) {
            const double* wrow = p.w.data() + o * in_features;
            for (size_t k = 0; k < in_features; ++k) gx[k] += g[o] * wrow[k];
        }
    }
}

Tensor4 layer_forward(const Model& m, size_t li, const Tensor4& in) {
    const LayerDesc& d = m.layers[li];
    const Shape3 os = m.shapes[li];
    Tensor4 out(in.n, os.c, os.h, os.w);
    switch (d.kind) {
    case LayerKind::conv2d:
        conv2d_forward(in, d, m.params[li], out);
        break;
    case LayerKind::relu:
        #pragma omp parallel for schedule(static)
        for (long k = 0; k < static_cast<long>(in.size()); ++k)
            out.v[k] = in.v[k] > 0.0 ? in.v[k] : 0.0;
        break;
    case LayerKind::maxpool:
        maxpool_forward(in, d, out);
        break;
    case LayerKind::global_avg_pool: {
        const double inv = 1.0 / (static_cast<double>(in.h) * in.w);
        #pragma omp parallel for schedule(static)
        for (int n = 0; n < in.n; ++n)
            for (int c = 0; c < in.c; ++c) {
                double acc = 0.0;
                for (int y = 0; y < in.h; ++y)
                    for (int x = 0; x < in.w; ++x) acc += in.at(n, c, y, x);
                out.at(n, c, 0, 0) = acc * inv;
            }
        break;
    }
    case LayerKind::fully_connected:
        fc_forward(in, d, m.params[li], out);
        break;
    }
    return out;
}

void validate_batch(const Model& m, const Tensor4& batch) {
    if (batch.n < 1)
        throw Error(ErrorKind::shape_mismatch, "empty batch");
    if (batch.c != m.input_shape.c || batch.h != m.input_shape.h ||
        batch.w != m.input_shape.w)
        throw Error(ErrorKind::shape_mismatch,
                    "batch shape does not match model input");
}

} // namespace

std::vector<double> forward(const Model& m, const Tensor4& batch) {
    validate_batch(m, batch);
    Tensor4 cur = batch;
    for (size_t i = 0; i < m.layers.size(); ++i) {
        cur = layer_forward(m, i, cur);
        // relu would silently turn NaN into 0, so probe every layer
        check_finite(cur.v.data(), cur.size(), "forward pass");
    }
    return cur.v;
}

CrossEntropy cross_entropy(const std::vector<double>& logits,
                           const std::vector<int>& labels) {
    const size_t n = labels.size();
    if (logits.size() != 2 * n || n == 0)
        throw Error(ErrorKind::shape_mismatch, "logits/labels size mismatch");

    CrossEntropy ce;
    ce.dlogits.assign(2 * n, 0.0);
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y != 0 && y != 1)
            throw Error(ErrorKind::invalid_argument, "labels must be 0 or 1");
        const double a = logits[2 * i], b = logits[2 * i + 1];
        const double mx = a > b ? a : b;
        const double lse = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
        total += lse - logits[2 * i + y];
        const double p0 = std::exp(a - lse);
        const double p1 = std::exp(b - lse);
        ce.dlogits[2 * i] = (p0 - (y == 0 ? 1.0 : 0.0)) / static_cast<double>(n);
        ce.dlogits[2 * i + 1] = (p1 - (y == 1 ? 1.0 : 0.0)) / static_cast<double>(n);
    }
    ce.loss = total / static_cast<double>(n);
    return ce;
}

BackwardResult backward(const Model& m, const Tensor4& batch,
                        const std::vector<int>& labels) {
    validate_batch(m, batch);
    if (static_cast<size_t>(batch.n) != labels.size())
        throw Error(ErrorKind::shape_mismatch, "label count does not match batch");

    // Forward, keeping every activation for the backward sweep.
    std::vector<Tensor4> acts;
    acts.reserve(m.layers.size() + 1);
    acts.push_back(batch);
    for (size_t i = 0; i < m.layers.size(); ++i) {
        acts.push_back(layer_forward(m, i, acts.back()));
        check_finite(acts.back().v.data(), acts.back().size(), "forward pass");
    }

    BackwardResult res;
    res.logits = acts.back().v;
    CrossEntropy ce = cross_entropy(res.logits, labels);
    res.loss = ce.loss;

    res.grads.layers.resize(m.layers.size());
    for (size_t i = 0; i < m.layers.size(); ++i) {
        res.grads.layers[i].w.assign(m.params[i].w.size(), 0.0);
        res.grads.layers[i].b.assign(m.params[i].b.size(), 0.0);
    }

    Tensor4 grad = acts.back();
    grad.v = ce.dlogits;

    for (size_t li = m.layers.size(); li-- > 0;) {
        const LayerDesc& d = m.layers[li];
        const Tensor4& in = acts[li];
        Tensor4 gin(in.n, in.c, in.h, in.w);
        switch (d.kind) {
        case LayerKind::conv2d:
            conv2d_backward(in, d, m.params[li], grad, gin, res.grads.layers[li]);
            break;
        case LayerKind::relu:
            #pragma omp parallel for schedule(static)
            for (long k = 0; k < static_cast<long>(in.size()); ++k)
                gin.v[k] = in.v[k] > 0.0 ? grad.v[k] : 0.0;
            break;
        case LayerKind::maxpool:
            maxpool_backward(in, d, grad, gin);
            break;
        case LayerKind::global_avg_pool: {
            const double inv = 1.0 / (static_cast<double>(in.h) * in.w);
            #pragma omp parallel for schedule(static)
            for (int n = 0; n < in.n; ++n)
                for (int c = 0; c < in.c; ++c) {
                    const double g = grad.at(n, c, 0, 0) * inv;
                    for (int y = 0; y < in.h; ++y)
                        for (int x = 0; x < in.w; ++x) gin.at(n, c, y, x) = g;
                }
            break;
        }
        case LayerKind::fully_connected:
            fc_backward(in, d, m.params[li], grad, gin, res.grads.layers[li]);
            break;
        }
        grad = std::move(gin);
    }
    return res;
}

AdamState make_adam_state(const Model& model, double alpha, double beta1,
                          double beta2, double eps) {
    AdamState s;
    s.alpha = alpha;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    s.m.resize(model.params.size());
    s.v.resize(model.params.size());
    for (size_t i = 0; i < model.params.size(); ++i) {
        s.m[i].w.assign(model.params[i].w.size(), 0.0);
        s.m[i].b.assign(model.params[i].b.size(), 0.0);
        s.v[i].w.assign(model.params[i].w.size(), 0.0);
        s.v[i].b.assign(model.params[i].b.size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(std::vector<double>& p, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v,
                 const AdamState& s, double bc1, double bc2) {
    for (size_t k = 0; k < p.size(); ++k) {
        if (!std::isfinite(g[k]))
            throw Error(ErrorKind::divergence, "non-finite gradient");
        m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * g[k];
        v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * g[k] * g[k];
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        p[k] -= s.alpha * mhat / (std::sqrt(vhat) + s.eps);
    }
}

} // namespace

void adam_step(Model& model, const Gradients& grads, AdamState& state) {
    if (grads.layers.size() != model.params.size())
        throw Error(ErrorKind::shape_mismatch, "gradient/model layer mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < model.params.size(); ++i) {
        if (grads.layers[i].w.size() != model.params[i].w.size() ||
            grads.layers[i].b.size() != model.params[i].b.size())
            throw Error(ErrorKind::shape_mismatch, "gradient shape mismatch");
        adam_update(model.params[i].w, grads.layers[i].w, state.m[i].w,
                    state.v[i].w, state, bc1, bc2);
        adam_update(model.params[i].b, grads.layers[i].b, state.m[i].b,
                    state.v[i].b, state, bc1, bc2);
    }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kCkptMagic[4] = {'C', 'N', 'E', 'T'};
constexpr uint16_t kCkptVersion = 1;

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& f, const std::string& path) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f)
        throw Error(ErrorKind::corrupt_stream, "truncated checkpoint " + path);
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const Model& m) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw Error(ErrorKind::io_failure, "cannot write " + path);
    f.write(kCkptMagic, 4);
    put<uint16_t>(f, kCkptVersion);
    put<uint16_t>(f, m.meta.bins);
    put<uint8_t>(f, static_cast<uint8_t>(m.meta.direction));
    put<uint8_t>(f, static_cast<uint8_t>(m.meta.normalization));
    put<uint64_t>(f, m.meta.seed);
    put<int32_t>(f, m.input_shape.c);
    put<int32_t>(f, m.input_shape.h);
    put<int32_t>(f, m.input_shape.w);
    put<uint16_t>(f, static_cast<uint16_t>(m.layers.size()));
    for (const auto& d : m.layers) {
        put<uint8_t>(f, static_cast<uint8_t>(d.kind));
        put<int32_t>(f, d.out_channels);
        put<int32_t>(f, d.kernel);
        put<int32_t>(f, d.stride);
        put<int32_t>(f, d.pad);
        put<int32_t>(f, d.out_features);
    }
    for (const auto& p : m.params) {
        put<uint64_t>(f, p.w.size());
        f.write(reinterpret_cast<const char*>(p.w.data()),
                static_cast<std::streamsize>(p.w.size() * sizeof(double)));
        put<uint64_t>(f, p.b.size());
        f.write(reinterpret_cast<const char*>(p.b.data()),
                static_cast<std::streamsize>(p.b.size() * sizeof(double)));
    }
    if (!f)
        throw Error(ErrorKind::io_failure, "short write: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorKind::unreadable_file, "cannot open " + path);

    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw Error(ErrorKind::unsupported_format, "not a checkpoint: " + path);
    const auto version = take<uint16_t>(f, path);
    if (version != kCkptVersion)
        throw Error(ErrorKind::unsupported_format,
                    "unsupported checkpoint version " + std::to_string(version));

    ModelMeta meta;
    meta.bins = take<uint16_t>(f, path);
    const auto dir = take<uint8_t>(f, path);
    const auto norm = take<uint8_t>(f, path);
    if (dir > 2 || norm > 1)
        throw Error(ErrorKind::corrupt_stream, "bad checkpoint metadata " + path);
    meta.direction = static_cast<DirectionMode>(dir);
    meta.normalization = static_cast<Normalization>(norm);
    meta.seed = take<uint64_t>(f, path);

    Shape3 input;
    input.c = take<int32_t>(f, path);
    input.h = take<int32_t>(f, path);
    input.w = take<int32_t>(f, path);

    const auto n_layers = take<uint16_t>(f, path);
    std::vector<LayerDesc> layers(n_layers);
    for (auto& d : layers) {
        const auto kind = take<uint8_t>(f, path);
        if (kind > 4)
            throw Error(ErrorKind::corrupt_stream, "bad layer kind in " + path);
        d.kind = static_cast<LayerKind>(kind);
        d.out_channels = take<int32_t>(f, path);
        d.kernel = take<int32_t>(f, path);
        d.stride = take<int32_t>(f, path);
        d.pad = take<int32_t>(f, path);
        d.out_features = take<int32_t>(f, path);
    }

    Model m = make_model(std::move(layers), input, meta);
    for (auto& p : m.params) {
        const auto wn = take<uint64_t>(f, path);
        if (wn != p.w.size())
            throw Error(ErrorKind::corrupt_stream,
                        "parameter block size mismatch in " + path);
        f.read(reinterpret_cast<char*>(p.w.data()),
               static_cast<std::streamsize>(wn * sizeof(double)));
        const auto bn = take<uint64_t>(f, path);
        if (bn != p.b.size())
            throw Error(ErrorKind::corrupt_stream,
                        "parameter block size mismatch in " + path);
        f.read(reinterpret_cast<char*>(p.b.data()),
               static_cast<std::streamsize>(bn * sizeof(double)));
        if (!f)
            throw Error(ErrorKind::corrupt_stream, "truncated checkpoint " + path);
    }
    return m;
}

void fill_batch_row(Tensor4& batch, int row, const CooccurrenceTensor& t,
                    DirectionMode mode) {
    const int planes = direction_mode_planes(mode);
    if (batch.c != planes || batch.h != t.bins || batch.w != t.bins)
        throw Error(ErrorKind::shape_mismatch, "tensor does not fit batch row");
    if (t.plane_count != 6 && t.plane_count != planes)
        throw Error(ErrorKind::shape_mismatch, "unexpected plane count");

    const size_t plane_sz = static_cast<size_t>(t.bins) * t.bins;
    const int base =
        (t.plane_count == 6 && mode == DirectionMode::vertical_only) ? 3 : 0;
    double* dst = batch.v.data() + static_cast<size_t>(row) * planes * plane_sz;
    std::memcpy(dst, t.values.data() + base * plane_sz,
                planes * plane_sz * sizeof(double));
}

} // namespace cooc
