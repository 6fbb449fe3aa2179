#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cooc/cooccurrence.hpp"

namespace cooc {

// Batched activation tensor, (batch, channels, height, width) row-major.
// 64-bit values; gradient checks and the reproducibility contract assume
// this precision.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0) {}

    size_t size() const { return v.size(); }
    double& at(int in, int ic, int iy, int ix) {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    double at(int in, int ic, int iy, int ix) const {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
};

enum class LayerKind : uint8_t {
    conv2d = 0,
    relu = 1,
    maxpool = 2,
    global_avg_pool = 3,
    fully_connected = 4,
};

struct LayerDesc {
    LayerKind kind = LayerKind::relu;
    int out_channels = 0; // conv2d
    int kernel = 0;       // conv2d / maxpool
    int stride = 1;       // conv2d / maxpool
    int pad = 0;          // conv2d
    int out_features = 0; // fully_connected

    static LayerDesc conv(int out_channels, int kernel, int stride, int pad);
    static LayerDesc relu();
    static LayerDesc maxpool(int kernel, int stride);
    static LayerDesc gap();
    static LayerDesc fc(int out_features);
};

struct Shape3 {
    int c = 0, h = 0, w = 0;
    bool operator==(const Shape3&) const = default;
    size_t count() const { return static_cast<size_t>(c) * h * w; }
};

struct LayerParams {
    std::vector<double> w, b; // empty for parameterless layers
};

enum class DirectionMode : uint8_t { horizontal_only = 0, vertical_only = 1, both = 2 };

const char* direction_mode_name(DirectionMode m);
DirectionMode direction_mode_from_name(const std::string& name);
int direction_mode_planes(DirectionMode m);

// Extraction settings a trained model carries so prediction can rebuild
// the exact input representation.
struct ModelMeta {
    uint16_t bins = 256;
    DirectionMode direction = DirectionMode::both;
    Normalization normalization = Normalization::per_plane_sum_to_one;
    uint64_t seed = 0;
};

struct Model {
    ModelMeta meta;
    Shape3 input_shape;
    std::vector<LayerDesc> layers;
    std::vector<LayerParams> params; // aligned with layers
    std::vector<Shape3> shapes;      // output shape per layer

    size_t param_count() const;
};

// Shape composition is validated here; the final layer must emit 2
// logits. Weights use fan-in scaled Gaussian init, biases start at zero.
Model make_model(std::vector<LayerDesc> layers, Shape3 input, ModelMeta meta);

// conv(16,3x3,s2,p1) relu conv(32,3x3,s2,p1) relu maxpool(2)
// conv(64,3x3,s2,p1) relu gap fc(2); input (planes, bins, bins).
Model make_coocnet_s(ModelMeta meta);

Shape3 conv_output_shape(Shape3 in, const LayerDesc& d);

// Logits, batch x 2 row-major. Batch rows are independent; OpenMP
// parallelizes over rows so the result is identical for any thread count.
std::vector<double> forward(const Model& m, const Tensor4& batch);

struct CrossEntropy {
    double loss = 0.0;                // mean over the batch
    std::vector<double> dlogits;      // batch x 2
};

// Log-sum-exp stabilized; safe for any finite logits.
CrossEntropy cross_entropy(const std::vector<double>& logits,
                           const std::vector<int>& labels);

struct Gradients {
    std::vector<LayerParams> layers; // shape-matches Model::params
};

struct BackwardResult {
    double loss = 0.0;
    std::vector<double> logits;
    Gradients grads; // d(mean cross-entropy)/d(param)
};

BackwardResult backward(const Model& m, const Tensor4& batch,
                        const std::vector<int>& labels);

struct AdamState {
    uint64_t t = 0;
    double alpha = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<LayerParams> m, v;
};

AdamState make_adam_state(const Model& model, double alpha, double beta1,
                          double beta2, double eps);
void adam_step(Model& model, const Gradients& grads, AdamState& state);

// Checkpoint file ("CNET"): little-endian header, metadata, layer
// descriptor block, then parameter arrays in declaration order as
// binary64. See docs/FORMATS.md.
void save_checkpoint(const std::string& path, const Model& m);
Model load_checkpoint(const std::string& path);

// Batch assembly from extracted tensors: picks the planes selected by
// the model's direction mode and copies them into row `row` of `batch`.
void fill_batch_row(Tensor4& batch, int row, const CooccurrenceTensor& t,
                    DirectionMode mode);

} // namespace cooc
