#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cooc/image.hpp"
#include "cooc/manifest.hpp"
#include "cooc/rng.hpp"

namespace cooc {

enum class ManipKind {
    splice,
    clone,
    crop,
    resize,
    global_blur,
    local_blur,
    intensity_normalize,
    intensity_change,
    additive_noise,
};

const char* manip_kind_name(ManipKind k);
ManipKind manip_kind_from_name(const std::string& name);

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;
};

// Fully concrete description of one tamper operation. Corpus generation
// samples these from recipe ranges; apply_manipulation itself is
// deterministic given (image, spec, donor). Range enforcement (e.g.
// sigma <= 10, resize factor in [0.5,2]) happens when specs are sampled
// or parsed, not here, so identity parameters such as delta=0 remain
// expressible for direct calls.
struct ManipulationSpec {
    ManipKind kind = ManipKind::intensity_change;
    double sigma = 0.0;   // global_blur, local_blur, additive_noise
    double factor = 0.0;  // resize
    int delta = 0;        // intensity_change
    Rect rect{};          // crop, local_blur, clone source, splice donor region
    int dst_x = 0;        // clone / splice paste position
    int dst_y = 0;
    uint64_t seed = 0;    // additive_noise stream
};

// donor is required iff kind == splice. Output dimensions equal the
// input's except for crop and resize. Values are clamped to [0,255].
Image apply_manipulation(const Image& img, const ManipulationSpec& spec,
                         const Image* donor = nullptr);

// One line of a generation recipe: how many images of this kind to
// produce and the parameter ranges to sample from.
struct RecipeItem {
    ManipKind kind = ManipKind::global_blur;
    int count = 0;
    double sigma_lo = 0.0, sigma_hi = 0.0;   // blurs / noise
    double factor_lo = 0.0, factor_hi = 0.0; // resize
    int delta_lo = 0, delta_hi = 0;          // intensity_change magnitude
    double region_lo = 0.0, region_hi = 0.0; // per-side fraction for rects
};

std::vector<RecipeItem> parse_recipe(const std::string& path);
std::vector<RecipeItem> parse_recipe_json(const std::string& text);

// Applies the recipe to the source images and writes the corpus to
// out_dir: passthrough copies of every source (label 0) plus the
// requested manipulated images (label 1, tagged by kind), all as PNM.
// The manifest is written to out_dir/manifest.jsonl with paths relative
// to out_dir. Deterministic given (sources, recipe, seed): every random
// choice for output image t derives from Rng::from_stream(seed, t, ...).
DatasetManifest generate_corpus(const DatasetManifest& sources,
                                const std::vector<RecipeItem>& recipe,
                                const std::string& out_dir, uint64_t seed);

// Textured test image: smooth random gradients plus Gaussian texture,
// remapped so each channel spans a sub-range of [0,255]. This keeps
// intensity manipulations detectable (untampered channels never touch
// the extremes).
Image synth_source_image(int width, int height, Rng& rng);

} // namespace cooc
