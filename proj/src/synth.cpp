#include "cooc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>
#include <omp.h>

#include "cooc/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cooc {

const char* manip_kind_name(ManipKind k) {
    switch (k) {
    case ManipKind::splice: return "splice";
    case ManipKind::clone: return "clone";
    case ManipKind::crop: return "crop";
    case ManipKind::resize: return "resize";
    case ManipKind::global_blur: return "global_blur";
    case ManipKind::local_blur: return "local_blur";
    case ManipKind::intensity_normalize: return "intensity_normalize";
    case ManipKind::intensity_change: return "intensity_change";
    case ManipKind::additive_noise: return "additive_noise";
    }
    return "?";
}

ManipKind manip_kind_from_name(const std::string& name) {
    static const std::pair<const char*, ManipKind> table[] = {
        {"splice", ManipKind::splice},
        {"clone", ManipKind::clone},
        {"crop", ManipKind::crop},
        {"resize", ManipKind::resize},
        {"global_blur", ManipKind::global_blur},
        {"local_blur", ManipKind::local_blur},
        {"intensity_normalize", ManipKind::intensity_normalize},
        {"intensity_change", ManipKind::intensity_change},
        {"additive_noise", ManipKind::additive_noise},
    };
    for (const auto& [n, k] : table)
        if (name == n) return k;
    throw Error(ErrorKind::invalid_argument, "unknown manipulation kind: " + name);
}

namespace {

uint8_t clamp_round(double v) {
    const double r = std::floor(v + 0.5);
    if (r < 0.0) return 0;
    if (r > 255.0) return 255;
    return static_cast<uint8_t>(r);
}

void check_rect(const Rect& r, int w, int h, const char* what) {
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > w ||
        r.y + r.h > h)
        throw Error(ErrorKind::invalid_argument,
                    std::string(what) + " rectangle out of bounds");
}

// Separable Gaussian, radius ceil(3*sigma), clamp-to-edge borders.
// Intermediates stay in doubles; rounding happens once at the end.
std::vector<double> blur_channel(const Image& img, int c, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double ksum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[k + radius] = std::exp(-(static_cast<double>(k) * k) /
                                      (2.0 * sigma * sigma));
        ksum += kernel[k + radius];
    }
    for (double& v : kernel) v /= ksum;

    const int w = img.width, h = img.height;
    std::vector<double> tmp(static_cast<size_t>(w) * h);
    std::vector<double> out(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int xi = std::clamp(x + k, 0, w - 1);
                acc += kernel[k + radius] * img.at(y, xi, c);
            }
            tmp[static_cast<size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int yi = std::clamp(y + k, 0, h - 1);
                acc += kernel[k + radius] * tmp[static_cast<size_t>(yi) * w + x];
            }
            out[static_cast<size_t>(y) * w + x] = acc;
        }
    return out;
}

Image do_global_blur(const Image& img, double sigma) {
    Image out = img;
    for (int c = 0; c < img.channels; ++c) {
        std::vector<double> b = blur_channel(img, c, sigma);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(y, x, c) = clamp_round(b[static_cast<size_t>(y) * img.width + x]);
    }
    return out;
}

Image do_local_blur(const Image& img, const Rect& r, double sigma) {
    check_rect(r, img.width, img.height, "local_blur");
    Image out = img;
    for (int c = 0; c < img.channels; ++c) {
        std::vector<double> b = blur_channel(img, c, sigma);
        for (int y = r.y; y < r.y + r.h; ++y)
            for (int x = r.x; x < r.x + r.w; ++x)
                out.at(y, x, c) = clamp_round(b[static_cast<size_t>(y) * img.width + x]);
    }
    return out;
}

// Bilinear sampling with the half-pixel mapping, rounded once.
Image do_resize(const Image& img, double factor) {
    const int ow = std::max(1, static_cast<int>(std::llround(img.width * factor)));
    const int oh = std::max(1, static_cast<int>(std::llround(img.height * factor)));
    Image out(ow, oh, img.channels);
    const double sx = static_cast<double>(img.width) / ow;
    const double sy = static_cast<double>(img.height) / oh;
    for (int y = 0; y < oh; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                     static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < ow; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                         static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < img.channels; ++c) {
                const double v =
                    (1 - wy) * ((1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c)) +
                    wy * ((1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c));
                out.at(y, x, c) = clamp_round(v);
            }
        }
    }
    return out;
}

Image do_crop(const Image& img, const Rect& r) {
    check_rect(r, img.width, img.height, "crop");
    Image out(r.w, r.h, img.channels);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(r.y + y, r.x + x, c);
    return out;
}

Image do_clone(const Image& img, const Rect& src, int dst_x, int dst_y) {
    check_rect(src, img.width, img.height, "clone source");
    check_rect(Rect{dst_x, dst_y, src.w, src.h}, img.width, img.height,
               "clone destination");
    Image patch = do_crop(img, src); // copy first: src and dst may overlap
    Image out = img;
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(dst_y + y, dst_x + x, c) = patch.at(y, x, c);
    return out;
}

Image do_splice(const Image& img, const Image& donor, const Rect& src,
                int dst_x, int dst_y) {
    if (donor.channels != img.channels)
        throw Error(ErrorKind::invalid_argument,
                    "splice donor channel count differs from host");
    check_rect(src, donor.width, donor.height, "splice donor");
    check_rect(Rect{dst_x, dst_y, src.w, src.h}, img.width, img.height,
               "splice destination");
    Image out = img;
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(dst_y + y, dst_x + x, c) = donor.at(src.y + y, src.x + x, c);
    return out;
}

Image do_intensity_normalize(const Image& img) {
    Image out = img;
    for (int c = 0; c < img.channels; ++c) {
        uint8_t lo = 255, hi = 0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const uint8_t v = img.at(y, x, c);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        if (hi == lo) continue; // constant channel stays as-is
        const double scale = 255.0 / (hi - lo);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(y, x, c) = clamp_round((img.at(y, x, c) - lo) * scale);
    }
    return out;
}

Image do_intensity_change(const Image& img, int delta) {
    Image out = img;
    for (auto& v : out.data)
        v = clamp_round(static_cast<double>(v) + delta);
    return out;
}

Image do_additive_noise(const Image& img, double sigma, uint64_t seed) {
    Image out = img;
    Rng rng = Rng::from_stream(seed, 0x6e6f697365ull /* "noise" */);
    for (auto& v : out.data)
        v = clamp_round(static_cast<double>(v) + sigma * rng.next_gaussian());
    return out;
}

} // namespace

Image apply_manipulation(const Image& img, const ManipulationSpec& spec,
                         const Image* donor) {
    if (img.width < 1 || img.height < 1)
        throw Error(ErrorKind::invalid_argument, "empty image");
    switch (spec.kind) {
    case ManipKind::splice:
        if (!donor)
            throw Error(ErrorKind::invalid_argument, "splice requires a donor image");
        return do_splice(img, *donor, spec.rect, spec.dst_x, spec.dst_y);
    case ManipKind::clone:
        return do_clone(img, spec.rect, spec.dst_x, spec.dst_y);
    case ManipKind::crop:
        return do_crop(img, spec.rect);
    case ManipKind::resize:
        if (!(spec.factor > 0.0))
            throw Error(ErrorKind::invalid_argument, "resize factor must be positive");
        return do_resize(img, spec.factor);
    case ManipKind::global_blur:
        if (!(spec.sigma > 0.0))
            throw Error(ErrorKind::invalid_argument, "blur sigma must be positive");
        return do_global_blur(img, spec.sigma);
    case ManipKind::local_blur:
        if (!(spec.sigma > 0.0))
            throw Error(ErrorKind::invalid_argument, "blur sigma must be positive");
        return do_local_blur(img, spec.rect, spec.sigma);
    case ManipKind::intensity_normalize:
        return do_intensity_normalize(img);
    case ManipKind::intensity_change:
        return do_intensity_change(img, spec.delta);
    case ManipKind::additive_noise:
        if (!(spec.sigma > 0.0))
            throw Error(ErrorKind::invalid_argument, "noise sigma must be positive");
        return do_additive_noise(img, spec.sigma, spec.seed);
    }
    throw Error(ErrorKind::invalid_argument, "unknown manipulation kind");
}

// ---------------------------------------------------------------------------
// Recipes
// ---------------------------------------------------------------------------

namespace {

void read_range(const json& j, const char* key, double& lo, double& hi,
                double min_ok, double max_ok) {
    if (!j.contains(key))
        throw Error(ErrorKind::invalid_argument,
                    std::string("recipe item missing range \"") + key + '"');
    const auto& r = j.at(key);
    if (!r.is_array() || r.size() != 2)
        throw Error(ErrorKind::invalid_argument,
                    std::string("recipe range \"") + key + "\" must be [lo, hi]");
    lo = r[0].get<double>();
    hi = r[1].get<double>();
    if (!(lo <= hi) || lo < min_ok || hi > max_ok)
        throw Error(ErrorKind::invalid_argument,
                    std::string("recipe range \"") + key + "\" out of bounds");
}

} // namespace

std::vector<RecipeItem> parse_recipe_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::corrupt_stream, std::string("bad recipe: ") + e.what());
    }
    if (!doc.contains("items") || !doc["items"].is_array())
        throw Error(ErrorKind::invalid_argument, "recipe must have an \"items\" array");

    std::vector<RecipeItem> items;
    for (const auto& j : doc["items"]) {
        RecipeItem it;
        it.kind = manip_kind_from_name(j.at("kind").get<std::string>());
        it.count = j.at("count").get<int>();
        if (it.count < 0)
            throw Error(ErrorKind::invalid_argument, "recipe count must be >= 0");

        switch (it.kind) {
        case ManipKind::global_blur:
        case ManipKind::additive_noise:
            read_range(j, "sigma", it.sigma_lo, it.sigma_hi, 1e-6, 20.0);
            break;
        case ManipKind::local_blur:
            read_range(j, "sigma", it.sigma_lo, it.sigma_hi, 1e-6, 20.0);
            read_range(j, "region", it.region_lo, it.region_hi, 0.01, 1.0);
            break;
        case ManipKind::resize:
            read_range(j, "factor", it.factor_lo, it.factor_hi, 0.5, 2.0);
            break;
        case ManipKind::intensity_change: {
            double lo, hi;
            read_range(j, "delta", lo, hi, 1.0, 255.0); // magnitude, sign randomized
            it.delta_lo = static_cast<int>(lo);
            it.delta_hi = static_cast<int>(hi);
            break;
        }
        case ManipKind::intensity_normalize:
            break;
        case ManipKind::splice:
        case ManipKind::clone:
        case ManipKind::crop:
            read_range(j, "region", it.region_lo, it.region_hi, 0.01, 1.0);
            break;
        }
        // blur sigma is capped at 10
        if ((it.kind == ManipKind::global_blur || it.kind == ManipKind::local_blur) &&
            it.sigma_hi > 10.0)
            throw Error(ErrorKind::invalid_argument, "blur sigma range exceeds 10");
        items.push_back(it);
    }
    return items;
}

std::vector<RecipeItem> parse_recipe(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw Error(ErrorKind::unreadable_file, "cannot open recipe " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return parse_recipe_json(text);
}

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

namespace {

Rect sample_rect(Rng& rng, int img_w, int img_h, double frac_lo, double frac_hi) {
    Rect r;
    r.w = std::clamp(static_cast<int>(std::llround(img_w * rng.next_range(frac_lo, frac_hi))),
                     1, img_w);
    r.h = std::clamp(static_cast<int>(std::llround(img_h * rng.next_range(frac_lo, frac_hi))),
                     1, img_h);
    r.x = static_cast<int>(rng.next_below(static_cast<uint32_t>(img_w - r.w + 1)));
    r.y = static_cast<int>(rng.next_below(static_cast<uint32_t>(img_h - r.h + 1)));
    return r;
}

struct SampledManip {
    ManipulationSpec spec;
    int source = 0;
    int donor = -1;
};

// One attempt's worth of random decisions for tamper output t. attempt
// feeds the stream key so retries stay deterministic.
SampledManip sample_manipulation(const RecipeItem& it, uint64_t seed, uint64_t t,
                                 uint64_t attempt,
                                 const std::vector<Image>& sources) {
    Rng rng = Rng::from_stream(seed, t, attempt);
    SampledManip s;
    s.source = static_cast<int>(rng.next_below(static_cast<uint32_t>(sources.size())));
    const Image& src = sources[s.source];

    s.spec.kind = it.kind;
    s.spec.seed = rng.next_u64();
    switch (it.kind) {
    case ManipKind::global_blur:
    case ManipKind::additive_noise:
        s.spec.sigma = rng.next_range(it.sigma_lo, it.sigma_hi);
        break;
    case ManipKind::local_blur:
        s.spec.sigma = rng.next_range(it.sigma_lo, it.sigma_hi);
        s.spec.rect = sample_rect(rng, src.width, src.height, it.region_lo, it.region_hi);
        break;
    case ManipKind::resize:
        // Redraw until the rounded output dimensions actually change;
        // factor 1.0 (or a factor rounding to the same size) would
        // break the label-soundness invariant.
        for (int k = 0; k < 64; ++k) {
            s.spec.factor = rng.next_range(it.factor_lo, it.factor_hi);
            const int ow = static_cast<int>(std::llround(src.width * s.spec.factor));
            const int oh = static_cast<int>(std::llround(src.height * s.spec.factor));
            if (ow != src.width || oh != src.height) break;
            s.spec.factor = 0.0;
        }
        if (s.spec.factor == 0.0)
            throw Error(ErrorKind::invalid_argument,
                        "resize range produces no size change for source");
        break;
    case ManipKind::intensity_change: {
        const int mag = rng.next_int(it.delta_lo, it.delta_hi);
        s.spec.delta = rng.next_below(2) ? mag : -mag;
        break;
    }
    case ManipKind::intensity_normalize:
        break;
    case ManipKind::crop: {
        // A crop must be a strict sub-rectangle.
        for (int k = 0; k < 64; ++k) {
            s.spec.rect = sample_rect(rng, src.width, src.height, it.region_lo,
                                      it.region_hi);
            if (s.spec.rect.w < src.width || s.spec.rect.h < src.height) break;
        }
        break;
    }
    case ManipKind::clone: {
        s.spec.rect = sample_rect(rng, src.width, src.height, it.region_lo, it.region_hi);
        s.spec.dst_x = static_cast<int>(
            rng.next_below(static_cast<uint32_t>(src.width - s.spec.rect.w + 1)));
        s.spec.dst_y = static_cast<int>(
            rng.next_below(static_cast<uint32_t>(src.height - s.spec.rect.h + 1)));
        break;
    }
    case ManipKind::splice: {
        s.donor = static_cast<int>(rng.next_below(static_cast<uint32_t>(sources.size())));
        if (sources.size() > 1 && s.donor == s.source)
            s.donor = (s.donor + 1) % static_cast<int>(sources.size());
        const Image& don = sources[s.donor];
        const int max_w = std::min(src.width, don.width);
        const int max_h = std::min(src.height, don.height);
        Rect r = sample_rect(rng, max_w, max_h, it.region_lo, it.region_hi);
        // position the region independently in donor and host
        r.x = static_cast<int>(rng.next_below(static_cast<uint32_t>(don.width - r.w + 1)));
        r.y = static_cast<int>(rng.next_below(static_cast<uint32_t>(don.height - r.h + 1)));
        s.spec.rect = r;
        s.spec.dst_x = static_cast<int>(
            rng.next_below(static_cast<uint32_t>(src.width - r.w + 1)));
        s.spec.dst_y = static_cast<int>(
            rng.next_below(static_cast<uint32_t>(src.height - r.h + 1)));
        break;
    }
    }
    return s;
}

} // namespace

DatasetManifest generate_corpus(const DatasetManifest& sources,
                                const std::vector<RecipeItem>& recipe,
                                const std::string& out_dir, uint64_t seed) {
    if (sources.entries.empty())
        throw Error(ErrorKind::invalid_argument, "no source images");
    for (const auto& e : sources.entries)
        if (e.label != 0)
            throw Error(ErrorKind::invalid_argument,
                        "corpus sources must all be untampered: " + e.path);

    fs::create_directories(out_dir);

    std::vector<Image> src_images(sources.entries.size());
    for (size_t i = 0; i < sources.entries.size(); ++i)
        src_images[i] = load_image(sources.full_path(sources.entries[i]));

    DatasetManifest out;
    out.base_dir = out_dir;

    // Passthrough copies of the untampered sources.
    std::vector<std::string> untampered_names(src_images.size());
    #pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(src_images.size()); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "u_%04ld.%s", i,
                      src_images[i].channels == 3 ? "ppm" : "pgm");
        save_image_pnm((fs::path(out_dir) / name).string(), src_images[i]);
        untampered_names[i] = name;
    }
    for (const auto& name : untampered_names)
        out.entries.push_back(ManifestEntry{name, 0, std::nullopt, Split::train});

    // Manipulated images. Index t enumerates tampered outputs across all
    // recipe items; parallel order never affects the bytes because all
    // sampling is keyed by t.
    struct Job {
        RecipeItem item;
        uint64_t t;
    };
    std::vector<Job> jobs;
    uint64_t t = 0;
    for (const auto& it : recipe)
        for (int j = 0; j < it.count; ++j) jobs.push_back(Job{it, t++});

    std::vector<std::string> names(jobs.size());
    std::string first_error;
    #pragma omp parallel for schedule(dynamic)
    for (long ji = 0; ji < static_cast<long>(jobs.size()); ++ji) {
        try {
            const Job& job = jobs[ji];
            Image result;
            bool ok = false;
            for (uint64_t attempt = 0; attempt < 16 && !ok; ++attempt) {
                SampledManip s = sample_manipulation(job.item, seed, job.t, attempt,
                                                     src_images);
                const Image* donor = s.donor >= 0 ? &src_images[s.donor] : nullptr;
                result = apply_manipulation(src_images[s.source], s.spec, donor);
                // Label soundness: a tampered image must differ from its source.
                ok = !result.same_pixels(src_images[s.source]);
            }
            if (!ok)
                throw Error(ErrorKind::invalid_argument,
                            std::string("manipulation \"") +
                                manip_kind_name(job.item.kind) +
                                "\" left the source unchanged after 16 attempts");
            char name[64];
            std::snprintf(name, sizeof(name), "t_%04llu_%s.%s",
                          static_cast<unsigned long long>(job.t),
                          manip_kind_name(job.item.kind),
                          result.channels == 3 ? "ppm" : "pgm");
            save_image_pnm((fs::path(out_dir) / name).string(), result);
            names[ji] = name;
        } catch (const std::exception& e) {
            #pragma omp critical(synth_err)
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!first_error.empty())
        throw Error(ErrorKind::invalid_argument, first_error);

    for (size_t ji = 0; ji < jobs.size(); ++ji)
        out.entries.push_back(ManifestEntry{
            names[ji], 1, std::string(manip_kind_name(jobs[ji].item.kind)),
            Split::train});

    save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), out);
    return out;
}

Image synth_source_image(int width, int height, Rng& rng) {
    Image img(width, height, 3);
    std::vector<double> field(static_cast<size_t>(width) * height);
    for (int c = 0; c < 3; ++c) {
        const double gx = rng.next_range(-60.0, 60.0);
        const double gy = rng.next_range(-60.0, 60.0);
        const double a1 = rng.next_range(10.0, 45.0);
        const double f1 = rng.next_range(0.5, 3.0);
        const double p1 = rng.next_range(0.0, 6.28318530717958648);
        const double a2 = rng.next_range(10.0, 45.0);
        const double f2 = rng.next_range(0.5, 3.0);
        const double p2 = rng.next_range(0.0, 6.28318530717958648);
        const double texture = rng.next_range(4.0, 7.0);

        double lo = 1e300, hi = -1e300;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double u = static_cast<double>(x) / width;
                const double v = static_cast<double>(y) / height;
                double val = gx * u + gy * v +
                             a1 * std::cos(6.28318530717958648 * f1 * u + p1) +
                             a2 * std::cos(6.28318530717958648 * f2 * v + p2) +
                             texture * rng.next_gaussian();
                field[static_cast<size_t>(y) * width + x] = val;
                lo = std::min(lo, val);
                hi = std::max(hi, val);
            }

        // Remap so the channel occupies a sub-range away from 0 and 255.
        const double out_lo = rng.next_range(15.0, 45.0);
        const double out_hi = rng.next_range(210.0, 240.0);
        const double scale = hi > lo ? (out_hi - out_lo) / (hi - lo) : 0.0;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                img.at(y, x, c) = clamp_round(
                    out_lo + scale * (field[static_cast<size_t>(y) * width + x] - lo));
    }
    return img;
}

} // namespace cooc
