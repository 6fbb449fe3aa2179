// coocnet: image tamper detection via pixel co-occurrence tensors and a
// compact CNN. Subcommands wire the pipeline end to end:
//   gen-sources -> gen-corpus -> extract/train -> predict -> eval / fuse

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "cooc/error.hpp"
#include "cooc/eval.hpp"
#include "cooc/image.hpp"
#include "cooc/manifest.hpp"
#include "cooc/nn.hpp"
#include "cooc/rng.hpp"
#include "cooc/synth.hpp"
#include "cooc/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cooc;

namespace {

// A JSON config file supplies defaults; explicit flags win. The file is
// looked up before CLI11 parses so flag values simply overwrite it.
json load_config_arg(int argc, char** argv) {
    std::string path;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc)
            path = argv[i + 1];
        else if (a.rfind("--config=", 0) == 0)
            path = a.substr(9);
    }
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f)
        throw Error(ErrorKind::unreadable_file, "cannot open config " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::corrupt_stream, std::string("bad config: ") + e.what());
    }
}

template <typename T>
void cfg_get(const json& cfg, const char* key, T& out) {
    if (cfg.contains(key)) out = cfg.at(key).get<T>();
}

void echo_config(const json& cfg) {
    std::cerr << "config: " << cfg.dump() << "\n";
}

void write_config(const json& cfg, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw Error(ErrorKind::io_failure, "cannot write " + path);
    f << cfg.dump(2) << "\n";
}

void apply_threads(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

DatasetManifest sources_from_arg(const std::string& arg) {
    if (fs::is_directory(arg)) {
        DatasetManifest m;
        m.base_dir = arg;
        std::vector<std::string> names;
        for (const auto& de : fs::directory_iterator(arg)) {
            if (!de.is_regular_file()) continue;
            const std::string ext = de.path().extension().string();
            if (ext == ".png" || ext == ".ppm" || ext == ".pgm")
                names.push_back(de.path().filename().string());
        }
        std::sort(names.begin(), names.end());
        for (const auto& n : names)
            m.entries.push_back(ManifestEntry{n, 0, std::nullopt, Split::train});
        if (m.entries.empty())
            throw Error(ErrorKind::invalid_argument,
                        "no .png/.ppm/.pgm images under " + arg);
        return m;
    }
    return load_manifest(arg);
}

Normalization normalization_from_name(const std::string& name) {
    if (name == "per_plane") return Normalization::per_plane_sum_to_one;
    if (name == "raw") return Normalization::raw_counts;
    throw Error(ErrorKind::usage, "unknown normalization: " + name);
}

const char* normalization_name(Normalization n) {
    return n == Normalization::raw_counts ? "raw" : "per_plane";
}

// Parses the remaining argv words into the subcommand's app. Returns an
// exit code when parsing finished the run (help text or usage error).
std::optional<int> parse_or_exit(CLI::App& app, const std::string& name,
                                 const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back(name.c_str());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return std::nullopt;
}

int run_gen_sources(const json& cfg0, const std::vector<std::string>& args) {
    CLI::App app{"generate textured source images"};
    std::string out, config;
    int count = 20, width = 96, height = 96, threads = 0;
    uint64_t seed = 0;
    cfg_get(cfg0, "out", out);
    cfg_get(cfg0, "count", count);
    cfg_get(cfg0, "width", width);
    cfg_get(cfg0, "height", height);
    cfg_get(cfg0, "seed", seed);
    cfg_get(cfg0, "threads", threads);
    app.add_option("--out", out)->required(!cfg0.contains("out"));
    app.add_option("--count", count);
    app.add_option("--width", width);
    app.add_option("--height", height);
    app.add_option("--seed", seed);
    app.add_option("--threads", threads);
    app.add_option("--config", config);
    if (auto ec = parse_or_exit(app, "gen-sources", args)) return *ec;

    if (count < 1 || width < 1 || height < 1)
        throw Error(ErrorKind::usage, "count/width/height must be positive");
    apply_threads(threads);
    const json cfg = {{"command", "gen-sources"}, {"out", out},     {"count", count},
                      {"width", width},           {"height", height}, {"seed", seed},
                      {"threads", threads}};
    echo_config(cfg);

    fs::create_directories(out);
    #pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i) {
        Rng rng = Rng::from_stream(seed, 0x737263ull /* "src" */, static_cast<uint64_t>(i));
        const Image img = synth_source_image(width, height, rng);
        char name[64];
        std::snprintf(name, sizeof(name), "src_%04d.ppm", i);
        save_image_pnm((fs::path(out) / name).string(), img);
    }
    write_config(cfg, (fs::path(out) / "run_config.json").string());
    std::cerr << "wrote " << count << " source images to " << out << "\n";
    return 0;
}

int run_gen_corpus(const json& cfg0, const std::vector<std::string>& args) {
    CLI::App app{"apply a manipulation recipe to source images"};
    std::string sources, recipe, out, config;
    uint64_t seed = 0;
    int threads = 0;
    cfg_get(cfg0, "sources", sources);
    cfg_get(cfg0, "recipe", recipe);
    cfg_get(cfg0, "out", out);
    cfg_get(cfg0, "seed", seed);
    cfg_get(cfg0, "threads", threads);
    app.add_option("--sources", sources, "source dir or manifest")
        ->required(!cfg0.contains("sources"));
    app.add_option("--recipe", recipe, "recipe JSON")->required(!cfg0.contains("recipe"));
    app.add_option("--out", out)->required(!cfg0.contains("out"));
    app.add_option("--seed", seed);
    app.add_option("--threads", threads);
    app.add_option("--config", config);
    if (auto ec = parse_or_exit(app, "gen-corpus", args)) return *ec;

    apply_threads(threads);
    const json cfg = {{"command", "gen-corpus"}, {"sources", sources},
                      {"recipe", recipe},        {"out", out},
                      {"seed", seed},            {"threads", threads}};
    echo_config(cfg);

    const DatasetManifest src = sources_from_arg(sources);
    const std::vector<RecipeItem> items = parse_recipe(recipe);
    const DatasetManifest corpus = generate_corpus(src, items, out, seed);
    write_config(cfg, (fs::path(out) / "run_config.json").string());
    std::cerr << "corpus: " << corpus.entries.size() << " entries ("
              << std::count_if(corpus.entries.begin(), corpus.entries.end(),
                               [](const ManifestEntry& e) { return e.label == 1; })
              << " tampered) -> " << out << "/manifest.jsonl\n";
    return 0;
}

int run_split(const json& cfg0, const std::vector<std::string>& args) {
    CLI::App app{"stratified train/val assignment for a manifest"};
    std::string manifest_path, out;
    double train_fraction = 0.9;
    uint64_t seed = 0;
    cfg_get(cfg0, "manifest", manifest_path);
    cfg_get(cfg0, "out", out);
    cfg_get(cfg0, "train-fraction", train_fraction);
    cfg_get(cfg0, "seed", seed);
    app.add_option("--manifest", manifest_path)->required(!cfg0.contains("manifest"));
    app.add_option("--out", out, "path for the split manifest")
        ->required(!cfg0.contains("out"));
    app.add_option("--train-fraction", train_fraction);
    app.add_option("--seed", seed);
    std::string config;
    app.add_option("--config", config);
    if (auto ec = parse_or_exit(app, "split", args)) return *ec;

    const json cfg = {{"command", "split"},
                      {"manifest", manifest_path},
                      {"out", out},
                      {"train-fraction", train_fraction},
                      {"seed", seed}};
    echo_config(cfg);

    DatasetManifest m = load_manifest(manifest_path);
    const std::string in_base = m.base_dir;
    m = split_manifest(m, train_fraction, seed);
    // keep image paths resolvable from the new manifest's directory
    const std::string out_base = fs::path(out).parent_path().string();
    if (out_base != in_base)
        for (auto& e : m.entries)
            e.path = fs::relative(fs::path(in_base) / e.path,
                                  out_base.empty() ? "." : out_base)
                         .string();
    save_manifest(out, m);
    write_config(cfg, out + ".config.json");
    std::cerr << "split manifest -> " << out << "\n";
    return 0;
}

int run_extract(const json& cfg0, const std::vector<std::string>& args) {
    CLI::App app{"batch co-occurrence tensor extraction"};
    std::string manifest_path, out, direction = "both", normalization = "per_plane",
                config;
    int bins = 256, threads = 0;
    cfg_get(cfg0, "manifest", manifest_path);
    cfg_get(cfg0, "out", out);
    cfg_get(cfg0, "bins", bins);
    cfg_get(cfg0, "direction", direction);
    cfg_get(cfg0, "normalization", normalization);
    cfg_get(cfg0, "threads", threads);
    app.add_option("--manifest", manifest_path)->required(!cfg0.contains("manifest"));
    app.add_option("--out", out)->required(!cfg0.contains("out"));
    app.add_option("--bins", bins);
    app.add_option("--direction", direction, "horizontal|vertical|both");
    app.add_option("--normalization", normalization, "per_plane|raw");
    app.add_option("--threads", threads);
    app.add_option("--config", config);
    if (auto ec = parse_or_exit(app, "extract", args)) return *ec;

    apply_threads(threads);
    const json cfg = {{"command", "extract"},   {"manifest", manifest_path},
                      {"out", out},             {"bins", bins},
                      {"direction", direction}, {"normalization", normalization},
                      {"threads", threads}};
    echo_config(cfg);

    const DatasetManifest m = load_manifest(manifest_path);
    const Normalization norm = normalization_from_name(normalization);
    fs::create_directories(out);

    // Single-direction extraction drops the unused planes before writing.
    if (direction == "both") {
        extract_to_cache(m, out, bins, norm);
    } else {
        const Direction dir = direction == "horizontal" ? Direction::horizontal
                                                        : Direction::vertical;
        std::string first_error;
        #pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < static_cast<long>(m.entries.size()); ++i) {
            try {
                const Image img = load_image(m.full_path(m.entries[i]));
                const CooccurrenceTensor t =
                    select_planes(extract_tensor(img, bins, norm), dir);
                char name[128];
                std::snprintf(name, sizeof(name), "%05ld_%s.b%d.n%d.cooc", i,
                              fs::path(m.entries[i].path).stem().string().c_str(),
                              bins, static_cast<int>(norm));
                write_tensor_file((fs::path(out) / name).string(), t);
            } catch (const std::exception& e) {
                #pragma omp critical(extract_err)
                if (first_error.empty())
                    first_error = std::string(e.what()) + " (entry " +
                                  m.entries[i].path + ")";
            }
        }
        if (!first_error.empty())
            throw Error(ErrorKind::invalid_argument, first_error);
    }
    write_config(cfg, (fs::path(out) / "run_config.json").string());
    std::cerr << "extracted " << m.entries.size() << " tensors to " << out << "\n";
    return 0;
}

int run_train(const json& cfg0, const std::vector<std::string>& args) {
    CLI::App app{"train the co-occurrence classifier"};
    std::string manifest_path, checkpoint, cache, log_path, direction = "both",
                normalization = "per_plane", config;
    TrainConfig tc;
    tc.epochs = 50;
    double train_fraction = 0.0; // 0 = manifest already carries splits
    uint64_t split_seed = 0;
    bool split_seed_set = false;
    int threads = 0;
    cfg_get(cfg0, "manifest", manifest_path);
    cfg_get(cfg0, "checkpoint", checkpoint);
    cfg_get(cfg0, "cache", cache);
    cfg_get(cfg0, "log", log_path);
    cfg_get(cfg0, "direction", direction);
    cfg_get(cfg0, "normalization", normalization);
    cfg_get(cfg0, "epochs", tc.epochs);
    cfg_get(cfg0, "batch-size", tc.batch_size);
    cfg_get(cfg0, "bins", tc.bins);
    cfg_get(cfg0, "seed", tc.seed);
    cfg_get(cfg0, "lr", tc.lr);
    cfg_get(cfg0, "train-fraction", train_fraction);
    cfg_get(cfg0, "threads", threads);
    app.add_option("--manifest", manifest_path)->required(!cfg0.contains("manifest"));
    app.add_option("--checkpoint", checkpoint)->required(!cfg0.contains("checkpoint"));
    app.add_option("--cache", cache)->required(!cfg0.contains("cache"));
    app.add_option("--log", log_path, "train log CSV path");
    app.add_option("--direction", direction, "horizontal|vertical|both");
    app.add_option("--normalization", normalization, "per_plane|raw");
    app.add_option("--epochs", tc.epochs);
    app.add_option("--batch-size", tc.batch_size);
    app.add_option("--bins", tc.bins);
    app.add_option("--seed", tc.seed);
    app.add_option("--lr", tc.lr);
    app.add_option("--beta1", tc.beta1);
    app.add_option("--beta2", tc.beta2);
    app.add_option("--eps", tc.eps);
    app.add_option("--train-fraction", train_fraction,
                   "re-split the manifest before training (0 = keep splits)");
    auto* ss = app.add_option("--split-seed", split_seed, "defaults to --seed");
    app.add_option("--threads", threads);
    app.add_option("--config", config);
    if (auto ec = parse_or_exit(app, "train", args)) return *ec;
    split_seed_set = ss->count() > 0 || cfg0.contains("split-seed");
    if (!split_seed_set) split_seed = tc.seed;
    cfg_get(cfg0, "split-seed", split_seed);

    apply_threads(threads);
    tc.direction = direction_mode_from_name(direction);
    tc.normalization = normalization_from_name(normalization);
    tc.checkpoint_path = checkpoint;
    tc.cache_dir = cache;

    const json cfg = {{"command", "train"},
                      {"manifest", manifest_path},
                      {"checkpoint", checkpoint},
                      {"cache", cache},
                      {"log", log_path},
                      {"direction", direction},
                      {"normalization", normalization},
                      {"epochs", tc.epochs},
                      {"batch-size", tc.batch_size},
                      {"bins", tc.bins},
                      {"seed", tc.seed},
                      {"lr", tc.lr},
                      {"beta1", tc.beta1},
                      {"beta2", tc.beta2},
                      {"eps", tc.eps},
                      {"train-fraction", train_fraction},
                      {"split-seed", split_seed},
                      {"threads", threads}};
    echo_config(cfg);

    DatasetManifest m = load_manifest(manifest_path);
    if (train_fraction > 0.0)
        m = split_manifest(m, train_fraction, split_seed);

    const auto [model, log] = train(m, tc);
    if (!log_path.empty()) save_train_log_csv(log_path, log);
    write_config(cfg, checkpoint + ".config.json");

    const EpochRecord& best = log.rows[static_cast<size_t>(log.best_epoch - 1)];
    std::fprintf(stderr,
                 "best epoch %d: val_loss %.6f val_acc %.4f -> %s\n",
                 log.best_epoch, best.val_loss, best.val_acc, checkpoint.c_str());
    return 0;
}

int run_predict(const json& cfg0, const std::vector<std::string>& args) {
    CLI::App app{"score images with a trained model"};
    std::string model_path, image_path, manifest_path, out, cache, split, config;
    int threads = 0;
    cfg_get(cfg0, "model", model_path);
    cfg_get(cfg0, "image", image_path);
    cfg_get(cfg0, "manifest", manifest_path);
    cfg_get(cfg0, "out", out);
    cfg_get(cfg0, "cache", cache);
    cfg_get(cfg0, "split", split);
    cfg_get(cfg0, "threads", threads);
    app.add_option("--model", model_path)->required(!cfg0.contains("model"));
    app.add_option("--image", image_path, "score one image to stdout");
    app.add_option("--manifest", manifest_path, "score a manifest to --out CSV");
    app.add_option("--out", out);
    app.add_option("--cache", cache, "tensor cache dir for manifest scoring");
    app.add_option("--split", split, "train|val|test (default: all)");
    app.add_option("--threads", threads);
    app.add_option("--config", config);
    if (auto ec = parse_or_exit(app, "predict", args)) return *ec;

    apply_threads(threads);
    const json cfg = {{"command", "predict"}, {"model", model_path},
                      {"image", image_path},  {"manifest", manifest_path},
                      {"out", out},           {"cache", cache},
                      {"split", split},       {"threads", threads}};
    echo_config(cfg);

    const Model model = load_checkpoint(model_path);
    if (!image_path.empty()) {
        std::printf("%.17g\n", predict(model, load_image(image_path)));
        return 0;
    }
    if (manifest_path.empty() || out.empty())
        throw Error(ErrorKind::usage, "predict needs --image or --manifest with --out");
    if (cache.empty()) cache = out + ".cache";

    std::optional<Split> only;
    if (!split.empty()) only = split_from_name(split);
    const DatasetManifest m = load_manifest(manifest_path);
    const ScoredSet scored = score_manifest(model, m, cache, only);
    save_scored_csv(out, scored);
    write_config(cfg, out + ".config.json");
    std::cerr << "scored " << scored.items.size() << " images -> " << out << "\n";
    return 0;
}

int run_eval(const json& cfg0, const std::vector<std::string>& args) {
    CLI::App app{"ROC/AUC report with per-manipulation breakdown"};
    std::string scores, out, config;
    bool text = false;
    cfg_get(cfg0, "scores", scores);
    cfg_get(cfg0, "out", out);
    app.add_option("--scores", scores, "scored CSV")->required(!cfg0.contains("scores"));
    app.add_option("--out", out, "report JSON path");
    app.add_flag("--text", text, "print the text table to stdout");
    app.add_option("--config", config);
    if (auto ec = parse_or_exit(app, "eval", args)) return *ec;

    const json cfg = {{"command", "eval"}, {"scores", scores}, {"out", out}};
    echo_config(cfg);

    const ScoredSet s = load_scored_csv(scores);
    const EvalReport rep = per_type_report(s);
    if (!out.empty()) {
        std::ofstream f(out, std::ios::trunc);
        if (!f)
            throw Error(ErrorKind::io_failure, "cannot write " + out);
        f << report_to_json(rep, cfg.dump());
    }
    if (text || out.empty()) std::fputs(report_to_text(rep).c_str(), stdout);
    return 0;
}

int run_fuse(const json& cfg0, const std::vector<std::string>& args) {
    CLI::App app{"average predictions from several models"};
    std::vector<std::string> scores;
    std::string out, config;
    bool report = false;
    if (cfg0.contains("scores")) scores = cfg0.at("scores").get<std::vector<std::string>>();
    cfg_get(cfg0, "out", out);
    app.add_option("--scores", scores, "scored CSV (repeat >= 2x)");
    app.add_option("--out", out)->required(!cfg0.contains("out"));
    app.add_flag("--report", report, "print per-input and fused AUC");
    app.add_option("--config", config);
    if (auto ec = parse_or_exit(app, "fuse", args)) return *ec;

    if (scores.size() < 2)
        throw Error(ErrorKind::usage, "fuse needs at least two --scores files");
    const json cfg = {{"command", "fuse"}, {"scores", scores}, {"out", out}};
    echo_config(cfg);

    std::vector<ScoredSet> sets;
    for (const auto& p : scores) sets.push_back(load_scored_csv(p));
    const ScoredSet fused = fuse(sets);
    save_scored_csv(out, fused);
    write_config(cfg, out + ".config.json");

    if (report) {
        std::printf("%-32s %s\n", "Predictions", "AUC-ROC");
        std::printf("%s\n", std::string(44, '-').c_str());
        for (size_t i = 0; i < sets.size(); ++i)
            std::printf("%-32s %.4f\n", fs::path(scores[i]).filename().string().c_str(),
                        auc(sets[i]));
        std::printf("%-32s %.4f\n", "fusion (mean)", auc(fused));
    }
    return 0;
}

void print_usage() {
    std::fputs(
        "usage: coocnet <command> [options]\n"
        "\n"
        "commands:\n"
        "  gen-sources   generate textured source images\n"
        "  gen-corpus    apply a manipulation recipe to sources\n"
        "  split         stratified train/val assignment for a manifest\n"
        "  extract       batch co-occurrence tensor extraction\n"
        "  train         train the classifier (best-epoch checkpoint)\n"
        "  predict       score one image or a whole manifest\n"
        "  eval          ROC/AUC report with per-type breakdown\n"
        "  fuse          average >= 2 prediction CSVs\n"
        "\n"
        "run `coocnet <command> --help` for options; `--config file.json`\n"
        "supplies defaults, explicit flags win.\n",
        stderr);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        print_usage();
        return 1;
    }
    const std::string cmd = argv[1];
    std::vector<std::string> rest(argv + 2, argv + argc);
    try {
        const json cfg0 = load_config_arg(argc, argv);
        if (cmd == "gen-sources") return run_gen_sources(cfg0, rest);
        if (cmd == "gen-corpus") return run_gen_corpus(cfg0, rest);
        if (cmd == "split") return run_split(cfg0, rest);
        if (cmd == "extract") return run_extract(cfg0, rest);
        if (cmd == "train") return run_train(cfg0, rest);
        if (cmd == "predict") return run_predict(cfg0, rest);
        if (cmd == "eval") return run_eval(cfg0, rest);
        if (cmd == "fuse") return run_fuse(cfg0, rest);
        if (cmd == "--help" || cmd == "-h" || cmd == "help") {
            print_usage();
            return 0;
        }
        std::fprintf(stderr, "error: unknown command \"%s\"\n", cmd.c_str());
        print_usage();
        return 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
