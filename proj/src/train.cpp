#include "cooc/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <omp.h>

#include "cooc/error.hpp"
#include "cooc/rng.hpp"

namespace fs = std::filesystem;

namespace cooc {

void save_train_log_csv(const std::string& path, const TrainLog& log) {
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw Error(ErrorKind::io_failure, "cannot write " + path);
    f << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    char buf[256];
    for (const auto& r : log.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                      r.train_loss, r.train_acc, r.val_loss, r.val_acc);
        f << buf;
    }
    if (!f)
        throw Error(ErrorKind::io_failure, "short write: " + path);
}

std::vector<std::string> extract_to_cache(const DatasetManifest& manifest,
                                          const std::string& cache_dir, int bins,
                                          Normalization norm) {
    fs::create_directories(cache_dir);
    std::vector<std::string> files(manifest.entries.size());
    for (size_t i = 0; i < manifest.entries.size(); ++i) {
        char name[128];
        std::snprintf(name, sizeof(name), "%05zu_%s.b%d.n%d.cooc", i,
                      fs::path(manifest.entries[i].path).stem().string().c_str(),
                      bins, static_cast<int>(norm));
        files[i] = (fs::path(cache_dir) / name).string();
    }

    std::string first_error;
    #pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(manifest.entries.size()); ++i) {
        try {
            if (fs::exists(files[i])) continue;
            const Image img = load_image(manifest.full_path(manifest.entries[i]));
            write_tensor_file(files[i], extract_tensor(img, bins, norm));
        } catch (const std::exception& e) {
            #pragma omp critical(cache_err)
            if (first_error.empty())
                first_error = std::string(e.what()) + " (entry " +
                              manifest.entries[i].path + ")";
        }
    }
    if (!first_error.empty())
        throw Error(ErrorKind::invalid_argument, first_error);
    return files;
}

namespace {

Tensor4 assemble_batch(const std::vector<std::string>& cache_files,
                       const std::vector<size_t>& rows, size_t begin, size_t end,
                       int planes, int bins, DirectionMode mode) {
    Tensor4 batch(static_cast<int>(end - begin), planes, bins, bins);
    for (size_t k = begin; k < end; ++k) {
        CooccurrenceTensor t = read_tensor_file(cache_files[rows[k]]);
        if (t.bins != bins)
            throw Error(ErrorKind::shape_mismatch,
                        "cached tensor bins mismatch: " + cache_files[rows[k]]);
        fill_batch_row(batch, static_cast<int>(k - begin), t, mode);
    }
    return batch;
}

} // namespace

std::pair<double, double> evaluate_cached(const Model& m,
                                          const std::vector<std::string>& cache_files,
                                          const std::vector<int>& labels,
                                          int batch_size) {
    const size_t n = cache_files.size();
    if (n == 0 || labels.size() != n)
        throw Error(ErrorKind::invalid_argument, "nothing to evaluate");

    std::vector<size_t> rows(n);
    for (size_t i = 0; i < n; ++i) rows[i] = i;

    const int planes = direction_mode_planes(m.meta.direction);
    double loss_sum = 0.0;
    size_t correct = 0;
    for (size_t b = 0; b < n; b += batch_size) {
        const size_t e = std::min(n, b + batch_size);
        Tensor4 batch = assemble_batch(cache_files, rows, b, e, planes,
                                       m.meta.bins, m.meta.direction);
        std::vector<int> lab(labels.begin() + b, labels.begin() + e);
        const std::vector<double> logits = forward(m, batch);
        loss_sum += cross_entropy(logits, lab).loss * static_cast<double>(e - b);
        for (size_t i = 0; i < lab.size(); ++i)
            if ((logits[2 * i + 1] > logits[2 * i]) == (lab[i] == 1)) ++correct;
    }
    return {loss_sum / static_cast<double>(n),
            static_cast<double>(correct) / static_cast<double>(n)};
}

std::pair<Model, TrainLog> train(const DatasetManifest& manifest,
                                 const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw Error(ErrorKind::invalid_argument, "epochs and batch_size must be >= 1");
    if (cfg.checkpoint_path.empty() || cfg.cache_dir.empty())
        throw Error(ErrorKind::invalid_argument,
                    "checkpoint_path and cache_dir are required");

    // Partition manifest rows by split and demand both classes on each side.
    std::vector<size_t> train_rows, val_rows;
    for (size_t i = 0; i < manifest.entries.size(); ++i) {
        if (manifest.entries[i].split == Split::train) train_rows.push_back(i);
        if (manifest.entries[i].split == Split::val) val_rows.push_back(i);
    }
    auto class_count = [&](const std::vector<size_t>& rows, int cls) {
        return std::count_if(rows.begin(), rows.end(), [&](size_t i) {
            return manifest.entries[i].label == cls;
        });
    };
    if (train_rows.empty() || val_rows.empty() ||
        class_count(train_rows, 0) == 0 || class_count(train_rows, 1) == 0 ||
        class_count(val_rows, 0) == 0 || class_count(val_rows, 1) == 0)
        throw Error(ErrorKind::invalid_argument,
                    "train and val splits must both contain both classes");

    const std::vector<std::string> cache =
        extract_to_cache(manifest, cfg.cache_dir, cfg.bins, cfg.normalization);

    std::vector<std::string> val_files;
    std::vector<int> val_labels;
    for (size_t i : val_rows) {
        val_files.push_back(cache[i]);
        val_labels.push_back(manifest.entries[i].label);
    }

    ModelMeta meta;
    meta.bins = static_cast<uint16_t>(cfg.bins);
    meta.direction = cfg.direction;
    meta.normalization = cfg.normalization;
    meta.seed = cfg.seed;
    Model model = make_coocnet_s(meta);
    AdamState adam = make_adam_state(model, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

    const int planes = direction_mode_planes(cfg.direction);
    TrainLog log;
    double best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // Sample order depends only on (seed, epoch).
        std::vector<size_t> order = train_rows;
        Rng rng = Rng::from_stream(cfg.seed, 0x65706f6368ull /* "epoch" */,
                                   static_cast<uint64_t>(epoch));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(static_cast<uint32_t>(i))]);

        double loss_sum = 0.0;
        size_t correct = 0;
        for (size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const size_t e = std::min(order.size(), b + cfg.batch_size);
            Tensor4 batch = assemble_batch(cache, order, b, e, planes, cfg.bins,
                                           cfg.direction);
            std::vector<int> labels;
            for (size_t k = b; k < e; ++k)
                labels.push_back(manifest.entries[order[k]].label);

            BackwardResult res = backward(model, batch, labels);
            if (!std::isfinite(res.loss))
                throw Error(ErrorKind::divergence,
                            "training diverged at epoch " + std::to_string(epoch));
            loss_sum += res.loss * static_cast<double>(e - b);
            for (size_t i = 0; i < labels.size(); ++i)
                if ((res.logits[2 * i + 1] > res.logits[2 * i]) == (labels[i] == 1))
                    ++correct;
            adam_step(model, res.grads, adam);
        }

        const auto [val_loss, val_acc] =
            evaluate_cached(model, val_files, val_labels, cfg.batch_size);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
        rec.val_loss = val_loss;
        rec.val_acc = val_acc;
        log.rows.push_back(rec);

        if (val_loss < best_val) {
            best_val = val_loss;
            log.best_epoch = epoch;
            save_checkpoint(cfg.checkpoint_path, model);
        }
    }

    // Hand back exactly what was saved.
    return {load_checkpoint(cfg.checkpoint_path), log};
}

double predict(const Model& m, const Image& img) {
    CooccurrenceTensor t = extract_tensor(img, m.meta.bins, m.meta.normalization);
    const int planes = direction_mode_planes(m.meta.direction);
    Tensor4 batch(1, planes, m.meta.bins, m.meta.bins);
    fill_batch_row(batch, 0, t, m.meta.direction);
    const std::vector<double> logits = forward(m, batch);
    const double mx = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
    return e1 / (e0 + e1);
}

ScoredSet score_manifest(const Model& m, const DatasetManifest& manifest,
                         const std::string& cache_dir,
                         const std::optional<Split>& only_split) {
    const std::vector<std::string> cache =
        extract_to_cache(manifest, cache_dir, m.meta.bins, m.meta.normalization);

    ScoredSet out;
    const int planes = direction_mode_planes(m.meta.direction);
    for (size_t i = 0; i < manifest.entries.size(); ++i) {
        const ManifestEntry& e = manifest.entries[i];
        if (only_split && e.split != *only_split) continue;
        CooccurrenceTensor t = read_tensor_file(cache[i]);
        Tensor4 batch(1, planes, m.meta.bins, m.meta.bins);
        fill_batch_row(batch, 0, t, m.meta.direction);
        const std::vector<double> logits = forward(m, batch);
        const double mx = std::max(logits[0], logits[1]);
        const double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
        out.items.push_back(ScoredItem{
            e.path, e.label, e1 / (e0 + e1),
            e.manipulation_type.value_or("")});
    }
    if (out.items.empty())
        throw Error(ErrorKind::invalid_argument, "no entries matched the split filter");
    return out;
}

} // namespace cooc
