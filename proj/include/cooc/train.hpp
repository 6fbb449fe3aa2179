#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cooc/eval.hpp"
#include "cooc/manifest.hpp"
#include "cooc/nn.hpp"

namespace cooc {

struct TrainConfig {
    int epochs = 50;
    int batch_size = 64;
    DirectionMode direction = DirectionMode::both;
    int bins = 256;
    Normalization normalization = Normalization::per_plane_sum_to_one;
    uint64_t seed = 0;
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::string checkpoint_path; // required
    std::string cache_dir;       // required; tensor files land here
};

struct EpochRecord {
    int epoch = 0; // 1-based
    double train_loss = 0.0, train_acc = 0.0;
    double val_loss = 0.0, val_acc = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> rows;
    int best_epoch = 0; // 1-based epoch with the lowest val loss (first on ties)
};

// CSV columns: epoch,train_loss,train_acc,val_loss,val_acc.
void save_train_log_csv(const std::string& path, const TrainLog& log);

// Extracts tensors for every manifest entry into cache_dir (skipping
// files that already exist) and returns the cache file path per entry.
// Extraction is parallel across images.
std::vector<std::string> extract_to_cache(const DatasetManifest& manifest,
                                          const std::string& cache_dir, int bins,
                                          Normalization norm);

// Epoch loop with Adam and best-checkpoint selection: after each epoch
// the model is scored on the val split and the weights with the lowest
// validation loss are kept (saved to cfg.checkpoint_path). The returned
// model is reloaded from that checkpoint. Deterministic given seed and
// thread count.
std::pair<Model, TrainLog> train(const DatasetManifest& manifest,
                                 const TrainConfig& cfg);

// Mean cross-entropy loss and accuracy of the model over the given
// cached tensors; used for validation and checkpoint-fidelity checks.
std::pair<double, double> evaluate_cached(const Model& m,
                                          const std::vector<std::string>& cache_files,
                                          const std::vector<int>& labels,
                                          int batch_size);

// Softmax probability of "tampered" for one image, extracting with the
// model's own settings.
double predict(const Model& m, const Image& img);

// Batch scoring of manifest entries (optionally restricted to a split)
// via the tensor cache; ids are entry paths.
ScoredSet score_manifest(const Model& m, const DatasetManifest& manifest,
                         const std::string& cache_dir,
                         const std::optional<Split>& only_split);

} // namespace cooc
