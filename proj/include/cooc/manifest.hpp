#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cooc {

enum class Split { train, val, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct ManifestEntry {
    std::string path; // relative to the manifest's directory
    int label = 0;    // 0 untampered, 1 tampered
    std::optional<std::string> manipulation_type; // present iff label == 1
    Split split = Split::train;
};

// Dataset listing, one JSON object per line on disk. Paths are unique;
// manipulation_type is present exactly on tampered entries. base_dir is
// where the manifest was loaded from (not serialized) so entry paths can
// be resolved relative to it.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::string base_dir;

    std::string full_path(const ManifestEntry& e) const;
};

// Throws on duplicate paths, bad labels or tag/label mismatch.
void validate_manifest(const DatasetManifest& m);

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& m);

// Stratified train/val assignment: per class, shuffles entries with the
// seeded generator and sends round(train_fraction * class_count) of them
// to train, the rest to val. Entry order is preserved in the result.
DatasetManifest split_manifest(const DatasetManifest& m, double train_fraction,
                               uint64_t seed);

} // namespace cooc
