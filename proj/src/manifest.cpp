#include "cooc/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "cooc/error.hpp"
#include "cooc/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cooc {

const char* split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "train";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw Error(ErrorKind::corrupt_stream, "unknown split: " + name);
}

std::string DatasetManifest::full_path(const ManifestEntry& e) const {
    fs::path p(e.path);
    if (p.is_absolute() || base_dir.empty()) return e.path;
    return (fs::path(base_dir) / p).string();
}

void validate_manifest(const DatasetManifest& m) {
    std::unordered_set<std::string> seen;
    for (const auto& e : m.entries) {
        if (!seen.insert(e.path).second)
            throw Error(ErrorKind::invalid_argument,
                        "duplicate manifest path: " + e.path);
        if (e.label != 0 && e.label != 1)
            throw Error(ErrorKind::invalid_argument,
                        "manifest label must be 0 or 1: " + e.path);
        if ((e.label == 1) != e.manipulation_type.has_value())
            throw Error(ErrorKind::invalid_argument,
                        "manipulation_type must be present iff label==1: " + e.path);
    }
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw Error(ErrorKind::unreadable_file, "cannot open manifest " + path);

    DatasetManifest m;
    m.base_dir = fs::path(path).parent_path().string();
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::corrupt_stream,
                        path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        ManifestEntry e;
        e.path = j.at("path").get<std::string>();
        e.label = j.at("label").get<int>();
        if (j.contains("manipulation_type") && !j["manipulation_type"].is_null())
            e.manipulation_type = j["manipulation_type"].get<std::string>();
        if (j.contains("split") && !j["split"].is_null())
            e.split = split_from_name(j["split"].get<std::string>());
        m.entries.push_back(std::move(e));
    }
    validate_manifest(m);
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
    validate_manifest(m);
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw Error(ErrorKind::io_failure, "cannot write manifest " + path);
    for (const auto& e : m.entries) {
        json j;
        j["path"] = e.path;
        j["label"] = e.label;
        if (e.manipulation_type) j["manipulation_type"] = *e.manipulation_type;
        j["split"] = split_name(e.split);
        f << j.dump() << '\n';
    }
    if (!f)
        throw Error(ErrorKind::io_failure, "short write: " + path);
}

DatasetManifest split_manifest(const DatasetManifest& m, double train_fraction,
                               uint64_t seed) {
    if (m.entries.empty())
        throw Error(ErrorKind::invalid_argument, "cannot split empty manifest");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw Error(ErrorKind::invalid_argument,
                    "train_fraction must lie in (0, 1)");

    DatasetManifest out = m;
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < out.entries.size(); ++i)
            if (out.entries[i].label == cls) idx.push_back(i);
        if (idx.empty()) continue;

        Rng rng = Rng::from_stream(seed, 0x73706c6974ull /* "split" */,
                                   static_cast<uint64_t>(cls));
        for (size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.next_below(static_cast<uint32_t>(i))]);

        const auto n_train = static_cast<size_t>(
            std::llround(train_fraction * static_cast<double>(idx.size())));
        for (size_t k = 0; k < idx.size(); ++k)
            out.entries[idx[k]].split = k < n_train ? Split::train : Split::val;
    }
    return out;
}

} // namespace cooc
