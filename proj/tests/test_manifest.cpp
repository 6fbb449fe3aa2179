#include <doctest.h>

#include <cmath>
#include <set>

#include "cooc/error.hpp"
#include "cooc/manifest.hpp"
#include "test_util.hpp"

using namespace cooc;
using namespace testutil;

namespace {

DatasetManifest balanced_manifest(int n) {
    DatasetManifest m;
    for (int i = 0; i < n; ++i) {
        ManifestEntry e;
        e.path = "img_" + std::to_string(i) + ".ppm";
        e.label = i % 2;
        if (e.label == 1) e.manipulation_type = "resize";
        m.entries.push_back(e);
    }
    return m;
}

} // namespace

TEST_CASE("manifest JSONL round-trip") {
    TempDir td("manifest_rt");
    DatasetManifest m = balanced_manifest(7);
    m.entries[3].split = Split::val;
    save_manifest(td.file("m.jsonl"), m);

    const DatasetManifest back = load_manifest(td.file("m.jsonl"));
    REQUIRE(back.entries.size() == m.entries.size());
    for (size_t i = 0; i < m.entries.size(); ++i) {
        CHECK(back.entries[i].path == m.entries[i].path);
        CHECK(back.entries[i].label == m.entries[i].label);
        CHECK(back.entries[i].manipulation_type == m.entries[i].manipulation_type);
        CHECK(back.entries[i].split == m.entries[i].split);
    }
    CHECK(back.base_dir == td.path.string());
}

TEST_CASE("validation rejects duplicates and tag/label mismatches") {
    DatasetManifest m = balanced_manifest(4);
    SUBCASE("duplicate path") {
        m.entries[2].path = m.entries[0].path;
        CHECK_THROWS_AS(validate_manifest(m), Error);
    }
    SUBCASE("tampered without tag") {
        m.entries[1].manipulation_type.reset();
        CHECK_THROWS_AS(validate_manifest(m), Error);
    }
    SUBCASE("untampered with tag") {
        m.entries[0].manipulation_type = "blur";
        CHECK_THROWS_AS(validate_manifest(m), Error);
    }
}

TEST_CASE("100-entry 50/50 split at 0.9 gives 90 train with 45 positives") {
    const DatasetManifest m = balanced_manifest(100);
    const DatasetManifest s = split_manifest(m, 0.9, 7);

    int train = 0, val = 0, train_pos = 0;
    for (const auto& e : s.entries) {
        if (e.split == Split::train) {
            ++train;
            train_pos += e.label;
        } else {
            ++val;
        }
    }
    CHECK(train == 90);
    CHECK(val == 10);
    CHECK(std::abs(train_pos - 45) <= 1);
}

TEST_CASE("split is deterministic and a partition") {
    const DatasetManifest m = balanced_manifest(10);
    const DatasetManifest a = split_manifest(m, 0.9, 123);
    const DatasetManifest b = split_manifest(m, 0.9, 123);
    for (size_t i = 0; i < m.entries.size(); ++i)
        CHECK(a.entries[i].split == b.entries[i].split);

    // different seed moves at least one assignment eventually
    bool any_diff = false;
    for (uint64_t seed = 0; seed < 8 && !any_diff; ++seed) {
        const DatasetManifest c = split_manifest(m, 0.5, seed);
        for (size_t i = 0; i < m.entries.size(); ++i)
            any_diff |= c.entries[i].split != a.entries[i].split;
    }
    CHECK(any_diff);

    // partition: same entries, each in exactly one split
    CHECK(a.entries.size() == m.entries.size());
    std::set<std::string> paths;
    for (const auto& e : a.entries) paths.insert(e.path);
    CHECK(paths.size() == m.entries.size());
}

TEST_CASE("stratification bound holds across sizes and fractions") {
    for (int n : {10, 37, 100, 251}) {
        for (double f : {0.5, 0.7, 0.9}) {
            DatasetManifest m;
            for (int i = 0; i < n; ++i) {
                ManifestEntry e;
                e.path = "p" + std::to_string(i);
                e.label = (i * 7 + 1) % 3 == 0 ? 1 : 0; // ~1/3 positives
                if (e.label) e.manipulation_type = "x";
                m.entries.push_back(e);
            }
            int total_pos = 0;
            for (const auto& e : m.entries) total_pos += e.label;
            if (total_pos == 0) continue;

            const DatasetManifest s = split_manifest(m, f, 99);
            int train = 0, train_pos = 0;
            for (const auto& e : s.entries)
                if (e.split == Split::train) {
                    ++train;
                    train_pos += e.label;
                }
            REQUIRE(train > 0);
            const double got = static_cast<double>(train_pos) / train;
            const double want = static_cast<double>(total_pos) / n;
            CHECK(std::abs(got - want) <= 1.0 / train + 1e-12);
        }
    }
}

TEST_CASE("empty manifest cannot be split") {
    DatasetManifest m;
    CHECK_THROWS_AS(split_manifest(m, 0.9, 1), Error);
}
