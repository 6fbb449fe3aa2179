// End-to-end checks of the coocnet binary: exit codes, artifacts and
// rerun determinism. COOCNET_BIN is injected by CMake.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "cooc/cooccurrence.hpp"
#include "cooc/eval.hpp"
#include "cooc/manifest.hpp"
#include "test_util.hpp"

using namespace cooc;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(COOCNET_BIN) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    f << text;
}

const char* kRecipe = R"({"items":[
    {"kind":"global_blur","count":4,"sigma":[0.8,2.5]},
    {"kind":"additive_noise","count":4,"sigma":[4.0,9.0]},
    {"kind":"intensity_normalize","count":4}
]})";

} // namespace

TEST_CASE("gen-sources then gen-corpus produce a valid manifest") {
    TempDir td("cli_corpus");
    REQUIRE(run("gen-sources --out " + td.file("src") +
                " --count 6 --width 40 --height 32 --seed 5") == 0);
    CHECK(fs::exists(td.file("src") + "/src_0005.ppm"));
    CHECK(fs::exists(td.file("src") + "/run_config.json"));

    write_text(td.file("recipe.json"), kRecipe);
    REQUIRE(run("gen-corpus --sources " + td.file("src") + " --recipe " +
                td.file("recipe.json") + " --out " + td.file("corpus") +
                " --seed 1") == 0);

    const DatasetManifest m = load_manifest(td.file("corpus") + "/manifest.jsonl");
    int tampered = 0;
    for (const auto& e : m.entries) tampered += e.label;
    CHECK(m.entries.size() == 6 + 12);
    CHECK(tampered == 12);

    SUBCASE("rerun with the same seed is byte-identical") {
        REQUIRE(run("gen-corpus --sources " + td.file("src") + " --recipe " +
                    td.file("recipe.json") + " --out " + td.file("corpus2") +
                    " --seed 1") == 0);
        for (const auto& e : m.entries)
            CHECK(read_bytes(td.file("corpus") + "/" + e.path) ==
                  read_bytes(td.file("corpus2") + "/" + e.path));
    }

    SUBCASE("extract writes tensor files sized by --bins and --direction") {
        REQUIRE(run("extract --manifest " + td.file("corpus") + "/manifest.jsonl" +
                    " --out " + td.file("cache") + " --bins 64") == 0);
        int count = 0;
        for (const auto& de : fs::directory_iterator(td.file("cache")))
            if (de.path().extension() == ".cooc") {
                ++count;
                const CooccurrenceTensor t = read_tensor_file(de.path().string());
                CHECK(t.bins == 64);
                CHECK(t.plane_count == 6);
            }
        CHECK(count == 18);

        REQUIRE(run("extract --manifest " + td.file("corpus") + "/manifest.jsonl" +
                    " --out " + td.file("cache_h") +
                    " --bins 64 --direction horizontal") == 0);
        bool saw = false;
        for (const auto& de : fs::directory_iterator(td.file("cache_h")))
            if (de.path().extension() == ".cooc") {
                saw = true;
                CHECK(read_tensor_file(de.path().string()).plane_count == 3);
            }
        CHECK(saw);
    }
}

TEST_CASE("full pipeline: sources to fused report") {
    TempDir td("cli_pipeline");
    REQUIRE(run("gen-sources --out " + td.file("src") +
                " --count 12 --width 48 --height 48 --seed 3") == 0);
    write_text(td.file("recipe.json"), R"({"items":[
        {"kind":"global_blur","count":6,"sigma":[1.0,2.5]},
        {"kind":"additive_noise","count":6,"sigma":[5.0,10.0]}
    ]})");
    REQUIRE(run("gen-corpus --sources " + td.file("src") + " --recipe " +
                td.file("recipe.json") + " --out " + td.file("corpus") +
                " --seed 2") == 0);
    REQUIRE(run("split --manifest " + td.file("corpus") + "/manifest.jsonl" +
                " --out " + td.file("corpus") + "/split.jsonl" +
                " --train-fraction 0.75 --seed 4") == 0);

    const std::string train_common =
        " --manifest " + td.file("corpus") + "/split.jsonl" + " --cache " +
        td.file("cache") + " --bins 32 --epochs 3 --batch-size 8 --seed 5 --log ";
    REQUIRE(run("train --checkpoint " + td.file("both.cnet") + " --direction both" +
                train_common + td.file("both.csv")) == 0);
    REQUIRE(run("train --checkpoint " + td.file("h.cnet") +
                " --direction horizontal" + train_common + td.file("h.csv")) == 0);
    CHECK(fs::exists(td.file("both.cnet")));
    CHECK(fs::exists(td.file("both.csv")));
    CHECK(fs::exists(td.file("both.cnet") + ".config.json"));

    for (const char* name : {"both", "h"})
        REQUIRE(run(std::string("predict --model ") + td.file(std::string(name) + ".cnet") +
                    " --manifest " + td.file("corpus") + "/split.jsonl" +
                    " --split val --cache " + td.file("cache") + " --out " +
                    td.file(std::string(name) + ".scores.csv")) == 0);

    REQUIRE(run("fuse --scores " + td.file("both.scores.csv") + " --scores " +
                td.file("h.scores.csv") + " --out " + td.file("fused.csv") +
                " --report") == 0);
    REQUIRE(run("eval --scores " + td.file("fused.csv") + " --out " +
                td.file("report.json") + " --text") == 0);

    const auto rep = read_bytes(td.file("report.json"));
    const std::string text(rep.begin(), rep.end());
    CHECK(text.find("\"auc\"") != std::string::npos);
    CHECK(text.find("global_blur") != std::string::npos);
    CHECK(text.find("additive_noise") != std::string::npos);
    CHECK(text.find("\"config\"") != std::string::npos);

    // single-image prediction prints a score in [0,1]
    const DatasetManifest m = load_manifest(td.file("corpus") + "/split.jsonl");
    const std::string img = td.file("corpus") + "/" + m.entries[0].path;
    const std::string out_file = td.file("score.txt");
    const int rc = std::system((std::string(COOCNET_BIN) + " predict --model " +
                                td.file("both.cnet") + " --image " + img + " > " +
                                out_file + " 2>/dev/null")
                                   .c_str());
    REQUIRE(WEXITSTATUS(rc) == 0);
    const auto score_bytes = read_bytes(out_file);
    const double score = std::stod(std::string(score_bytes.begin(), score_bytes.end()));
    CHECK(score >= 0.0);
    CHECK(score <= 1.0);
}

TEST_CASE("missing inputs exit nonzero with usage or data codes") {
    TempDir td("cli_errors");
    // missing recipe file -> data error (2)
    CHECK(run("gen-corpus --sources " + td.path.string() + " --recipe " +
              td.file("absent.json") + " --out " + td.file("c") + " --seed 1") == 2);
    // unknown command / missing required flags -> usage (1)
    CHECK(run("definitely-not-a-command") == 1);
    CHECK(run("gen-corpus") == 1);
    // eval on a single-class CSV -> data error (2)
    write_text(td.file("one.csv"), "id,label,score,manipulation_type\na,1,0.5,x\n");
    CHECK(run("eval --scores " + td.file("one.csv") + " --out " + td.file("r.json")) == 2);
    // fuse with mismatched ids -> data error (2)
    write_text(td.file("s1.csv"),
               "id,label,score,manipulation_type\na,1,0.5,x\nb,0,0.5,\n");
    write_text(td.file("s2.csv"),
               "id,label,score,manipulation_type\na,1,0.5,x\nc,0,0.5,\n");
    CHECK(run("fuse --scores " + td.file("s1.csv") + " --scores " + td.file("s2.csv") +
              " --out " + td.file("f.csv")) == 2);
    // fuse with one input -> usage (1)
    CHECK(run("fuse --scores " + td.file("s1.csv") + " --out " + td.file("f.csv")) == 1);
}

TEST_CASE("config file supplies defaults and flags win") {
    TempDir td("cli_config");
    write_text(td.file("cfg.json"),
               R"({"out":")" + td.file("from_config") +
                   R"(","count":3,"width":24,"height":20,"seed":9})");
    REQUIRE(run("gen-sources --config " + td.file("cfg.json")) == 0);
    CHECK(fs::exists(td.file("from_config") + "/src_0002.ppm"));
    CHECK(!fs::exists(td.file("from_config") + "/src_0003.ppm"));

    // explicit flag overrides the config value
    REQUIRE(run("gen-sources --config " + td.file("cfg.json") + " --out " +
                td.file("flag_wins") + " --count 2") == 0);
    CHECK(fs::exists(td.file("flag_wins") + "/src_0001.ppm"));
    CHECK(!fs::exists(td.file("flag_wins") + "/src_0002.ppm"));
}

TEST_CASE("fuse averages two prediction CSVs") {
    TempDir td("cli_fuse");
    write_text(td.file("a.csv"),
               "id,label,score,manipulation_type\nx,0,0.2,\ny,1,0.8,blur\n");
    write_text(td.file("b.csv"),
               "id,label,score,manipulation_type\nx,0,0.4,\ny,1,0.6,blur\n");
    REQUIRE(run("fuse --scores " + td.file("a.csv") + " --scores " + td.file("b.csv") +
                " --out " + td.file("f.csv")) == 0);
    const ScoredSet fused = load_scored_csv(td.file("f.csv"));
    REQUIRE(fused.items.size() == 2);
    CHECK(fused.items[0].score == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(fused.items[1].score == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(fused.items[1].tag == "blur");
}
