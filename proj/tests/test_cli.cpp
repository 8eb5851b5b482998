#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cli.hpp"
#include "vcnet/datagen.hpp"
#include "vcnet/trainer.hpp"

namespace fs = std::filesystem;
using vcnet::cli::run;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("vcnet_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("datagen subcommand writes the dataset and is idempotent") {
    const fs::path dir = temp_dir("datagen");
    const std::vector<std::string> args = {"datagen", "--n",    "12",
                                           "--seed",  "7",      "--size",
                                           "96x96",   "--split", "0.7",
                                           "--out",   (dir / "d1").string()};
    CHECK(run(args) == 0);
    CHECK(fs::exists(dir / "d1" / "manifest.jsonl"));
    const auto manifest = vcnet::datagen::read_manifest((dir / "d1" / "manifest.jsonl").string());
    CHECK(manifest.records.size() == 12);
    CHECK(manifest.split_records("train").size() == 8); // round(12*0.7)

    auto args2 = args;
    args2.back() = (dir / "d2").string();
    CHECK(run(args2) == 0);
    CHECK(file_bytes(dir / "d1" / "manifest.jsonl") == file_bytes(dir / "d2" / "manifest.jsonl"));
    CHECK(file_bytes(dir / "d1" / "images" / "sample_00003.png") ==
          file_bytes(dir / "d2" / "images" / "sample_00003.png"));
    fs::remove_all(dir);
}

TEST_CASE("unknown flags are rejected with exit code 1") {
    CHECK(run({"datagen", "--n", "12", "--out", "/tmp/x", "--frobnicate"}) == 1);
    CHECK(run({"--frobnicate"}) == 1);
    CHECK(run({"nonsense-subcommand"}) == 1);
}

TEST_CASE("missing required flags are usage errors") {
    CHECK(run({"datagen", "--n", "12"}) == 1);      // no --out
    CHECK(run({"predict", "--image", "x.png"}) == 1); // no checkpoint/out
}

TEST_CASE("runtime failures exit with code 2") {
    CHECK(run({"datagen", "--n", "12", "--seed", "1", "--out",
               "/proc/definitely/not/writable"}) == 2);
    CHECK(run({"curves", "--log", "/nonexistent.csv", "--out", "/tmp/c.svg"}) == 2);
    CHECK(run({"predict", "--checkpoint", "/nonexistent.vcnet", "--image", "x.png", "--out",
               "/tmp/o.png"}) == 2);
}

TEST_CASE("help text lists every flag with defaults") {
    using vcnet::cli::help_text;
    const std::string dg = help_text("datagen");
    for (const char* flag : {"--n", "--seed", "--size", "--split", "--out", "--no-augment"})
        CHECK(dg.find(flag) != std::string::npos);
    CHECK(dg.find("256x256") != std::string::npos); // default shown
    CHECK(dg.find("0.7") != std::string::npos);

    const std::string st = help_text("stats");
    for (const char* flag : {"--pred", "--manifest", "--hd95-variant", "--out"})
        CHECK(st.find(flag) != std::string::npos);
    CHECK(st.find("percentile") != std::string::npos);

    const std::string tr = help_text("train");
    for (const char* flag :
         {"--manifest", "--config", "--epochs", "--lr", "--schedule", "--tau", "--seed"})
        CHECK(tr.find(flag) != std::string::npos);

    for (const char* sub : {"predict", "eval", "curves"}) CHECK(!help_text(sub).empty());
}

TEST_CASE("curves renders an SVG with both loss series") {
    const fs::path dir = temp_dir("curves");
    {
        std::ofstream f(dir / "log.csv");
        f << "epoch,ce,dice,vqcl,total,beta,omega0,omega1,omega2,val_dice\n";
        for (int e = 1; e <= 20; ++e)
            f << e << ',' << 1.0 / e << ',' << 0.5 / e << ',' << 2.0 / e << ',' << 3.5 / e
              << ",0,1,1,1,\n";
    }
    const std::string out = (dir / "curves.svg").string();
    CHECK(run({"curves", "--log", (dir / "log.csv").string(), "--out", out}) == 0);
    const std::string svg = file_bytes(out);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("L_VQCL") != std::string::npos);
    CHECK(svg.find("L_total") != std::string::npos);
    CHECK(svg.find("epoch") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("stats evaluates prediction directories end to end") {
    const fs::path dir = temp_dir("stats");
    REQUIRE(run({"datagen", "--n", "10", "--seed", "3", "--size", "96x96", "--out",
                 (dir / "data").string()}) == 0);
    const auto manifest = vcnet::datagen::read_manifest((dir / "data" / "manifest.jsonl").string());

    fs::create_directories(dir / "pred");
    for (const auto* rec : manifest.split_records("test"))
        fs::copy_file(rec->mask_path, dir / "pred" / (rec->id + ".png"));

    const std::string report_path = (dir / "report.json").string();
    CHECK(run({"stats", "--pred", (dir / "pred").string(), "--manifest",
               (dir / "data" / "manifest.jsonl").string(), "--hd95-variant", "literal", "--out",
               report_path, "--csv", (dir / "report.csv").string()}) == 0);
    CHECK(fs::exists(report_path));
    const std::string report = file_bytes(report_path);
    CHECK(report.find("\"hd95_variant\": \"literal\"") != std::string::npos);
    CHECK(file_bytes(dir / "report.csv").find("id,class,dice") == 0);

    // bad variant is a runtime error
    CHECK(run({"stats", "--pred", (dir / "pred").string(), "--manifest",
               (dir / "data" / "manifest.jsonl").string(), "--hd95-variant", "bogus", "--out",
               report_path}) == 2);
    fs::remove_all(dir);
}

TEST_CASE("VCNET_CACHE_DIR provides default output locations") {
    const fs::path dir = temp_dir("cachedir");
    REQUIRE(run({"datagen", "--n", "10", "--seed", "4", "--size", "64x64", "--out",
                 (dir / "data").string()}) == 0);
    setenv("VCNET_CACHE_DIR", (dir / "cache").string().c_str(), 1);
    fs::create_directories(dir / "cache");
    CHECK(run({"train", "--manifest", (dir / "data" / "manifest.jsonl").string(), "--epochs",
               "1", "--batch", "4", "--encoder-channels", "16", "--embed-dim", "8"}) == 0);
    CHECK(fs::exists(dir / "cache" / "checkpoint.vcnet"));
    CHECK(run({"eval", "--checkpoint", (dir / "cache" / "checkpoint.vcnet").string(),
               "--manifest", (dir / "data" / "manifest.jsonl").string()}) == 0);
    CHECK(fs::exists(dir / "cache" / "report.json"));
    CHECK(fs::exists(dir / "cache" / "report.csv"));
    CHECK(fs::exists(dir / "cache" / "predictions"));
    unsetenv("VCNET_CACHE_DIR");
    fs::remove_all(dir);
}

TEST_CASE("train, predict and eval subcommands round-trip on a tiny dataset") {
    const fs::path dir = temp_dir("train");
    REQUIRE(run({"datagen", "--n", "10", "--seed", "9", "--size", "64x64", "--split", "0.8",
                 "--out", (dir / "data").string()}) == 0);

    CHECK(run({"train", "--manifest", (dir / "data" / "manifest.jsonl").string(), "--out",
               (dir / "run").string(), "--epochs", "1", "--batch", "4", "--encoder-channels",
               "16", "--embed-dim", "8", "--seed", "3"}) == 0);
    const std::string ckpt = (dir / "run" / "checkpoint.vcnet").string();
    CHECK(fs::exists(ckpt));
    CHECK(fs::exists(dir / "run" / "train_log.csv"));

    const auto manifest = vcnet::datagen::read_manifest((dir / "data" / "manifest.jsonl").string());
    const std::string image = manifest.records[0].image_path;
    CHECK(run({"predict", "--checkpoint", ckpt, "--image", image, "--out",
               (dir / "pred.png").string()}) == 0);
    CHECK(fs::exists(dir / "pred.png"));

    CHECK(run({"eval", "--checkpoint", ckpt, "--manifest",
               (dir / "data" / "manifest.jsonl").string(), "--out",
               (dir / "report.json").string(), "--pred-dir", (dir / "preds").string()}) == 0);
    CHECK(fs::exists(dir / "report.json"));
    fs::remove_all(dir);
}

TEST_SUITE_END();
