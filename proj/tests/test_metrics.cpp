#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "oracles.hpp"
#include "vcnet/datagen.hpp"
#include "vcnet/metrics.hpp"
#include "vcnet/png_io.hpp"
#include "vcnet/rng.hpp"

namespace fs = std::filesystem;
using namespace vcnet;
using namespace vcnet::metrics;

namespace {

Raster from_bits(int bits, int h, int w) {
    Raster r(h, w, 0);
    for (int i = 0; i < h * w; ++i) r.at(i) = (bits >> i) & 1;
    return r;
}

Raster random_mask(int h, int w, int classes, std::uint64_t seed) {
    Rng rng(seed);
    Raster r(h, w, 0);
    for (std::size_t i = 0; i < r.size(); ++i)
        r.at(i) = static_cast<std::uint8_t>(rng.uniform_int(0, classes - 1));
    return r;
}

Raster square_at(int h, int w, int y0, int x0, int side, std::uint8_t cls = 1) {
    Raster r(h, w, 0);
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) r(y, x) = cls;
    return r;
}

} // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("confusion counts match hand-tallied cases") {
    Raster truth(3, 3, 1);
    Raster pred = truth;
    pred(0, 0) = 0;
    const ConfusionCounts c = confusion(pred, truth, 1);
    CHECK(c.tp == 8);
    CHECK(c.fn == 1);
    CHECK(c.fp == 0);
    CHECK(c.tn == 0);

    const ConfusionCounts perfect = confusion(truth, truth, 1);
    CHECK(perfect.fp == 0);
    CHECK(perfect.fn == 0);

    // binary complement: no overlap at all
    Raster a(2, 2, 0), b(2, 2, 1);
    const ConfusionCounts comp = confusion(a, b, 1);
    CHECK(comp.tp == 0);
    CHECK(comp.tn == 0);

    CHECK_THROWS_AS(confusion(Raster(2, 2, 0), Raster(3, 3, 0), 1), Error);
}

TEST_CASE("dice, iou and accuracy formulas") {
    ConfusionCounts c{2, 2, 2, 3};
    CHECK(dice(c) == doctest::Approx(0.5));
    CHECK(iou(c) == doctest::Approx(1.0 / 3.0));
    CHECK(accuracy(c) == doctest::Approx(5.0 / 9.0));

    ConfusionCounts empty{0, 0, 0, 9};
    CHECK(dice(empty) == 1.0); // empty-vs-empty convention
    CHECK(iou(empty) == 1.0);
    CHECK(accuracy(empty) == 1.0);
}

TEST_CASE("surface extraction: interior pixels are not surface, border pixels are") {
    // 4x4 solid block in an 8x8 image: 12 boundary pixels, 4 interior
    const Raster block = square_at(8, 8, 2, 2, 4);
    const auto pts = surface_points(block, 1);
    CHECK(pts.size() == 12);
    for (const auto& [y, x] : pts) CHECK(!(y >= 3 && y <= 4 && x >= 3 && x <= 4));

    // block touching the image border: border pixels are surface
    const Raster corner = square_at(4, 4, 0, 0, 3);
    const auto cpts = surface_points(corner, 1);
    CHECK(cpts.size() == 8); // 3x3 block: all but the (1,1)-relative center... center is (1,1)
}

TEST_CASE("hd95 of identical masks is zero under both variants") {
    const Raster m = square_at(16, 16, 4, 4, 5);
    CHECK(hd95(m, m, 1, Hd95Variant::Percentile) == 0.0);
    CHECK(hd95(m, m, 1, Hd95Variant::Literal) == 0.0);
    CHECK(asd(m, m, 1) == 0.0);
}

TEST_CASE("hd95 of two 5x5 squares offset by 3 columns") {
    const Raster a = square_at(16, 16, 5, 2, 5);
    const Raster b = square_at(16, 16, 5, 5, 5);
    // derived via the all-pairs brute-force oracle
    const double lit = oracles::brute_hd95_literal(a, b, 1);
    const double pct = oracles::brute_hd95_percentile(a, b, 1);
    CHECK(lit == doctest::Approx(0.95 * 3.0).epsilon(1e-12));
    CHECK(pct == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(hd95(a, b, 1, Hd95Variant::Literal) == doctest::Approx(lit).epsilon(1e-9));
    CHECK(hd95(a, b, 1, Hd95Variant::Percentile) == doctest::Approx(pct).epsilon(1e-9));
}

TEST_CASE("single-pixel masks at distance d") {
    Raster a(16, 16, 0), b(16, 16, 0);
    a(3, 3) = 1;
    b(3, 10) = 1; // d = 7
    CHECK(hd95(a, b, 1, Hd95Variant::Literal) == doctest::Approx(0.95 * 7.0));
    CHECK(asd(a, b, 1) == doctest::Approx(7.0));

    a(3, 3) = 0;
    a(8, 6) = 1; // d = sqrt(25+16)
    const double d = std::hypot(5.0, 4.0);
    CHECK(hd95(a, b, 1, Hd95Variant::Literal) == doctest::Approx(0.95 * d));
}

TEST_CASE("distance metrics reject empty masks") {
    const Raster full = square_at(8, 8, 2, 2, 3);
    const Raster empty(8, 8, 0);
    CHECK_THROWS_AS(hd95(full, empty, 1), Error);
    CHECK_THROWS_AS(hd95(empty, full, 1), Error);
    CHECK_THROWS_AS(asd(empty, empty, 1), Error);
}

TEST_CASE("asd of a shifted square matches the brute-force oracle") {
    const Raster a = square_at(16, 16, 4, 4, 5);
    const Raster b = square_at(16, 16, 5, 4, 5); // shifted by 1 row
    CHECK(asd(a, b, 1) == doctest::Approx(oracles::brute_asd(a, b, 1)).epsilon(1e-12));
}

TEST_CASE("asd is one-directional: a documented asymmetric pair") {
    // small prediction inside a large truth: pred surface is near truth's
    // interior-facing ring, but truth surface is far from the small square
    const Raster small = square_at(24, 24, 10, 10, 2);
    const Raster large = square_at(24, 24, 4, 4, 14);
    const double pred_to_truth = asd(small, large, 1);
    const double truth_to_pred = asd(large, small, 1);
    CHECK(pred_to_truth != doctest::Approx(truth_to_pred));
    CHECK(pred_to_truth == doctest::Approx(oracles::brute_asd(small, large, 1)).epsilon(1e-12));
    CHECK(truth_to_pred == doctest::Approx(oracles::brute_asd(large, small, 1)).epsilon(1e-12));
}

TEST_CASE("exhaustive 3x3 binary sweep against set-based and all-pairs oracles") {
    // reduced sweep here (64 x 512 pairs); the acceptance suite runs all 512x512
    for (int tb = 0; tb < 512; tb += 8) {
        const Raster truth = from_bits(tb, 3, 3);
        const auto truth_set = oracles::class_pixels(truth, 1);
        for (int pb = 0; pb < 512; ++pb) {
            const Raster pred = from_bits(pb, 3, 3);
            const auto pred_set = oracles::class_pixels(pred, 1);

            const ConfusionCounts c = confusion(pred, truth, 1);
            CHECK(dice(c) == doctest::Approx(oracles::set_dice(pred_set, truth_set)).epsilon(1e-12));
            CHECK(iou(c) == doctest::Approx(oracles::set_iou(pred_set, truth_set)).epsilon(1e-12));
            CHECK(accuracy(c) ==
                  doctest::Approx(oracles::set_accuracy(pred_set, truth_set, 9)).epsilon(1e-12));

            if (!pred_set.empty() && !truth_set.empty()) {
                CHECK(hd95(pred, truth, 1, Hd95Variant::Percentile) ==
                      doctest::Approx(oracles::brute_hd95_percentile(pred, truth, 1)).epsilon(1e-9));
                CHECK(hd95(pred, truth, 1, Hd95Variant::Literal) ==
                      doctest::Approx(oracles::brute_hd95_literal(pred, truth, 1)).epsilon(1e-9));
                CHECK(asd(pred, truth, 1) ==
                      doctest::Approx(oracles::brute_asd(pred, truth, 1)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("hd95 literal variant is symmetric") {
    const Raster a = square_at(20, 20, 3, 3, 6);
    Raster b(20, 20, 0);
    b(12, 12) = 1;
    b(12, 13) = 1;
    b(15, 9) = 1;
    CHECK(hd95(a, b, 1, Hd95Variant::Literal) ==
          doctest::Approx(hd95(b, a, 1, Hd95Variant::Literal)).epsilon(1e-12));
}

TEST_CASE("metrics are invariant under joint translation") {
    const Raster a = square_at(24, 24, 3, 3, 5);
    Raster b(24, 24, 0);
    b(5, 5) = 1;
    b(5, 6) = 1;
    b(9, 4) = 1;

    auto translate = [](const Raster& r, int dy, int dx) {
        Raster out(r.height(), r.width(), 0);
        for (int y = 0; y < r.height(); ++y)
            for (int x = 0; x < r.width(); ++x)
                if (r(y, x)) out(y + dy, x + dx) = r(y, x);
        return out;
    };
    const Raster a2 = translate(a, 6, 7), b2 = translate(b, 6, 7);

    const ConfusionCounts c1 = confusion(b, a, 1), c2 = confusion(b2, a2, 1);
    CHECK(dice(c1) == dice(c2));
    CHECK(iou(c1) == iou(c2));
    CHECK(hd95(b, a, 1) == doctest::Approx(hd95(b2, a2, 1)).epsilon(1e-12));
    CHECK(asd(b, a, 1) == doctest::Approx(asd(b2, a2, 1)).epsilon(1e-12));
}

TEST_CASE("dice and iou are symmetric; adding a false positive never raises them") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Raster a = random_mask(8, 8, 2, trial * 2);
        const Raster b = random_mask(8, 8, 2, trial * 2 + 1);
        const ConfusionCounts ab = confusion(a, b, 1), ba = confusion(b, a, 1);
        CHECK(dice(ab) == doctest::Approx(dice(ba)).epsilon(1e-12));
        CHECK(iou(ab) == doctest::Approx(iou(ba)).epsilon(1e-12));

        // flip one background prediction pixel to class 1
        Raster worse = a;
        for (std::size_t i = 0; i < worse.size(); ++i)
            if (worse.at(i) == 0 && b.at(i) == 0) {
                worse.at(i) = 1;
                break;
            }
        CHECK(dice(confusion(worse, b, 1)) <= dice(ab) + 1e-12);
        CHECK(iou(confusion(worse, b, 1)) <= iou(ab) + 1e-12);
    }
}

TEST_CASE("class_area_proportions sums to one") {
    Raster all_bg(10, 10, 0);
    const auto p = class_area_proportions(all_bg);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 0.0);
    CHECK(p[2] == 0.0);

    // 1000-pixel mask with a 627/299/74 split
    Raster m(25, 40, 0);
    for (int i = 0; i < 299; ++i) m.at(627 + i) = 1;
    for (int i = 0; i < 74; ++i) m.at(926 + i) = 2;
    const auto q = class_area_proportions(m);
    CHECK(q[0] == doctest::Approx(0.627).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(0.299).epsilon(1e-12));
    CHECK(q[2] == doctest::Approx(0.074).epsilon(1e-12));
    CHECK(q[0] + q[1] + q[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("percentile uses linear interpolation between closest ranks") {
    CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 50.0) == doctest::Approx(2.5));
    CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 100.0) == 4.0);
    CHECK(percentile({5.0}, 95.0) == 5.0);
    CHECK(percentile({0.0, 10.0}, 25.0) == doctest::Approx(2.5));
    CHECK_THROWS_AS(percentile({}, 50.0), Error);
}

TEST_CASE("evaluate_dataset on perfect predictions and report output") {
    const fs::path dir = fs::temp_directory_path() / "vcnet_test_eval";
    fs::remove_all(dir);
    fs::create_directories(dir / "pred");

    datagen::BuildOptions opts;
    opts.canvas_h = 96;
    opts.canvas_w = 96;
    const auto manifest = datagen::build_dataset(10, 77, (dir / "data").string(), opts);

    // copy truth masks as predictions
    for (const auto* rec : manifest.split_records("test")) {
        const Raster truth = pngio::read_mask(rec->mask_path);
        pngio::write_mask((dir / "pred" / (rec->id + ".png")).string(), truth);
    }

    const MetricsReport report = evaluate_dataset((dir / "pred").string(), manifest);
    REQUIRE(report.per_sample.size() == 3);
    for (const auto& s : report.per_sample) {
        CHECK(s.macro.dice == doctest::Approx(1.0));
        CHECK(s.macro.iou == doctest::Approx(1.0));
        CHECK(s.macro.acc == doctest::Approx(1.0));
        CHECK(s.macro.hd95 == doctest::Approx(0.0));
        CHECK(s.macro.asd == doctest::Approx(0.0));
    }

    // JSON round-trips byte-identically modulo key order
    const std::string text = report.to_json_string();
    const auto parsed = nlohmann::json::parse(text);
    CHECK(parsed.dump(2) == text);
    CHECK(parsed.contains("per_sample"));
    CHECK(parsed.contains("per_class"));
    CHECK(parsed.contains("macro"));
    CHECK(parsed.contains("aggregation"));
    for (const char* stat : {"mean", "sd", "q25", "q50", "q75"})
        CHECK(parsed["aggregation"].contains(stat));

    // CSV: header + one row per (sample, class)
    const std::string csv = report.to_csv_string();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 3);

    // missing prediction file
    fs::remove(dir / "pred" / (manifest.split_records("test")[0]->id + ".png"));
    CHECK_THROWS_AS(evaluate_dataset((dir / "pred").string(), manifest), Error);

    fs::remove_all(dir);
}

TEST_CASE("single-sample aggregation has zero spread") {
    const Aggregate a = aggregate({0.75});
    CHECK(a.mean == 0.75);
    CHECK(a.sd == 0.0);
    CHECK(a.q25 == 0.75);
    CHECK(a.q50 == 0.75);
    CHECK(a.q75 == 0.75);
}

TEST_CASE("evaluate_dataset substitutes the diagonal penalty for undefined distances") {
    const fs::path dir = fs::temp_directory_path() / "vcnet_test_penalty";
    fs::remove_all(dir);
    fs::create_directories(dir / "pred");

    datagen::BuildOptions opts;
    opts.canvas_h = 96;
    opts.canvas_w = 96;
    const auto manifest = datagen::build_dataset(10, 78, (dir / "data").string(), opts);

    // predictions that never contain class 2
    for (const auto* rec : manifest.split_records("test")) {
        Raster pred = pngio::read_mask(rec->mask_path);
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred.at(i) == 2) pred.at(i) = 0;
        pngio::write_mask((dir / "pred" / (rec->id + ".png")).string(), pred);
    }
    const MetricsReport report = evaluate_dataset((dir / "pred").string(), manifest);
    const double diag = std::hypot(96.0, 96.0);
    bool saw_penalty = false;
    for (const auto& s : report.per_sample)
        if (s.area_truth[2] > 0.0) {
            CHECK(s.per_class[2].hd95 == doctest::Approx(diag));
            CHECK(s.per_class[2].asd == doctest::Approx(diag));
            saw_penalty = true;
        }
    CHECK(saw_penalty);
    fs::remove_all(dir);
}

TEST_SUITE_END();
