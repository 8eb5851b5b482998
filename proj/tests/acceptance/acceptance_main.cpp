// Acceptance suite: one criterion per function, one PASS/FAIL line each.
// Returns the number of failed criteria as the process exit code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "vcnet/datagen.hpp"
#include "vcnet/losses.hpp"
#include "vcnet/metrics.hpp"
#include "vcnet/png_io.hpp"
#include "vcnet/rng.hpp"
#include "vcnet/trainer.hpp"
#include "vcnet/vqcl.hpp"

namespace fs = std::filesystem;
using namespace vcnet;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw CheckFailure(msg);
}

void require_close(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
        std::ostringstream os;
        os.precision(15);
        os << what << ": got " << got << ", want " << want << " (tol " << tol << ")";
        throw CheckFailure(os.str());
    }
}

fs::path work_dir() {
    static const fs::path p = [] {
        fs::path d = fs::temp_directory_path() / "vcnet_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return p;
}

Raster mask_from_bits(int bits, int h, int w) {
    Raster r(h, w, 0);
    for (int i = 0; i < h * w; ++i) r.at(i) = (bits >> i) & 1;
    return r;
}

// ---------------------------------------------------------------- criterion 1

void metric_oracle_equivalence() {
    // exhaustive sweep over all 3x3 binary truth/prediction pairs
    long distance_pairs = 0;
    for (int tb = 0; tb < 512; ++tb) {
        const Raster truth = mask_from_bits(tb, 3, 3);
        const auto truth_set = oracles::class_pixels(truth, 1);
        for (int pb = 0; pb < 512; ++pb) {
            const Raster pred = mask_from_bits(pb, 3, 3);
            const auto pred_set = oracles::class_pixels(pred, 1);

            const metrics::ConfusionCounts c = metrics::confusion(pred, truth, 1);
            require(std::abs(metrics::dice(c) - oracles::set_dice(pred_set, truth_set)) == 0.0,
                    "dice mismatch on 3x3 sweep");
            require(std::abs(metrics::iou(c) - oracles::set_iou(pred_set, truth_set)) == 0.0,
                    "iou mismatch on 3x3 sweep");
            require(std::abs(metrics::accuracy(c) -
                             oracles::set_accuracy(pred_set, truth_set, 9)) == 0.0,
                    "accuracy mismatch on 3x3 sweep");

            if (!pred_set.empty() && !truth_set.empty()) {
                ++distance_pairs;
                require_close(metrics::hd95(pred, truth, 1, metrics::Hd95Variant::Percentile),
                              oracles::brute_hd95_percentile(pred, truth, 1), 1e-9,
                              "hd95 percentile on 3x3 sweep");
                require_close(metrics::hd95(pred, truth, 1, metrics::Hd95Variant::Literal),
                              oracles::brute_hd95_literal(pred, truth, 1), 1e-9,
                              "hd95 literal on 3x3 sweep");
                require_close(metrics::asd(pred, truth, 1), oracles::brute_asd(pred, truth, 1),
                              1e-9, "asd on 3x3 sweep");
            }
        }
    }
    require(distance_pairs > 200000, "sweep unexpectedly small");

    // 200 random 16x16 3-class pairs
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        Raster truth(16, 16, 0), pred(16, 16, 0);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            truth.at(i) = static_cast<std::uint8_t>(rng.uniform_int(0, 2));
            pred.at(i) = static_cast<std::uint8_t>(rng.uniform_int(0, 2));
        }
        for (int cls = 0; cls < 3; ++cls) {
            const auto ts = oracles::class_pixels(truth, cls);
            const auto ps = oracles::class_pixels(pred, cls);
            const metrics::ConfusionCounts c = metrics::confusion(pred, truth, cls);
            require(std::abs(metrics::dice(c) - oracles::set_dice(ps, ts)) == 0.0,
                    "dice mismatch on random pair");
            require(std::abs(metrics::iou(c) - oracles::set_iou(ps, ts)) == 0.0,
                    "iou mismatch on random pair");
            require(std::abs(metrics::accuracy(c) - oracles::set_accuracy(ps, ts, 256)) == 0.0,
                    "accuracy mismatch on random pair");
            if (!ts.empty() && !ps.empty()) {
                require_close(metrics::hd95(pred, truth, cls, metrics::Hd95Variant::Percentile),
                              oracles::brute_hd95_percentile(pred, truth, cls), 1e-9,
                              "hd95 percentile on random pair");
                require_close(metrics::hd95(pred, truth, cls, metrics::Hd95Variant::Literal),
                              oracles::brute_hd95_literal(pred, truth, cls), 1e-9,
                              "hd95 literal on random pair");
                require_close(metrics::asd(pred, truth, cls),
                              oracles::brute_asd(pred, truth, cls), 1e-9, "asd on random pair");
            }
        }
    }
}

// ---------------------------------------------------------------- criterion 2

void ppw_schedule_exactness() {
    require(losses::ppw_beta(99, 100, 200) == 0.0, "beta(99) != 0");
    require(losses::ppw_beta(100, 100, 200) == 0.0, "beta(100) != 0");
    require(losses::ppw_beta(150, 100, 200) == 0.25, "beta(150) != 0.25");
    require(losses::ppw_beta(200, 100, 200) == 1.0, "beta(200) != 1");
    require(losses::ppw_beta(201, 100, 200) == 1.0, "beta(201) != 1");
    double prev = -1.0;
    for (int e = 0; e <= 300; ++e) {
        const double b = losses::ppw_beta(e, 100, 200);
        require(b >= prev, "beta not non-decreasing at epoch " + std::to_string(e));
        prev = b;
    }
}

// ---------------------------------------------------------------- criterion 3

void weight_schedule_limits() {
    Rng rng(31337);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::int64_t> n(3);
        for (auto& v : n) v = rng.uniform_int(1, 10'000'000);

        const auto w0 = losses::ppw_weights(n, 0.0);
        for (double v : w0.omega)
            require(std::abs(v - 1.0) <= 1e-12, "ppw(0) differs from unit weights");

        const auto w1 = losses::ppw_weights(n, 1.0);
        const auto rw = losses::rw_weights(n);
        for (int i = 0; i < 3; ++i)
            require(std::abs(w1.omega[i] - rw.omega[i]) <= 1e-12, "ppw(1) differs from rw");

        // strict count ordering so the argmax is unambiguous
        if (n[0] == n[1] || n[1] == n[2] || n[0] == n[2]) continue;
        for (double beta : {0.1, 0.35, 0.72, 1.0}) {
            const auto w = losses::ppw_weights(n, beta);
            const auto amax = std::max_element(w.omega.begin(), w.omega.end()) - w.omega.begin();
            const auto amin = std::min_element(n.begin(), n.end()) - n.begin();
            require(amax == amin, "argmax(omega) != argmin(n) for beta > 0");
        }
    }
}

// ---------------------------------------------------------------- criterion 4

void gradient_checks() {
    Rng rng(4242);
    auto random_logits = [&](const nn::Shape& s) {
        std::vector<double> v(static_cast<std::size_t>(s.numel()));
        for (double& x : v) x = rng.gaussian() * 2.0;
        return nn::Tensor::from_data(s, std::move(v), true);
    };
    nn::LabelBatch labels;
    labels.n = 1;
    labels.h = 4;
    labels.w = 4;
    for (int i = 0; i < 16; ++i)
        labels.labels.push_back(static_cast<std::uint8_t>(rng.uniform_int(0, 2)));

    const losses::ClassWeights weights{{0.4, 1.7, 0.9}, losses::WeightMode::PPW, 0.5};
    const double h = 1e-5;

    auto fd_check = [&](nn::Tensor& leaf, const std::function<double()>& value,
                        std::span<const double> analytic, double tol, const char* what) {
        double worst = 0.0;
        for (std::size_t i = 0; i < leaf.raw_value().size(); ++i) {
            const double keep = leaf.raw_value()[i];
            leaf.raw_value()[i] = keep + h;
            const double fp = value();
            leaf.raw_value()[i] = keep - h;
            const double fm = value();
            leaf.raw_value()[i] = keep;
            const double fd = (fp - fm) / (2 * h);
            worst = std::max(worst, std::abs(fd - analytic[i]) /
                                        std::max({std::abs(fd), std::abs(analytic[i]), 1e-6}));
        }
        require(worst < tol, std::string(what) + " gradient relative error " +
                                 std::to_string(worst) + " exceeds tolerance");
    };

    { // weighted CE
        nn::Tensor logits = random_logits({1, 3, 4, 4});
        nn::Tensor loss = losses::ce_loss(logits, labels, weights);
        loss.backward();
        const std::vector<double> analytic(logits.grad().begin(), logits.grad().end());
        fd_check(
            logits, [&]() { return losses::ce_loss(logits, labels, weights).item(); }, analytic,
            1e-4, "weighted CE");
    }
    { // soft Dice through the softmax
        nn::Tensor logits = random_logits({1, 3, 4, 4});
        auto value = [&]() {
            return losses::dice_loss(nn::softmax_channels(logits), labels).item();
        };
        nn::Tensor loss = losses::dice_loss(nn::softmax_channels(logits), labels);
        loss.backward();
        const std::vector<double> analytic(logits.grad().begin(), logits.grad().end());
        fd_check(logits, value, analytic, 1e-4, "soft Dice");
    }
    { // VQCL with gradient-carrying current-iteration entries
        const int d = 8;
        vqcl::ClassCenters centers = vqcl::init_centers(3, d, 99);
        Raster low(2, 3, 0);
        low(0, 1) = 1;
        low(0, 2) = 1;
        low(1, 0) = 2;
        low(1, 1) = 1;
        const nn::LabelBatch low_labels = nn::LabelBatch::from_masks({&low});

        std::vector<double> raw_values(static_cast<std::size_t>(d) * 6);
        for (double& v : raw_values) v = rng.gaussian();

        nn::Tensor leaf;
        auto build = [&]() {
            leaf = nn::Tensor::from_data({1, d, 2, 3}, raw_values, true);
            nn::Tensor f = nn::l2_normalize_channels(leaf);
            vqcl::FeatureQueue queue(3, 16);
            vqcl::enqueue(queue, f.value(), f.shape(), low_labels, 6, 55, 0);
            return vqcl::vqcl_loss_graph(f, centers, queue, 0.4, 0);
        };
        nn::Tensor loss = build();
        loss.backward();
        const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());

        double worst = 0.0;
        for (std::size_t i = 0; i < raw_values.size(); ++i) {
            const double keep = raw_values[i];
            raw_values[i] = keep + h;
            const double fp = build().item();
            raw_values[i] = keep - h;
            const double fm = build().item();
            raw_values[i] = keep;
            const double fd = (fp - fm) / (2 * h);
            worst = std::max(worst, std::abs(fd - analytic[i]) /
                                        std::max({std::abs(fd), std::abs(analytic[i]), 1e-6}));
        }
        require(worst < 1e-4, "VQCL gradient relative error " + std::to_string(worst));
    }
    { // gradient of the total equals the sum of component gradients
        nn::Tensor logits = random_logits({1, 3, 4, 4});
        nn::Tensor l_ce = losses::ce_loss(logits, labels, weights);
        l_ce.backward();
        std::vector<double> g_ce(logits.grad().begin(), logits.grad().end());
        logits.zero_grad();
        nn::Tensor l_dice = losses::dice_loss(nn::softmax_channels(logits), labels);
        l_dice.backward();
        std::vector<double> g_dice(logits.grad().begin(), logits.grad().end());
        logits.zero_grad();

        nn::Tensor total = losses::total_loss(
            losses::ce_loss(logits, labels, weights),
            losses::dice_loss(nn::softmax_channels(logits), labels), nn::Tensor::scalar(0.0));
        total.backward();
        for (std::size_t i = 0; i < g_ce.size(); ++i)
            require(std::abs(logits.grad()[i] - (g_ce[i] + g_dice[i])) <= 1e-6,
                    "total gradient differs from the component sum");
    }
}

// ---------------------------------------------------------------- criterion 5

void vqcl_closed_form() {
    { // one positive and one negative at equal similarity -> ln 2
        vqcl::ClassCenters centers(2, 2);
        centers.restore({1.0, 0.0, 0.0, 1.0}, 0);
        vqcl::FeatureQueue q(2, 8);
        vqcl::QueueEntry pos;
        pos.feature = {std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2};
        q.push(0, pos);
        q.push(1, pos);
        const auto per_class = vqcl::vqcl_loss_per_class(centers, q, 0.4);
        require_close(per_class[0], std::log(2.0), 1e-9, "equal-similarity per-class loss");
    }
    { // similarities +1 and -1 at tau = 0.4 -> ln(1 + e^-5)
        vqcl::ClassCenters centers(2, 2);
        centers.restore({1.0, 0.0, 1.0, 0.0}, 0);
        vqcl::FeatureQueue q(2, 8);
        vqcl::QueueEntry pos;
        pos.feature = {1.0, 0.0};
        vqcl::QueueEntry neg;
        neg.feature = {-1.0, 0.0};
        q.push(0, pos);
        q.push(1, neg);
        const auto per_class = vqcl::vqcl_loss_per_class(centers, q, 0.4);
        require_close(per_class[0], std::log1p(std::exp(-5.0)), 1e-9,
                      "opposed-similarity per-class loss");
    }
}

// ---------------------------------------------------------------- criterion 6

void center_update_law() {
    const int d = 6;
    Rng rng(606);
    vqcl::ClassCenters centers = vqcl::init_centers(3, d, 123);
    std::vector<double> raw1(centers.raw(1).begin(), centers.raw(1).end());
    const std::vector<double> raw2(centers.raw(2).begin(), centers.raw(2).end());

    const double alpha = 0.4;
    for (int step = 0; step < 5; ++step) {
        // hand-built batch: classes 0 and 1 present, class 2 absent
        Raster low(2, 2, 0);
        low(0, 1) = 1;
        low(1, 1) = 1;
        const nn::LabelBatch labels = nn::LabelBatch::from_masks({&low});
        std::vector<double> f(static_cast<std::size_t>(d) * 4);
        for (double& v : f) v = rng.gaussian();
        nn::Tensor fm = nn::l2_normalize_channels(nn::Tensor::from_data({1, d, 2, 2}, f));

        // expected batch mean of class 1 (pixels (0,1) and (1,1))
        std::vector<double> mean1(d, 0.0);
        for (int c = 0; c < d; ++c)
            mean1[c] = (fm.value()[(c * 2 + 0) * 2 + 1] + fm.value()[(c * 2 + 1) * 2 + 1]) / 2.0;

        vqcl::update_centers(centers, fm.value(), fm.shape(), labels, alpha);
        for (int c = 0; c < d; ++c) {
            const double want = alpha * raw1[c] + (1 - alpha) * mean1[c];
            require(std::abs(centers.raw(1)[c] - want) <= 1e-12,
                    "Eq. 5 accumulator mismatch at step " + std::to_string(step));
            raw1[c] = want;
        }
        for (int c = 0; c < d; ++c)
            require(centers.raw(2)[c] == raw2[c], "absent class center changed");
    }
    require(centers.iteration() == 5, "iteration counter mismatch");
}

// ---------------------------------------------------------------- criterion 7

void queue_fifo_model_check() {
    Rng rng(707);
    for (int trial = 0; trial < 1000; ++trial) {
        const int cap = trial % 3 == 0 ? 128 : static_cast<int>(rng.uniform_int(1, 32));
        vqcl::FeatureQueue q(3, cap);
        std::vector<std::vector<double>> ref[3];
        const int ops = static_cast<int>(rng.uniform_int(1, trial % 3 == 0 ? 300 : 80));
        for (int i = 0; i < ops; ++i) {
            const int cls = static_cast<int>(rng.uniform_int(0, 2));
            std::vector<double> v{rng.gaussian(), rng.gaussian(), rng.gaussian()};
            vqcl::QueueEntry e;
            e.feature = v;
            e.iteration = i;
            q.push(cls, std::move(e));
            ref[cls].push_back(std::move(v));
        }
        for (int cls = 0; cls < 3; ++cls) {
            const std::size_t keep = std::min<std::size_t>(ref[cls].size(), cap);
            const std::size_t start = ref[cls].size() - keep;
            require(q.size(cls) == keep, "FIFO length mismatch");
            for (std::size_t k = 0; k < keep; ++k)
                require(q.entries(cls)[k].feature == ref[cls][start + k],
                        "FIFO contents/order mismatch");
        }
    }
}

// ---------------------------------------------------------------- criterion 8

void datagen_oracle() {
    const fs::path dir = work_dir() / "datagen_oracle";
    const auto manifest = datagen::build_dataset(200, 808, dir.string(), [] {
        datagen::BuildOptions o;
        o.canvas_h = 128;
        o.canvas_w = 128;
        o.augment_train = false; // compare pristine masks against the oracle
        return o;
    }());

    require(manifest.split_records("train").size() == 140, "train split size");
    require(manifest.split_records("test").size() == 60, "test split size");

    for (int i = 0; i < 200; ++i) {
        const std::uint64_t seed = derive_seed(808, "scene", static_cast<std::uint64_t>(i));
        const auto graph = datagen::generate_graph(seed, 128, 128);
        const Raster vessel = datagen::rasterize(graph);
        const Raster got = datagen::label_connectivity(vessel, graph.inlet_band);
        const Raster want =
            oracles::bfs_connectivity_labels(vessel, graph.inlet_band.x_begin, graph.inlet_band.x_end);
        require(got == want, "connectivity labels differ from the BFS oracle");

        // the stored mask matches the recomputation
        const Raster stored = pngio::read_mask(manifest.records[i].mask_path);
        require(stored == got, "stored mask differs from recomputed labels");
    }
}

// ---------------------------------------------------------------- criterion 9

void training_smoke(std::string& detail) {
    const fs::path dir = work_dir() / "smoke";
    datagen::BuildOptions opts;
    opts.canvas_h = 128;
    opts.canvas_w = 128;
    opts.split_ratio = 64.0 / 92.0;
    const auto manifest = datagen::build_dataset(92, 909, (dir / "data").string(), opts);
    require(manifest.split_records("train").size() == 64, "expected 64 training samples");
    require(manifest.split_records("test").size() == 28, "expected 28 test samples");

    trainer::TrainConfig cfg = trainer::TrainConfig::desk_profile();
    cfg.seed = 909;
    cfg.val_cadence = 0;
    const auto t0 = std::chrono::steady_clock::now();
    const trainer::TrainResult result = trainer::train(cfg, manifest, (dir / "run").string());
    auto ckpt = checkpoint::load_checkpoint(result.checkpoint_path);
    const auto report = trainer::evaluate(ckpt, manifest, (dir / "pred").string());
    const double minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;

    const double first = result.log.records.front().total;
    double best = first;
    for (const auto& r : result.log.records) best = std::min(best, r.total);

    double macro_dice = 0.0;
    for (const auto& s : report.per_sample) macro_dice += s.macro.dice;
    macro_dice /= static_cast<double>(report.per_sample.size());

    std::ostringstream os;
    os.precision(4);
    os << "loss " << first << " -> " << best << ", held-out macro Dice " << macro_dice << ", "
       << minutes << " min";
    detail = os.str();

    require(best <= 0.5 * first, "total loss did not decrease by 50% (" + detail + ")");
    require(macro_dice >= 0.60, "held-out macro Dice below 0.60 (" + detail + ")");
    require(minutes <= 20.0, "run exceeded 20 minutes (" + detail + ")");
}

// --------------------------------------------------------------- criterion 10

void imbalance_efficacy(std::string& detail) {
    const fs::path dir = work_dir() / "imbalance";

    // skewed dataset: minority (non-connected) share must be at most 8%
    datagen::BuildOptions opts;
    opts.canvas_h = 96;
    opts.canvas_w = 96;
    opts.split_ratio = 0.75;
    const auto manifest = datagen::build_dataset(44, 1010, (dir / "data").string(), opts);
    const double total_train = static_cast<double>(manifest.train_class_pixels[0] +
                                                   manifest.train_class_pixels[1] +
                                                   manifest.train_class_pixels[2]);
    const double minority_share = manifest.train_class_pixels[2] / total_train;
    require(minority_share <= 0.08, "dataset not skewed enough");

    auto minority_dice = [&](losses::WeightMode mode, std::uint64_t seed) {
        trainer::TrainConfig cfg = trainer::TrainConfig::desk_profile();
        cfg.epochs = 30;
        cfg.schedule_mode = mode;
        cfg.e_min = 8;
        cfg.e_max = 20;
        cfg.seed = seed;
        cfg.val_cadence = 0;
        const std::string tag =
            losses::to_string(mode) + std::string("_seed") + std::to_string(seed);
        const auto result = trainer::train(cfg, manifest, (dir / ("run_" + tag)).string());
        auto ckpt = checkpoint::load_checkpoint(result.checkpoint_path);
        const auto report = trainer::evaluate(ckpt, manifest, (dir / ("pred_" + tag)).string());
        double d = 0.0;
        for (const auto& s : report.per_sample) d += s.per_class[2].dice;
        return d / static_cast<double>(report.per_sample.size());
    };

    std::vector<double> ppw, none;
    std::ostringstream table;
    table << "\n  seed  ppw_minority_dice  none_minority_dice\n";
    for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
        ppw.push_back(minority_dice(losses::WeightMode::PPW, seed));
        none.push_back(minority_dice(losses::WeightMode::None, seed));
        table << "  " << seed << "    " << ppw.back() << "          " << none.back() << "\n";
    }
    std::sort(ppw.begin(), ppw.end());
    std::sort(none.begin(), none.end());
    const double med_ppw = ppw[1], med_none = none[1];
    {
        std::ostringstream os;
        os.precision(4);
        os << "minority share " << minority_share << ", median minority Dice: ppw " << med_ppw
           << " vs none " << med_none << table.str();
        detail = os.str();
    }
    std::ofstream csv(dir / "comparison.csv");
    csv << "seed,ppw_minority_dice,none_minority_dice\n";
    for (int i = 0; i < 3; ++i) csv << i << ',' << ppw[i] << ',' << none[i] << '\n';

    require(med_ppw >= med_none - 0.02, "PPW median minority Dice fell more than 0.02 below "
                                        "the unweighted median (" + detail + ")");
}

// --------------------------------------------------------------- criterion 11

void determinism(std::string& detail) {
    const fs::path dir = work_dir() / "determinism";
    datagen::BuildOptions opts;
    opts.canvas_h = 96;
    opts.canvas_w = 96;
    datagen::build_dataset(16, 1111, (dir / "a").string(), opts);
    datagen::build_dataset(16, 1111, (dir / "b").string(), opts);

    auto bytes = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    };
    require(bytes(dir / "a" / "manifest.jsonl") == bytes(dir / "b" / "manifest.jsonl"),
            "manifests differ across identical runs");
    for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), dir / "a");
        require(bytes(entry.path()) == bytes(dir / "b" / rel),
                "file differs across identical runs: " + rel.string());
    }

    const auto manifest = datagen::read_manifest((dir / "a" / "manifest.jsonl").string());
    trainer::TrainConfig cfg = trainer::TrainConfig::desk_profile();
    cfg.model.encoder_channels = 32;
    cfg.model.embed_dim = 16;
    cfg.epochs = 1;
    cfg.seed = 2222;
    cfg.val_cadence = 0;
    const auto r1 = trainer::train(cfg, manifest, (dir / "run1").string());
    const auto r2 = trainer::train(cfg, manifest, (dir / "run2").string());
    const double l1 = r1.log.records[0].total, l2 = r2.log.records[0].total;
    std::ostringstream os;
    os.precision(12);
    os << "first-epoch losses " << l1 << " / " << l2;
    detail = os.str();
    require(std::abs(l1 - l2) < 1e-6, "first-epoch loss not reproducible (" + detail + ")");
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<void(std::string&)> run;
    };
    auto wrap = [](void (*f)()) {
        return [f](std::string&) { f(); };
    };
    const std::vector<Criterion> criteria = {
        {1, "metric-oracle-equivalence", wrap(metric_oracle_equivalence)},
        {2, "ppw-schedule-exactness", wrap(ppw_schedule_exactness)},
        {3, "weight-schedule-limits", wrap(weight_schedule_limits)},
        {4, "gradient-checks", wrap(gradient_checks)},
        {5, "vqcl-closed-form-values", wrap(vqcl_closed_form)},
        {6, "center-update-law", wrap(center_update_law)},
        {7, "queue-fifo-model-check", wrap(queue_fifo_model_check)},
        {8, "datagen-oracle", wrap(datagen_oracle)},
        {9, "training-smoke-test", training_smoke},
        {10, "imbalance-efficacy", imbalance_efficacy},
        {11, "determinism", determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        std::string why;
        try {
            c.run(detail);
        } catch (const std::exception& e) {
            ok = false;
            why = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] C%-2d %-28s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", c.id, c.name, secs,
                    detail.empty() ? "" : " -- ", detail.c_str());
        if (!ok) {
            std::printf("       reason: %s\n", why.c_str());
            ++failures;
        }
    }
    if (failures == 0)
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures;
}
