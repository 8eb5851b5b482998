#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vcnet/datagen.hpp"
#include "vcnet/metrics.hpp"
#include "vcnet/png_io.hpp"
#include "vcnet/svg.hpp"
#include "vcnet/trainer.hpp"

namespace fs = std::filesystem;

namespace vcnet::cli {

namespace {

std::string cache_dir() {
    const char* env = std::getenv("VCNET_CACHE_DIR");
    return env && *env ? std::string(env) : std::string(".");
}

std::pair<int, int> parse_size(const std::string& size) {
    const auto xpos = size.find('x');
    if (xpos == std::string::npos || xpos == 0 || xpos + 1 >= size.size())
        throw CLI::ValidationError("--size", "expected <H>x<W>, e.g. 256x256");
    try {
        return {std::stoi(size.substr(0, xpos)), std::stoi(size.substr(xpos + 1))};
    } catch (const std::exception&) {
        throw CLI::ValidationError("--size", "expected integer dimensions, e.g. 256x256");
    }
}

// All option targets for every subcommand, bound before parsing.
struct Options {
    // datagen
    int dg_n = 100;
    std::uint64_t dg_seed = 42;
    std::string dg_size = "256x256";
    double dg_split = 0.7;
    std::string dg_out;
    bool dg_no_augment = false;

    // train
    std::string tr_manifest;
    std::string tr_out = cache_dir();
    std::string tr_config;
    std::string tr_profile = "desk";
    std::uint64_t tr_seed = 42;
    int tr_epochs = 0;
    int tr_batch = 0;
    double tr_lr = 0.0;
    double tr_momentum = -1.0;
    double tr_weight_decay = -1.0;
    std::string tr_schedule;
    int tr_e_min = -1;
    int tr_e_max = -1;
    int tr_drw_switch = -2;
    int tr_stride = 0;
    int tr_enc_channels = 0;
    int tr_embed_dim = 0;
    double tr_alpha = -1.0;
    double tr_tau = -1.0;
    int tr_queue_capacity = 0;
    int tr_samples_per_class = 0;
    int tr_val_cadence = -1;
    int tr_checkpoint_cadence = -1;
    bool tr_poly_decay = false;

    // predict
    std::string pr_checkpoint;
    std::string pr_image;
    std::string pr_out;

    // eval
    std::string ev_checkpoint;
    std::string ev_manifest;
    std::string ev_out;
    std::string ev_pred_dir;
    std::string ev_variant = "percentile";
    std::string ev_csv;

    // stats
    std::string st_pred;
    std::string st_manifest;
    std::string st_variant = "percentile";
    std::string st_out;
    std::string st_csv;
    std::string st_split = "test";

    // curves
    std::string cv_log;
    std::string cv_out;
};

void build_app(CLI::App& app, Options& o) {
    app.require_subcommand(0, 1);

    auto* dg = app.add_subcommand("datagen", "Generate a synthetic vascular dataset");
    dg->add_option("--n", o.dg_n, "Number of samples")->required();
    dg->add_option("--seed", o.dg_seed, "Master seed")->capture_default_str();
    dg->add_option("--size", o.dg_size, "Canvas size <H>x<W>")->capture_default_str();
    dg->add_option("--split", o.dg_split, "Train fraction")->capture_default_str();
    dg->add_option("--out", o.dg_out, "Output directory")->required();
    dg->add_flag("--no-augment", o.dg_no_augment, "Skip augmentation of the training split");

    auto* tr = app.add_subcommand("train", "Train the segmentation network");
    tr->add_option("--manifest", o.tr_manifest, "Dataset manifest (JSON lines)")->required();
    tr->add_option("--out", o.tr_out, "Output directory for checkpoint and log")
        ->capture_default_str();
    tr->add_option("--config", o.tr_config, "Training config JSON file (flags override)");
    tr->add_option("--profile", o.tr_profile, "Config preset: desk|paper")->capture_default_str();
    tr->add_option("--seed", o.tr_seed, "Master seed")->capture_default_str();
    tr->add_option("--epochs", o.tr_epochs, "Training epochs");
    tr->add_option("--batch", o.tr_batch, "Batch size");
    tr->add_option("--lr", o.tr_lr, "Initial learning rate");
    tr->add_option("--momentum", o.tr_momentum, "SGD momentum");
    tr->add_option("--weight-decay", o.tr_weight_decay, "L2 weight decay");
    tr->add_option("--schedule", o.tr_schedule, "Imbalance mode: none|rw|drw|ppw");
    tr->add_option("--e-min", o.tr_e_min, "Schedule ramp start epoch");
    tr->add_option("--e-max", o.tr_e_max, "Schedule ramp end epoch");
    tr->add_option("--drw-switch", o.tr_drw_switch, "DRW switch epoch (-1 = e-min)");
    tr->add_option("--stride", o.tr_stride, "Encoder output stride (8 or 16)");
    tr->add_option("--encoder-channels", o.tr_enc_channels, "Encoder channel width C_enc");
    tr->add_option("--embed-dim", o.tr_embed_dim, "Embedding dimension D");
    tr->add_option("--alpha", o.tr_alpha, "Class-center momentum");
    tr->add_option("--tau", o.tr_tau, "Contrastive temperature");
    tr->add_option("--queue-capacity", o.tr_queue_capacity, "Per-class feature queue capacity");
    tr->add_option("--samples-per-class", o.tr_samples_per_class, "Pixels enqueued per class per batch");
    tr->add_option("--val-cadence", o.tr_val_cadence, "Validate every k epochs (0 = never)");
    tr->add_option("--checkpoint-cadence", o.tr_checkpoint_cadence,
                   "Extra checkpoint every k epochs (0 = end only)");
    tr->add_flag("--poly-decay", o.tr_poly_decay, "Polynomial learning-rate decay");

    auto* pr = app.add_subcommand("predict", "Predict a connectivity mask for one image");
    pr->add_option("--checkpoint", o.pr_checkpoint, "Checkpoint archive")->required();
    pr->add_option("--image", o.pr_image, "Input grayscale PNG")->required();
    pr->add_option("--out", o.pr_out, "Output mask PNG")->required();

    auto* ev = app.add_subcommand("eval", "Predict over the test split and report metrics");
    ev->add_option("--checkpoint", o.ev_checkpoint, "Checkpoint archive")->required();
    ev->add_option("--manifest", o.ev_manifest, "Dataset manifest")->required();
    ev->add_option("--out", o.ev_out, "Report JSON path (default <cache>/report.json)");
    ev->add_option("--pred-dir", o.ev_pred_dir, "Directory for predicted masks");
    ev->add_option("--hd95-variant", o.ev_variant, "percentile|literal")->capture_default_str();
    ev->add_option("--csv", o.ev_csv, "Per-(sample,class) CSV path (default: <out>.csv)");

    auto* st = app.add_subcommand("stats", "Evaluate existing prediction masks");
    st->add_option("--pred", o.st_pred, "Directory of predicted masks (<id>.png)")->required();
    st->add_option("--manifest", o.st_manifest, "Dataset manifest")->required();
    st->add_option("--hd95-variant", o.st_variant, "percentile|literal")->capture_default_str();
    st->add_option("--out", o.st_out, "Report JSON path")->required();
    st->add_option("--csv", o.st_csv, "Per-(sample,class) CSV path (default: <out>.csv)");
    st->add_option("--split", o.st_split, "Manifest split to evaluate")->capture_default_str();

    auto* cv = app.add_subcommand("curves", "Render loss curves from a training log");
    cv->add_option("--log", o.cv_log, "Training log CSV")->required();
    cv->add_option("--out", o.cv_out, "Output SVG path")->required();
}

int run_datagen(const Options& o) {
    const auto [h, w] = parse_size(o.dg_size);
    datagen::BuildOptions opts;
    opts.canvas_h = h;
    opts.canvas_w = w;
    opts.split_ratio = o.dg_split;
    opts.augment_train = !o.dg_no_augment;
    const auto manifest = datagen::build_dataset(o.dg_n, o.dg_seed, o.dg_out, opts);
    std::cout << "wrote " << manifest.records.size() << " samples to " << o.dg_out << " ("
              << manifest.split_records("train").size() << " train / "
              << manifest.split_records("test").size() << " test)\n";
    return 0;
}

int run_train(const CLI::App& tr, const Options& o) {
    trainer::TrainConfig cfg;
    if (o.tr_profile == "desk")
        cfg = trainer::TrainConfig::desk_profile();
    else if (o.tr_profile == "paper")
        cfg = trainer::TrainConfig::paper_profile();
    else
        throw Error("cli.train", "unknown profile '" + o.tr_profile + "' (want desk|paper)");

    if (!o.tr_config.empty()) {
        std::ifstream f(o.tr_config);
        if (!f) throw Error("cli.train", "cannot open config file " + o.tr_config);
        std::ostringstream ss;
        ss << f.rdbuf();
        cfg = trainer::parse_train_config(ss.str());
    }

    if (tr.count("--seed")) cfg.seed = o.tr_seed;
    if (tr.count("--epochs")) cfg.epochs = o.tr_epochs;
    if (tr.count("--batch")) cfg.batch_size = o.tr_batch;
    if (tr.count("--lr")) cfg.lr = o.tr_lr;
    if (tr.count("--momentum")) cfg.momentum = o.tr_momentum;
    if (tr.count("--weight-decay")) cfg.weight_decay = o.tr_weight_decay;
    if (tr.count("--schedule")) cfg.schedule_mode = losses::weight_mode_from_string(o.tr_schedule);
    if (tr.count("--e-min")) cfg.e_min = o.tr_e_min;
    if (tr.count("--e-max")) cfg.e_max = o.tr_e_max;
    if (tr.count("--drw-switch")) cfg.drw_switch = o.tr_drw_switch;
    if (tr.count("--stride")) cfg.model.stride = o.tr_stride;
    if (tr.count("--encoder-channels")) cfg.model.encoder_channels = o.tr_enc_channels;
    if (tr.count("--embed-dim")) cfg.model.embed_dim = o.tr_embed_dim;
    if (tr.count("--alpha")) cfg.vqcl.alpha = o.tr_alpha;
    if (tr.count("--tau")) cfg.vqcl.tau = o.tr_tau;
    if (tr.count("--queue-capacity")) cfg.vqcl.queue_capacity = o.tr_queue_capacity;
    if (tr.count("--samples-per-class")) cfg.vqcl.samples_per_class = o.tr_samples_per_class;
    if (tr.count("--val-cadence")) cfg.val_cadence = o.tr_val_cadence;
    if (tr.count("--checkpoint-cadence")) cfg.checkpoint_cadence = o.tr_checkpoint_cadence;
    if (tr.count("--poly-decay")) cfg.poly_decay = o.tr_poly_decay;

    const auto manifest = datagen::read_manifest(o.tr_manifest);
    const auto result = trainer::train(cfg, manifest, o.tr_out);
    const auto& last = result.log.records.back();
    std::cout << "trained " << last.epoch << " epochs; final total loss " << last.total
              << "; checkpoint at " << result.checkpoint_path << "\n";
    return 0;
}

int run_predict(const Options& o) {
    auto ckpt = checkpoint::load_checkpoint(o.pr_checkpoint);
    const Raster image = pngio::read_gray(o.pr_image);
    const Raster mask = trainer::predict(ckpt, image);
    pngio::write_mask(o.pr_out, mask);
    std::cout << "wrote " << o.pr_out << "\n";
    return 0;
}

std::string default_csv_path(const std::string& json_path) {
    return (fs::path(json_path).parent_path() / fs::path(json_path).stem()).string() + ".csv";
}

int run_eval(const Options& o) {
    auto ckpt = checkpoint::load_checkpoint(o.ev_checkpoint);
    const auto manifest = datagen::read_manifest(o.ev_manifest);
    const std::string out =
        o.ev_out.empty() ? (fs::path(cache_dir()) / "report.json").string() : o.ev_out;
    const std::string pred_dir =
        o.ev_pred_dir.empty() ? (fs::path(cache_dir()) / "predictions").string() : o.ev_pred_dir;
    metrics::EvaluateOptions opts;
    opts.variant = metrics::hd95_variant_from_string(o.ev_variant);
    const auto report = trainer::evaluate(ckpt, manifest, pred_dir, opts);
    metrics::write_report(report, out, o.ev_csv.empty() ? default_csv_path(out) : o.ev_csv);
    std::cout << "evaluated " << report.per_sample.size() << " samples; report at " << out << "\n";
    return 0;
}

int run_stats(const Options& o) {
    const auto manifest = datagen::read_manifest(o.st_manifest);
    metrics::EvaluateOptions opts;
    opts.variant = metrics::hd95_variant_from_string(o.st_variant);
    opts.split = o.st_split;
    const auto report = metrics::evaluate_dataset(o.st_pred, manifest, opts);
    metrics::write_report(report, o.st_out, o.st_csv.empty() ? default_csv_path(o.st_out) : o.st_csv);
    std::cout << "evaluated " << report.per_sample.size() << " samples; report at " << o.st_out
              << "\n";
    return 0;
}

int run_curves(const Options& o) {
    const auto log = trainer::TrainLog::read_csv(o.cv_log);
    svg::write_loss_curves(log, o.cv_out);
    std::cout << "wrote " << o.cv_out << "\n";
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"VC-Net: connectivity segmentation on synthetic vascular scenes"};
    Options o;
    build_app(app, o);

    try {
        // CLI11 wants reversed argv without the program name
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        std::cerr << "run 'vcnet --help' for usage\n";
        return 1;
    }

    try {
        for (auto* sub : app.get_subcommands()) {
            const std::string& name = sub->get_name();
            if (name == "datagen") return run_datagen(o);
            if (name == "train") return run_train(*sub, o);
            if (name == "predict") return run_predict(o);
            if (name == "eval") return run_eval(o);
            if (name == "stats") return run_stats(o);
            if (name == "curves") return run_curves(o);
        }
        std::cout << app.help();
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

std::string help_text(const std::string& subcommand) {
    CLI::App app{"VC-Net: connectivity segmentation on synthetic vascular scenes"};
    Options o;
    build_app(app, o);
    if (subcommand.empty()) return app.help();
    return app.get_subcommand(subcommand)->help();
}

} // namespace vcnet::cli
