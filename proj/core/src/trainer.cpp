#include "vcnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vcnet/png_io.hpp"
#include "vcnet/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace vcnet::trainer {

TrainConfig TrainConfig::desk_profile() {
    TrainConfig c;
    c.lr = 0.02; // converges within the 50-epoch desk budget
    c.batch_size = 4;
    c.epochs = 50;
    c.model.stride = 8;
    c.model.encoder_channels = 64;
    c.model.embed_dim = 32;
    return c;
}

TrainConfig TrainConfig::paper_profile() {
    TrainConfig c;
    c.batch_size = 8;
    c.epochs = 1000;
    c.model = model::ModelConfig::paper_scale();
    return c;
}

std::string serialize_train_config(const TrainConfig& c) {
    json j;
    j["lr"] = c.lr;
    j["momentum"] = c.momentum;
    j["weight_decay"] = c.weight_decay;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["poly_decay"] = c.poly_decay;
    j["vqcl"] = {{"alpha", c.vqcl.alpha},
                 {"tau", c.vqcl.tau},
                 {"queue_capacity", c.vqcl.queue_capacity},
                 {"samples_per_class", c.vqcl.samples_per_class}};
    j["schedule"] = {{"mode", losses::to_string(c.schedule_mode)},
                     {"e_min", c.e_min},
                     {"e_max", c.e_max},
                     {"drw_switch", c.drw_switch}};
    j["model"] = {{"num_classes", c.model.num_classes},
                  {"stride", c.model.stride},
                  {"encoder_channels", c.model.encoder_channels},
                  {"embed_dim", c.model.embed_dim},
                  {"proj_hidden", c.model.proj_hidden},
                  {"dropout_p", c.model.dropout_p},
                  {"bn_momentum", c.model.bn_momentum},
                  {"init_seed", c.model.init_seed}};
    j["seed"] = c.seed;
    j["val_cadence"] = c.val_cadence;
    j["checkpoint_cadence"] = c.checkpoint_cadence;
    return j.dump();
}

TrainConfig parse_train_config(const std::string& json_text) {
    TrainConfig c;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error("trainer.parse_train_config", e.what());
    }
    c.lr = j.value("lr", c.lr);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.poly_decay = j.value("poly_decay", c.poly_decay);
    if (j.contains("vqcl")) {
        const auto& v = j["vqcl"];
        c.vqcl.alpha = v.value("alpha", c.vqcl.alpha);
        c.vqcl.tau = v.value("tau", c.vqcl.tau);
        c.vqcl.queue_capacity = v.value("queue_capacity", c.vqcl.queue_capacity);
        c.vqcl.samples_per_class = v.value("samples_per_class", c.vqcl.samples_per_class);
    }
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        c.schedule_mode = losses::weight_mode_from_string(s.value("mode", "none"));
        c.e_min = s.value("e_min", c.e_min);
        c.e_max = s.value("e_max", c.e_max);
        c.drw_switch = s.value("drw_switch", c.drw_switch);
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        c.model.num_classes = m.value("num_classes", c.model.num_classes);
        c.model.stride = m.value("stride", c.model.stride);
        c.model.encoder_channels = m.value("encoder_channels", c.model.encoder_channels);
        c.model.embed_dim = m.value("embed_dim", c.model.embed_dim);
        c.model.proj_hidden = m.value("proj_hidden", c.model.proj_hidden);
        c.model.dropout_p = m.value("dropout_p", c.model.dropout_p);
        c.model.bn_momentum = m.value("bn_momentum", c.model.bn_momentum);
        c.model.init_seed = m.value("init_seed", c.model.init_seed);
    }
    c.seed = j.value("seed", c.seed);
    c.val_cadence = j.value("val_cadence", c.val_cadence);
    c.checkpoint_cadence = j.value("checkpoint_cadence", c.checkpoint_cadence);
    return c;
}

void TrainLog::write_csv(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("trainer.TrainLog", "cannot open " + path);
    f << "epoch,ce,dice,vqcl,total,beta,omega0,omega1,omega2,val_dice\n";
    f.precision(12);
    for (const auto& r : records) {
        f << r.epoch << ',' << r.ce << ',' << r.dice << ',' << r.vqcl << ',' << r.total << ','
          << r.beta << ',' << r.omega[0] << ',' << r.omega[1] << ',' << r.omega[2] << ',';
        if (r.val_dice) f << *r.val_dice;
        f << '\n';
    }
}

TrainLog TrainLog::read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("trainer.TrainLog", "cannot open " + path);
    TrainLog log;
    std::string line;
    if (!std::getline(f, line)) throw Error("trainer.TrainLog", "empty log " + path);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (fields.size() != 10) throw Error("trainer.TrainLog", "malformed row: " + line);
        EpochRecord r;
        r.epoch = std::stoi(fields[0]);
        r.ce = std::stod(fields[1]);
        r.dice = std::stod(fields[2]);
        r.vqcl = std::stod(fields[3]);
        r.total = std::stod(fields[4]);
        r.beta = std::stod(fields[5]);
        r.omega = {std::stod(fields[6]), std::stod(fields[7]), std::stod(fields[8])};
        if (!fields[9].empty()) r.val_dice = std::stod(fields[9]);
        log.records.push_back(r);
    }
    return log;
}

nn::Tensor images_to_tensor(const std::vector<const Raster*>& images) {
    if (images.empty()) throw Error("trainer.images_to_tensor", "empty batch");
    const int h = images[0]->height(), w = images[0]->width();
    const int n = static_cast<int>(images.size());
    nn::Shape s{n, 3, h, w};
    std::vector<double> data(static_cast<std::size_t>(s.numel()));
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    for (int b = 0; b < n; ++b) {
        if (images[b]->height() != h || images[b]->width() != w)
            throw Error("trainer.images_to_tensor", "images in a batch must share dimensions");
        // per-image standardization, then grayscale replicated to 3 channels;
        // keeps stored-file intensity conventions out of the model input
        double mean = 0.0;
        for (std::size_t i = 0; i < hw; ++i) mean += images[b]->at(i);
        mean /= static_cast<double>(hw);
        double var = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
            const double d = images[b]->at(i) - mean;
            var += d * d;
        }
        const double inv_sd = 1.0 / std::max(std::sqrt(var / static_cast<double>(hw)), 1e-6);
        for (std::size_t i = 0; i < hw; ++i) {
            const double v = (images[b]->at(i) - mean) * inv_sd;
            for (int c = 0; c < 3; ++c) data[(static_cast<std::size_t>(b) * 3 + c) * hw + i] = v;
        }
    }
    return nn::Tensor::from_data(s, std::move(data));
}

namespace {

struct LoadedSample {
    Raster image;
    Raster mask;
    std::string id;
};

std::vector<LoadedSample> load_split(const datagen::DatasetManifest& manifest,
                                     const std::string& split) {
    std::vector<LoadedSample> out;
    for (const auto* rec : manifest.split_records(split)) {
        LoadedSample s;
        s.image = pngio::read_gray(rec->image_path);
        s.mask = pngio::read_mask(rec->mask_path);
        s.id = rec->id;
        out.push_back(std::move(s));
    }
    return out;
}

Raster argmax_mask(const nn::Tensor& logits) {
    const nn::Shape s = logits.shape();
    Raster mask(s.h, s.w);
    const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
    for (std::size_t i = 0; i < hw; ++i) {
        int best = 0;
        double bv = logits.value()[i];
        for (int c = 1; c < s.c; ++c) {
            const double v = logits.value()[static_cast<std::size_t>(c) * hw + i];
            if (v > bv) { // strict: ties keep the lowest class index
                bv = v;
                best = c;
            }
        }
        mask.at(i) = static_cast<std::uint8_t>(best);
    }
    return mask;
}

double macro_dice_on(model::VcNet& net, const std::vector<LoadedSample>& samples) {
    double acc = 0.0;
    for (const auto& s : samples) {
        const Raster pred = predict(net, s.image);
        double macro = 0.0;
        for (int c = 0; c < kNumClasses; ++c)
            macro += metrics::dice(metrics::confusion(pred, s.mask, c));
        acc += macro / kNumClasses;
    }
    return acc / static_cast<double>(samples.size());
}

} // namespace

TrainResult train(const TrainConfig& config, const datagen::DatasetManifest& manifest,
                  const std::string& out_dir) {
    if (config.batch_size < 1 || config.epochs < 1)
        throw Error("trainer.train", "batch size and epochs must be positive");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw Error("trainer.train", "cannot create output directory " + out_dir);

    const auto train_samples = load_split(manifest, "train");
    if (train_samples.empty()) throw Error("trainer.train", "manifest has no training split");
    const auto test_samples = load_split(manifest, "test");

    // every random stream is derived from the one config seed
    TrainConfig cfg = config;
    cfg.model.init_seed = derive_seed(cfg.seed, "model");
    const std::string config_json = serialize_train_config(cfg);

    model::VcNet net(cfg.model);
    nn::ParamList params;
    nn::BufferList buffers;
    net.collect_state(params, buffers);
    nn::SgdOptimizer opt(params, cfg.lr, cfg.momentum, cfg.weight_decay);

    vqcl::ClassCenters centers =
        vqcl::init_centers(kNumClasses, cfg.model.embed_dim, derive_seed(cfg.seed, "centers"));
    vqcl::FeatureQueue queue(kNumClasses, cfg.vqcl.queue_capacity);

    losses::ImbalanceSchedule schedule;
    schedule.mode = cfg.schedule_mode;
    schedule.e_min = cfg.e_min;
    schedule.e_max = cfg.e_max;
    schedule.drw_switch = cfg.drw_switch;
    schedule.class_pixels.assign(manifest.train_class_pixels.begin(),
                                 manifest.train_class_pixels.end());

    TrainLog log;
    long iter = 0;
    const int n_train = static_cast<int>(train_samples.size());

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.poly_decay)
            opt.set_lr(cfg.lr * std::pow(1.0 - static_cast<double>(epoch - 1) / cfg.epochs, 0.9));

        const losses::ClassWeights weights = losses::weights_for_epoch(schedule, epoch);
        const double beta = losses::beta_for_epoch(schedule, epoch);

        // seeded permutation: every sample exactly once per epoch
        std::vector<int> order(n_train);
        for (int i = 0; i < n_train; ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(cfg.seed, "epoch", static_cast<std::uint64_t>(epoch)));
        for (int i = n_train - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.uniform_int(0, i));
            std::swap(order[i], order[j]);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.beta = beta;
        for (int c = 0; c < kNumClasses; ++c) rec.omega[c] = weights.omega[c];
        int batches = 0;

        for (int start = 0; start < n_train; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n_train - start);
            std::vector<const Raster*> imgs(bsz);
            std::vector<const Raster*> masks(bsz);
            std::vector<Raster> low_masks(bsz);
            for (int b = 0; b < bsz; ++b) {
                const auto& s = train_samples[order[start + b]];
                imgs[b] = &s.image;
                masks[b] = &s.mask;
                low_masks[b] = vqcl::downsample_labels(s.mask, cfg.model.stride);
            }
            const nn::LabelBatch labels = nn::LabelBatch::from_masks(masks);
            std::vector<const Raster*> lowp(bsz);
            for (int b = 0; b < bsz; ++b) lowp[b] = &low_masks[b];
            const nn::LabelBatch low_labels = nn::LabelBatch::from_masks(lowp);

            try {
                const nn::Tensor x = images_to_tensor(imgs);
                auto fwd = net.forward(x, nn::Mode::Train);
                const nn::Tensor x3 = net.project(fwd.features, nn::Mode::Train);
                const nn::Tensor f_pre = net.mlp_embed(
                    x3, nn::Mode::Train, derive_seed(cfg.seed, "dropout", static_cast<std::uint64_t>(iter)));
                const nn::Tensor f = nn::l2_normalize_channels(f_pre);

                vqcl::update_centers(centers, f.value(), f.shape(), low_labels, cfg.vqcl.alpha);
                vqcl::enqueue(queue, f.value(), f.shape(), low_labels, cfg.vqcl.samples_per_class,
                              derive_seed(cfg.seed, "sample", static_cast<std::uint64_t>(iter)), iter);

                const nn::Tensor ce = losses::ce_loss(fwd.logits, labels, weights);
                const nn::Tensor dl = losses::dice_loss(nn::softmax_channels(fwd.logits), labels);
                const nn::Tensor vq = vqcl::vqcl_loss_graph(f, centers, queue, cfg.vqcl.tau, iter);
                const nn::Tensor total = losses::total_loss(ce, dl, vq);

                opt.zero_grad();
                total.backward();
                opt.step();

                rec.ce += ce.item();
                rec.dice += dl.item();
                rec.vqcl += vq.item();
                rec.total += total.item();
            } catch (const Error& e) {
                throw Error("trainer.train", std::string(e.what()) + " [epoch " +
                                                 std::to_string(epoch) + ", iteration " +
                                                 std::to_string(iter) + "]");
            }
            ++batches;
            ++iter;
        }

        rec.ce /= batches;
        rec.dice /= batches;
        rec.vqcl /= batches;
        rec.total /= batches;

        if (!test_samples.empty() && cfg.val_cadence > 0 &&
            (epoch % cfg.val_cadence == 0 || epoch == cfg.epochs))
            rec.val_dice = macro_dice_on(net, test_samples);

        log.records.push_back(rec);

        if (cfg.checkpoint_cadence > 0 && epoch % cfg.checkpoint_cadence == 0 &&
            epoch != cfg.epochs)
            checkpoint::save_checkpoint(
                (fs::path(out_dir) / ("checkpoint_epoch" + std::to_string(epoch) + ".vcnet"))
                    .string(),
                net, centers, epoch, config_json);
    }

    const std::string ckpt_path = (fs::path(out_dir) / "checkpoint.vcnet").string();
    checkpoint::save_checkpoint(ckpt_path, net, centers, cfg.epochs, config_json);
    log.write_csv((fs::path(out_dir) / "train_log.csv").string());
    return {ckpt_path, log};
}

Raster predict(model::VcNet& net, const Raster& image) {
    const nn::Tensor x = images_to_tensor({&image});
    auto fwd = net.forward(x, nn::Mode::Eval);
    return argmax_mask(fwd.logits);
}

Raster predict(checkpoint::LoadedCheckpoint& ckpt, const Raster& image) {
    return predict(*ckpt.net, image);
}

metrics::MetricsReport evaluate(checkpoint::LoadedCheckpoint& ckpt,
                                const datagen::DatasetManifest& manifest,
                                const std::string& pred_dir,
                                const metrics::EvaluateOptions& options) {
    const auto records = manifest.split_records(options.split);
    if (records.empty())
        throw Error("trainer.evaluate", "manifest '" + options.split + "' split is empty");
    std::error_code ec;
    fs::create_directories(pred_dir, ec);
    if (!fs::is_directory(pred_dir))
        throw Error("trainer.evaluate", "cannot create prediction directory " + pred_dir);

    for (const auto* rec : records) {
        const Raster image = pngio::read_gray(rec->image_path);
        const Raster pred = predict(ckpt, image);
        pngio::write_mask((fs::path(pred_dir) / (rec->id + ".png")).string(), pred);
    }
    return metrics::evaluate_dataset(pred_dir, manifest, options);
}

} // namespace vcnet::trainer
