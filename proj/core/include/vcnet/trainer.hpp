#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vcnet/checkpoint.hpp"
#include "vcnet/datagen.hpp"
#include "vcnet/losses.hpp"
#include "vcnet/metrics.hpp"
#include "vcnet/model.hpp"
#include "vcnet/vqcl.hpp"

namespace vcnet::trainer {

struct TrainConfig {
    // SGD; paper-scale defaults
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int batch_size = 8;
    int epochs = 1000;
    bool poly_decay = false; // optional polynomial LR decay, off by default

    vqcl::VqclConfig vqcl;

    losses::WeightMode schedule_mode = losses::WeightMode::None;
    int e_min = 100;
    int e_max = 200;
    int drw_switch = -1; // -1 -> e_min

    model::ModelConfig model;

    std::uint64_t seed = 42;
    int val_cadence = 5;       // validation every k epochs (0 = never)
    int checkpoint_cadence = 0; // extra checkpoints every k epochs (0 = end only)

    // Paper hyperparameters with a backbone sized for a laptop CPU:
    // 128x128 inputs, batch 4, 50 epochs, stride 8, C_enc 64, D 32.
    static TrainConfig desk_profile();
    // Documented paper-scale settings (1000 epochs, batch 8, stride 16,
    // C_enc 2048, D 128).
    static TrainConfig paper_profile();
};

std::string serialize_train_config(const TrainConfig& c);
TrainConfig parse_train_config(const std::string& json_text);

struct EpochRecord {
    int epoch = 0;
    double ce = 0.0;
    double dice = 0.0;
    double vqcl = 0.0;
    double total = 0.0;
    double beta = 0.0;
    std::array<double, kNumClasses> omega{1.0, 1.0, 1.0};
    std::optional<double> val_dice;
};

struct TrainLog {
    std::vector<EpochRecord> records;

    void write_csv(const std::string& path) const;
    static TrainLog read_csv(const std::string& path);
};

struct TrainResult {
    std::string checkpoint_path;
    TrainLog log;
};

// Full training loop: forward, projection + MLP embedding, label
// downsampling, center update, enqueue, combined loss with the epoch's
// imbalance weights, SGD step. Deterministic given the config seed.
TrainResult train(const TrainConfig& config, const datagen::DatasetManifest& manifest,
                  const std::string& out_dir);

// Standardized (N,3,H,W) input tensor from grayscale rasters.
nn::Tensor images_to_tensor(const std::vector<const Raster*>& images);

// Per-pixel argmax over class logits; ties resolve to the lowest class index.
Raster predict(model::VcNet& net, const Raster& image);
Raster predict(checkpoint::LoadedCheckpoint& ckpt, const Raster& image);

// Runs predict over the manifest test split, writes <id>.png prediction
// masks into pred_dir, and evaluates them against the truth masks.
metrics::MetricsReport evaluate(checkpoint::LoadedCheckpoint& ckpt,
                                const datagen::DatasetManifest& manifest,
                                const std::string& pred_dir,
                                const metrics::EvaluateOptions& options = {});

} // namespace vcnet::trainer
