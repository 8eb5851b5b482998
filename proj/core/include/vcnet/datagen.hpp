#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vcnet/image.hpp"

namespace vcnet::datagen {

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

struct Edge {
    int a = 0; // node indices
    int b = 0;
    double width = 1.0; // pixels
    bool operator==(const Edge&) const = default;
};

// Pixel-column range [x_begin, x_end) marking the perfusion inlet side.
struct InletBand {
    int x_begin = 0;
    int x_end = 4;
    bool empty() const { return x_end <= x_begin; }
    bool operator==(const InletBand&) const = default;
};

struct VesselGraph {
    std::vector<Point> nodes;
    std::vector<Edge> edges;
    InletBand inlet_band;
    std::uint64_t seed = 0;
    int canvas_h = 0;
    int canvas_w = 0;

    bool operator==(const VesselGraph&) const = default;
};

// Branching parameters for the procedural generator.
struct GraphParams {
    int trunk_count = 3;            // polylines seeded inside the inlet band
    double branch_prob = 0.22;      // per-step probability of spawning a branch
    double width_min = 4.0;         // trunk width range, pixels
    double width_max = 9.0;
    int isolated_min = 3;           // components placed away from the inlet
    int isolated_max = 6;
    double isolated_width_min = 4.0;
    double isolated_width_max = 9.0;
    int inlet_band_width = 4;       // leftmost columns
    double step_len = 9.0;          // random-walk step length, pixels
};

struct AugmentParams {
    double flip_prob = 0.5;         // horizontal and vertical, independently
    double crop_fraction = 0.875;   // crop to this fraction of H and W, then resize back
    double discard_prob = 0.3;      // zero out one rectangle <= 10% of area
    double discard_max_area = 0.10;
    double norm_target_mean = 127.5;
    double norm_target_sigma = 40.0;
};

struct RenderParams {
    double background_level = 175.0;
    double background_texture_amp = 12.0; // low-frequency field amplitude
    double edge_level = 70.0;             // vessel wall intensity
    double lumen_level = 130.0;           // vessel interior intensity
    double edge_band = 1.6;              // wall thickness, pixels
    double noise_sigma = 5.0;
    double contrast_margin = 25.0;       // documented minimum |mean_in - mean_out|
};

struct SampleMeta {
    std::string id;
    std::uint64_t seed = 0;
    std::string split; // "train" | "test"
    std::vector<std::string> augmentation_trace;
};

// A paired grayscale image and 3-class label mask; the dataset atom.
struct Sample {
    Raster image;
    Raster mask;
    SampleMeta meta;
};

struct ManifestRecord {
    std::string id;
    std::string image_path;
    std::string mask_path;
    std::string split;
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;
    int canvas_h = 0;
    int canvas_w = 0;
    std::uint64_t seed = 0;
    std::array<std::int64_t, kNumClasses> train_class_pixels{0, 0, 0}; // n_i

    std::vector<const ManifestRecord*> split_records(const std::string& split) const;
};

// Grows a random vascular graph. Trunks start inside the inlet band; isolated
// components are placed clear of everything already grown, so most scenes
// carry all three label classes. Deterministic per (seed, canvas, params).
VesselGraph generate_graph(std::uint64_t seed, int canvas_h, int canvas_w,
                           const GraphParams& params = {});

// Pixel is vessel iff its center lies within width/2 of some edge segment.
Raster rasterize(const VesselGraph& graph);

// Ground-truth oracle: vessel pixels 4-connected to an inlet-band vessel pixel
// become kConnected, remaining vessel pixels kNonConnected.
Raster label_connectivity(const Raster& vessel, const InletBand& inlet);

// Bright-field style rendering: dark walls, mid-gray lumen, bright textured
// background, seeded Gaussian noise.
Raster render_brightfield(const Raster& vessel, std::uint64_t seed,
                          const RenderParams& params = {});

// Geometric helpers used by augment; exposed for direct testing.
Raster flip_horizontal(const Raster& r);
Raster flip_vertical(const Raster& r);
Raster resize_bilinear(const Raster& r, int out_h, int out_w);
Raster resize_nearest(const Raster& r, int out_h, int out_w);

// Seeded augmentation pipeline: flips, crop+resize-back, patch discard,
// contrast normalization. The mask receives the geometric transforms only.
Sample augment(const Sample& in, std::uint64_t seed, const AugmentParams& params = {});

struct BuildOptions {
    int canvas_h = 256;
    int canvas_w = 256;
    double split_ratio = 0.7; // train fraction
    bool augment_train = true;
    GraphParams graph;
    RenderParams render;
    AugmentParams aug;
};

// Generates n samples, splits scenes 7:3 before augmentation, writes PNGs and
// a JSON-lines manifest (meta line first, then one record per sample).
DatasetManifest build_dataset(int n_samples, std::uint64_t seed, const std::string& out_dir,
                              const BuildOptions& options = {});

// Manifest (de)serialization. Line 1 holds dataset-level metadata; each later
// line is {id, image_path, mask_path, split, seed}.
void write_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

std::array<std::int64_t, kNumClasses> count_class_pixels(const Raster& mask);

} // namespace vcnet::datagen
