#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vcnet/datagen.hpp"
#include "vcnet/image.hpp"

namespace vcnet::metrics {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
    std::int64_t total() const { return tp + fp + fn + tn; }
};

// One-vs-rest pixel counts for class_id.
ConfusionCounts confusion(const Raster& pred, const Raster& truth, int class_id);

// 2TP/(2TP+FP+FN); empty-vs-empty (TP=FP=FN=0) defined as 1.
double dice(const ConfusionCounts& c);
// TP/(TP+FP+FN); same empty convention.
double iou(const ConfusionCounts& c);
// (TP+TN)/total.
double accuracy(const ConfusionCounts& c);

// Boundary pixels of the class mask: mask pixels 4-adjacent to a non-mask
// pixel or lying on the image border.
std::vector<std::pair<int, int>> surface_points(const Raster& mask, int class_id);

enum class Hd95Variant { Percentile, Literal };
Hd95Variant hd95_variant_from_string(const std::string& s);
std::string to_string(Hd95Variant v);

// Percentile (default): 95th percentile of the pooled directed surface
// distances in both directions. Literal: 0.95 * max of the two one-way
// Hausdorff maxima. Distances are Euclidean in pixel units. Throws when
// either class mask is empty.
double hd95(const Raster& pred, const Raster& truth, int class_id,
            Hd95Variant variant = Hd95Variant::Percentile);

// Mean distance from prediction surface pixels to the nearest truth surface
// pixel (one-directional). Throws when either class mask is empty.
double asd(const Raster& pred, const Raster& truth, int class_id);

// Pixel-count fractions per class, summing to 1.
std::array<double, kNumClasses> class_area_proportions(const Raster& mask);

// Linear-interpolation percentile (the convention used for HD95 and report
// quartiles): rank p*(n-1) on the sorted values.
double percentile(std::vector<double> values, double p);

struct ClassMetrics {
    double dice = 0.0;
    double iou = 0.0;
    double hd95 = 0.0;
    double asd = 0.0;
    double acc = 0.0;
};

struct SampleMetrics {
    std::string id;
    std::array<ClassMetrics, kNumClasses> per_class{};
    ClassMetrics macro{};
    std::array<double, kNumClasses> area_truth{};
    std::array<double, kNumClasses> area_pred{};
};

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0;
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
};

Aggregate aggregate(const std::vector<double>& values);

struct MetricsReport {
    std::vector<SampleMetrics> per_sample;
    Hd95Variant variant = Hd95Variant::Percentile;
    double distance_penalty = 0.0; // substituted when a distance metric is undefined

    std::string to_json_string() const;
    std::string to_csv_string() const;
};

struct EvaluateOptions {
    Hd95Variant variant = Hd95Variant::Percentile;
    // <0 -> image diagonal; substituted when hd95/asd are undefined for a class
    double distance_penalty = -1.0;
    std::string split = "test";
};

// Computes per-sample, per-class metrics over the manifest split, reading one
// prediction mask per record from pred_dir/<id>.png.
MetricsReport evaluate_dataset(const std::string& pred_dir,
                               const datagen::DatasetManifest& manifest,
                               const EvaluateOptions& options = {});

void write_report(const MetricsReport& report, const std::string& json_path,
                  const std::string& csv_path = "");

} // namespace vcnet::metrics
