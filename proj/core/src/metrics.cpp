#include "vcnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vcnet/distance.hpp"
#include "vcnet/png_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace vcnet::metrics {

ConfusionCounts confusion(const Raster& pred, const Raster& truth, int class_id) {
    if (!pred.same_shape(truth)) throw Error("metrics.confusion", "mask shapes differ");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.at(i) == class_id;
        const bool t = truth.at(i) == class_id;
        if (p && t)
            ++c.tp;
        else if (p && !t)
            ++c.fp;
        else if (!p && t)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

double dice(const ConfusionCounts& c) {
    if (c.tp == 0 && c.fp == 0 && c.fn == 0) return 1.0;
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

double iou(const ConfusionCounts& c) {
    if (c.tp == 0 && c.fp == 0 && c.fn == 0) return 1.0;
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp + c.fn);
}

double accuracy(const ConfusionCounts& c) {
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

std::vector<std::pair<int, int>> surface_points(const Raster& mask, int class_id) {
    std::vector<std::pair<int, int>> pts;
    const int h = mask.height(), w = mask.width();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (mask(y, x) != class_id) continue;
            const bool border = y == 0 || y == h - 1 || x == 0 || x == w - 1;
            const bool exposed = border || mask(y - 1, x) != class_id ||
                                 mask(y + 1, x) != class_id || mask(y, x - 1) != class_id ||
                                 mask(y, x + 1) != class_id;
            if (exposed) pts.emplace_back(y, x);
        }
    return pts;
}

Hd95Variant hd95_variant_from_string(const std::string& s) {
    if (s == "percentile") return Hd95Variant::Percentile;
    if (s == "literal") return Hd95Variant::Literal;
    throw Error("metrics.hd95", "unknown variant '" + s + "' (want percentile|literal)");
}

std::string to_string(Hd95Variant v) {
    return v == Hd95Variant::Percentile ? "percentile" : "literal";
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw Error("metrics.percentile", "empty value set");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

// Directed nearest-surface distances, source -> target, via an exact EDT of
// the target surface.
std::vector<double> directed_surface_distances(const std::vector<std::pair<int, int>>& source,
                                               const std::vector<std::pair<int, int>>& target,
                                               int h, int w) {
    std::vector<std::uint8_t> feat(static_cast<std::size_t>(h) * w, 0);
    for (const auto& [y, x] : target) feat[static_cast<std::size_t>(y) * w + x] = 1;
    const std::vector<double> d2 = squared_edt(feat, h, w);
    std::vector<double> out;
    out.reserve(source.size());
    for (const auto& [y, x] : source)
        out.push_back(std::sqrt(d2[static_cast<std::size_t>(y) * w + x]));
    return out;
}

struct SurfacePair {
    std::vector<std::pair<int, int>> pred;
    std::vector<std::pair<int, int>> truth;
};

SurfacePair surfaces_or_throw(const Raster& pred, const Raster& truth, int class_id,
                              const char* op) {
    if (!pred.same_shape(truth)) throw Error(std::string("metrics.") + op, "mask shapes differ");
    SurfacePair sp{surface_points(pred, class_id), surface_points(truth, class_id)};
    if (sp.pred.empty() || sp.truth.empty())
        throw Error(std::string("metrics.") + op,
                    "class " + std::to_string(class_id) +
                        " empty in prediction or truth: distance undefined");
    return sp;
}

} // namespace

double hd95(const Raster& pred, const Raster& truth, int class_id, Hd95Variant variant) {
    const SurfacePair sp = surfaces_or_throw(pred, truth, class_id, "hd95");
    std::vector<double> d_pt =
        directed_surface_distances(sp.pred, sp.truth, pred.height(), pred.width());
    std::vector<double> d_tp =
        directed_surface_distances(sp.truth, sp.pred, pred.height(), pred.width());
    if (variant == Hd95Variant::Literal) {
        const double m1 = *std::max_element(d_pt.begin(), d_pt.end());
        const double m2 = *std::max_element(d_tp.begin(), d_tp.end());
        return 0.95 * std::max(m1, m2);
    }
    d_pt.insert(d_pt.end(), d_tp.begin(), d_tp.end());
    return percentile(std::move(d_pt), 95.0);
}

double asd(const Raster& pred, const Raster& truth, int class_id) {
    const SurfacePair sp = surfaces_or_throw(pred, truth, class_id, "asd");
    const std::vector<double> d =
        directed_surface_distances(sp.pred, sp.truth, pred.height(), pred.width());
    double s = 0.0;
    for (double v : d) s += v;
    return s / static_cast<double>(d.size());
}

std::array<double, kNumClasses> class_area_proportions(const Raster& mask) {
    const auto n = datagen::count_class_pixels(mask);
    std::array<double, kNumClasses> p{};
    for (int c = 0; c < kNumClasses; ++c)
        p[c] = static_cast<double>(n[c]) / static_cast<double>(mask.size());
    return p;
}

Aggregate aggregate(const std::vector<double>& values) {
    if (values.empty()) throw Error("metrics.aggregate", "no values");
    Aggregate a;
    for (double v : values) a.mean += v;
    a.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - a.mean) * (v - a.mean);
    a.sd = std::sqrt(var / static_cast<double>(values.size()));
    a.q25 = percentile(values, 25.0);
    a.q50 = percentile(values, 50.0);
    a.q75 = percentile(values, 75.0);
    return a;
}

namespace {

constexpr const char* kMetricNames[5] = {"dice", "iou", "hd95", "asd", "acc"};

double metric_field(const ClassMetrics& m, int idx) {
    switch (idx) {
        case 0: return m.dice;
        case 1: return m.iou;
        case 2: return m.hd95;
        case 3: return m.asd;
        default: return m.acc;
    }
}

json aggregate_json(const Aggregate& a) {
    return {{"mean", a.mean}, {"sd", a.sd}, {"q25", a.q25}, {"q50", a.q50}, {"q75", a.q75}};
}

} // namespace

std::string MetricsReport::to_json_string() const {
    json root;
    root["hd95_variant"] = to_string(variant);
    root["distance_penalty"] = distance_penalty;

    json samples = json::array();
    for (const auto& s : per_sample) {
        json js;
        js["id"] = s.id;
        json cls = json::array();
        for (int c = 0; c < kNumClasses; ++c) {
            json cm;
            for (int m = 0; m < 5; ++m) cm[kMetricNames[m]] = metric_field(s.per_class[c], m);
            cls.push_back(cm);
        }
        js["per_class"] = cls;
        json mm;
        for (int m = 0; m < 5; ++m) mm[kMetricNames[m]] = metric_field(s.macro, m);
        js["macro"] = mm;
        js["area_truth"] = s.area_truth;
        js["area_pred"] = s.area_pred;
        samples.push_back(js);
    }
    root["per_sample"] = samples;

    json per_class;
    for (int c = 0; c < kNumClasses; ++c) {
        json jc;
        for (int m = 0; m < 5; ++m) {
            std::vector<double> vals;
            for (const auto& s : per_sample) vals.push_back(metric_field(s.per_class[c], m));
            jc[kMetricNames[m]] = aggregate_json(aggregate(vals));
        }
        per_class[std::to_string(c)] = jc;
    }
    root["per_class"] = per_class;

    json macro;
    for (int m = 0; m < 5; ++m) {
        std::vector<double> vals;
        for (const auto& s : per_sample) vals.push_back(metric_field(s.macro, m));
        macro[kMetricNames[m]] = aggregate_json(aggregate(vals));
    }
    // mean area proportions across the split, truth and prediction
    json area_truth = json::array(), area_pred = json::array();
    for (int c = 0; c < kNumClasses; ++c) {
        double at = 0.0, ap = 0.0;
        for (const auto& s : per_sample) {
            at += s.area_truth[c];
            ap += s.area_pred[c];
        }
        area_truth.push_back(at / static_cast<double>(per_sample.size()));
        area_pred.push_back(ap / static_cast<double>(per_sample.size()));
    }
    macro["area_truth_mean"] = area_truth;
    macro["area_pred_mean"] = area_pred;
    root["macro"] = macro;

    // aggregation block over per-sample macro values, keyed by statistic
    json agg;
    const char* stats[5] = {"mean", "sd", "q25", "q50", "q75"};
    for (int st = 0; st < 5; ++st) {
        json row;
        for (int m = 0; m < 5; ++m) {
            std::vector<double> vals;
            for (const auto& s : per_sample) vals.push_back(metric_field(s.macro, m));
            const Aggregate a = aggregate(vals);
            const double v = st == 0 ? a.mean : st == 1 ? a.sd : st == 2 ? a.q25 : st == 3 ? a.q50 : a.q75;
            row[kMetricNames[m]] = v;
        }
        agg[stats[st]] = row;
    }
    root["aggregation"] = agg;
    return root.dump(2);
}

std::string MetricsReport::to_csv_string() const {
    std::ostringstream os;
    os << "id,class,dice,iou,hd95,asd,acc,area_truth,area_pred\n";
    os.precision(10);
    for (const auto& s : per_sample)
        for (int c = 0; c < kNumClasses; ++c) {
            const auto& m = s.per_class[c];
            os << s.id << ',' << c << ',' << m.dice << ',' << m.iou << ',' << m.hd95 << ',' << m.asd
               << ',' << m.acc << ',' << s.area_truth[c] << ',' << s.area_pred[c] << '\n';
        }
    return os.str();
}

MetricsReport evaluate_dataset(const std::string& pred_dir,
                               const datagen::DatasetManifest& manifest,
                               const EvaluateOptions& options) {
    const auto records = manifest.split_records(options.split);
    if (records.empty())
        throw Error("metrics.evaluate_dataset", "no '" + options.split + "' records in manifest");

    MetricsReport report;
    report.variant = options.variant;

    for (const auto* rec : records) {
        const fs::path pred_path = fs::path(pred_dir) / (rec->id + ".png");
        if (!fs::exists(pred_path))
            throw Error("metrics.evaluate_dataset",
                        "missing prediction file " + pred_path.string());
        const Raster pred = pngio::read_mask(pred_path.string());
        const Raster truth = pngio::read_mask(rec->mask_path);
        if (!pred.same_shape(truth))
            throw Error("metrics.evaluate_dataset", "prediction/truth shapes differ for " + rec->id);

        const double penalty =
            options.distance_penalty >= 0.0
                ? options.distance_penalty
                : std::hypot(static_cast<double>(truth.height()), static_cast<double>(truth.width()));
        report.distance_penalty = penalty;

        SampleMetrics sm;
        sm.id = rec->id;
        sm.area_truth = class_area_proportions(truth);
        sm.area_pred = class_area_proportions(pred);
        ClassMetrics macro;
        for (int c = 0; c < kNumClasses; ++c) {
            const ConfusionCounts cc = confusion(pred, truth, c);
            ClassMetrics m;
            m.dice = dice(cc);
            m.iou = iou(cc);
            m.acc = accuracy(cc);
            try {
                m.hd95 = hd95(pred, truth, c, options.variant);
                m.asd = asd(pred, truth, c);
            } catch (const Error&) {
                m.hd95 = penalty; // undefined distance: substitute the configured penalty
                m.asd = penalty;
            }
            sm.per_class[c] = m;
            macro.dice += m.dice / kNumClasses;
            macro.iou += m.iou / kNumClasses;
            macro.hd95 += m.hd95 / kNumClasses;
            macro.asd += m.asd / kNumClasses;
            macro.acc += m.acc / kNumClasses;
        }
        sm.macro = macro;
        report.per_sample.push_back(std::move(sm));
    }
    return report;
}

void write_report(const MetricsReport& report, const std::string& json_path,
                  const std::string& csv_path) {
    {
        std::ofstream f(json_path, std::ios::binary);
        if (!f) throw Error("metrics.write_report", "cannot open " + json_path);
        f << report.to_json_string() << "\n";
    }
    if (!csv_path.empty()) {
        std::ofstream f(csv_path, std::ios::binary);
        if (!f) throw Error("metrics.write_report", "cannot open " + csv_path);
        f << report.to_csv_string();
    }
}

} // namespace vcnet::metrics
