#include "vcnet/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "vcnet/distance.hpp"
#include "vcnet/png_io.hpp"
#include "vcnet/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace vcnet {

std::vector<double> squared_edt(const std::vector<std::uint8_t>& feature, int h, int w) {
    // 1D squared distance transform via lower envelope of parabolas.
    auto transform_1d = [](const std::vector<double>& f, std::vector<double>& d) {
        const int n = static_cast<int>(f.size());
        std::vector<int> v(n);
        std::vector<double> z(n + 1);
        int k = 0;
        v[0] = 0;
        z[0] = -kEdtInf;
        z[1] = kEdtInf;
        for (int q = 1; q < n; ++q) {
            if (f[q] == kEdtInf) continue;
            double s;
            while (true) {
                if (f[v[k]] == kEdtInf) {
                    // previous parabola is at infinity; replace it outright
                    if (k == 0) { s = -kEdtInf; break; }
                    --k;
                    continue;
                }
                s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
                if (s <= z[k]) { --k; continue; }
                break;
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = kEdtInf;
        }
        k = 0;
        for (int q = 0; q < n; ++q) {
            while (z[k + 1] < q) ++k;
            const double dq = q - v[k];
            d[q] = (f[v[k]] == kEdtInf) ? kEdtInf : dq * dq + f[v[k]];
        }
    };

    std::vector<double> dist(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < dist.size(); ++i) dist[i] = feature[i] ? 0.0 : kEdtInf;

    std::vector<double> col(h), colo(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = dist[static_cast<std::size_t>(y) * w + x];
        transform_1d(col, colo);
        for (int y = 0; y < h; ++y) dist[static_cast<std::size_t>(y) * w + x] = colo[y];
    }
    std::vector<double> row(w), rowo(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) row[x] = dist[static_cast<std::size_t>(y) * w + x];
        transform_1d(row, rowo);
        for (int x = 0; x < w; ++x) dist[static_cast<std::size_t>(y) * w + x] = rowo[x];
    }
    return dist;
}

} // namespace vcnet

namespace vcnet::datagen {

namespace {

constexpr const char* kModule = "datagen";

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double point_segment_dist(double px, double py, const Point& a, const Point& b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = clampd(((px - a.x) * dx + (py - a.y) * dy) / len2, 0.0, 1.0);
    const double cx = a.x + t * dx, cy = a.y + t * dy;
    return std::hypot(px - cx, py - cy);
}

// Random-walk grower shared by trunks and branches.
struct Walker {
    Point pos;
    double heading; // radians, 0 points toward +x
    double width;
    int steps_left;
    int depth;
};

double min_dist_to_edges(const VesselGraph& g, const Point& p) {
    double best = kEdtInf;
    for (const Edge& e : g.edges)
        best = std::min(best, point_segment_dist(p.x, p.y, g.nodes[e.a], g.nodes[e.b]) -
                                  e.width * 0.5);
    return best;
}

} // namespace

VesselGraph generate_graph(std::uint64_t seed, int canvas_h, int canvas_w,
                           const GraphParams& params) {
    if (canvas_h < 64 || canvas_w < 64)
        throw Error("datagen.generate_graph", "canvas must be at least 64x64, got " +
                                                  std::to_string(canvas_h) + "x" +
                                                  std::to_string(canvas_w));
    if (params.trunk_count < 1)
        throw Error("datagen.generate_graph", "trunk count must be >= 1");
    if (params.branch_prob < 0.0 || params.branch_prob > 1.0)
        throw Error("datagen.generate_graph", "branch probability must lie in [0,1]");

    const double max_width = std::min(canvas_h, canvas_w) / 4.0;
    Rng rng(derive_seed(seed, "graph"));

    VesselGraph g;
    g.seed = seed;
    g.canvas_h = canvas_h;
    g.canvas_w = canvas_w;
    g.inlet_band = {0, std::min(params.inlet_band_width, canvas_w)};

    auto add_node = [&](Point p) {
        p.x = clampd(p.x, 0.0, canvas_w - 1e-3);
        p.y = clampd(p.y, 0.0, canvas_h - 1e-3);
        g.nodes.push_back(p);
        return static_cast<int>(g.nodes.size()) - 1;
    };

    auto grow = [&](Walker start) {
        std::vector<Walker> stack{start};
        std::vector<int> anchor{add_node(start.pos)};
        while (!stack.empty()) {
            Walker wk = stack.back();
            int node = anchor.back();
            stack.pop_back();
            anchor.pop_back();
            while (wk.steps_left-- > 0) {
                wk.heading += rng.uniform(-0.45, 0.45);
                // keep a rightward drift so trunks span the canvas
                wk.heading = clampd(wk.heading, -1.2, 1.2);
                Point next{wk.pos.x + params.step_len * std::cos(wk.heading),
                           wk.pos.y + params.step_len * std::sin(wk.heading)};
                if (next.x >= canvas_w - 2 || next.y <= 1 || next.y >= canvas_h - 2) break;
                const int nn = add_node(next);
                g.edges.push_back({node, nn, std::min(wk.width, max_width)});
                wk.pos = g.nodes[nn];
                node = nn;
                if (wk.depth < 3 && wk.steps_left > 1 && rng.chance(params.branch_prob)) {
                    Walker br = wk;
                    br.heading += rng.chance(0.5) ? rng.uniform(0.5, 1.1) : -rng.uniform(0.5, 1.1);
                    br.width = std::max(2.0, wk.width * rng.uniform(0.55, 0.8));
                    br.steps_left = std::max(2, wk.steps_left - 2);
                    br.depth = wk.depth + 1;
                    stack.push_back(br);
                    anchor.push_back(node);
                }
            }
        }
    };

    // Trunks: begin inside the inlet band and walk rightward.
    const int max_steps = static_cast<int>(canvas_w / params.step_len) + 2;
    for (int t = 0; t < params.trunk_count; ++t) {
        Walker wk;
        wk.pos = {rng.uniform(0.0, std::max(1.0, static_cast<double>(g.inlet_band.x_end - 1))),
                  rng.uniform(canvas_h * 0.12, canvas_h * 0.88)};
        wk.heading = rng.uniform(-0.3, 0.3);
        wk.width = rng.uniform(params.width_min, std::min(params.width_max, max_width));
        wk.steps_left = max_steps;
        wk.depth = 0;
        grow(wk);
    }

    // Isolated components: short walks placed clear of existing geometry.
    // Later attempts shrink the component so crowded scenes still fit one.
    const int want = static_cast<int>(rng.uniform_int(params.isolated_min, params.isolated_max));
    for (int c = 0; c < want; ++c) {
        const double w0 =
            rng.uniform(params.isolated_width_min, std::min(params.isolated_width_max, max_width));
        bool placed = false;
        for (int attempt = 0; attempt < 80 && !placed; ++attempt) {
            const double w = attempt < 40 ? w0 : params.isolated_width_min;
            Point p{rng.uniform(canvas_w * 0.30, canvas_w * 0.94),
                    rng.uniform(canvas_h * 0.06, canvas_h * 0.94)};
            if (min_dist_to_edges(g, p) < w * 0.5 + 4.0) continue;
            Walker wk;
            wk.pos = p;
            wk.heading = rng.uniform(-3.14159, 3.14159);
            wk.width = w;
            wk.steps_left = attempt < 40 ? static_cast<int>(rng.uniform_int(3, 4 + canvas_w / 96)) : 1;
            wk.depth = 3; // no branching
            // probe the walk before committing so it stays clear of everything
            const std::size_t node_mark = g.nodes.size();
            const std::size_t edge_mark = g.edges.size();
            grow(wk);
            bool clear = g.edges.size() > edge_mark;
            for (std::size_t ei = edge_mark; ei < g.edges.size() && clear; ++ei) {
                const Edge& e = g.edges[ei];
                for (std::size_t ej = 0; ej < edge_mark && clear; ++ej) {
                    const Edge& o = g.edges[ej];
                    // conservative segment separation check via endpoint distances
                    const double need = (e.width + o.width) * 0.5 + 2.0;
                    if (point_segment_dist(g.nodes[e.a].x, g.nodes[e.a].y, g.nodes[o.a], g.nodes[o.b]) < need ||
                        point_segment_dist(g.nodes[e.b].x, g.nodes[e.b].y, g.nodes[o.a], g.nodes[o.b]) < need ||
                        point_segment_dist(g.nodes[o.a].x, g.nodes[o.a].y, g.nodes[e.a], g.nodes[e.b]) < need ||
                        point_segment_dist(g.nodes[o.b].x, g.nodes[o.b].y, g.nodes[e.a], g.nodes[e.b]) < need)
                        clear = false;
                }
            }
            if (clear) {
                placed = true;
            } else {
                g.nodes.resize(node_mark);
                g.edges.resize(edge_mark);
            }
        }
    }
    return g;
}

Raster rasterize(const VesselGraph& graph) {
    Raster out(graph.canvas_h, graph.canvas_w, 0);
    for (const Edge& e : graph.edges) {
        const Point& a = graph.nodes[e.a];
        const Point& b = graph.nodes[e.b];
        const double r = e.width * 0.5;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r - 1)));
        const int x1 = std::min(graph.canvas_w - 1,
                                static_cast<int>(std::ceil(std::max(a.x, b.x) + r + 1)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r - 1)));
        const int y1 = std::min(graph.canvas_h - 1,
                                static_cast<int>(std::ceil(std::max(a.y, b.y) + r + 1)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x)
                if (point_segment_dist(x + 0.5, y + 0.5, a, b) <= r) out(y, x) = 1;
    }
    return out;
}

Raster label_connectivity(const Raster& vessel, const InletBand& inlet) {
    if (inlet.empty()) throw Error("datagen.label_connectivity", "inlet band is empty");
    const int h = vessel.height(), w = vessel.width();

    // Union-find over vessel pixels; the test suite checks this against an
    // independently coded BFS flood fill.
    std::vector<int> parent(static_cast<std::size_t>(h) * w);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[b] = a;
    };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!vessel(y, x)) continue;
            const int i = y * w + x;
            if (x + 1 < w && vessel(y, x + 1)) unite(i, i + 1);
            if (y + 1 < h && vessel(y + 1, x)) unite(i, i + w);
        }

    std::vector<std::uint8_t> root_connected(static_cast<std::size_t>(h) * w, 0);
    const int bx0 = std::max(0, inlet.x_begin);
    const int bx1 = std::min(w, inlet.x_end);
    for (int y = 0; y < h; ++y)
        for (int x = bx0; x < bx1; ++x)
            if (vessel(y, x)) root_connected[find(y * w + x)] = 1;

    Raster mask(h, w, kBackground);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (vessel(y, x))
                mask(y, x) = root_connected[find(y * w + x)] ? kConnected : kNonConnected;
    return mask;
}

Raster render_brightfield(const Raster& vessel, std::uint64_t seed, const RenderParams& params) {
    const int h = vessel.height(), w = vessel.width();
    Rng rng(derive_seed(seed, "render"));

    // Low-frequency background texture: coarse grid, bilinear interpolation.
    const int cell = 32;
    const int gh = h / cell + 2, gw = w / cell + 2;
    std::vector<double> grid(static_cast<std::size_t>(gh) * gw);
    for (double& v : grid) v = rng.uniform(-params.background_texture_amp, params.background_texture_amp);
    auto texture = [&](int y, int x) {
        const double fy = static_cast<double>(y) / cell, fx = static_cast<double>(x) / cell;
        const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
        const double ty = fy - y0, tx = fx - x0;
        const double a = grid[static_cast<std::size_t>(y0) * gw + x0];
        const double b = grid[static_cast<std::size_t>(y0) * gw + x0 + 1];
        const double c = grid[static_cast<std::size_t>(y0 + 1) * gw + x0];
        const double d = grid[static_cast<std::size_t>(y0 + 1) * gw + x0 + 1];
        return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
    };

    // Distance from vessel interior to background, with the canvas border
    // counted as background so border-touching vessels still get walls.
    const int ph = h + 2, pw = w + 2;
    std::vector<std::uint8_t> bg(static_cast<std::size_t>(ph) * pw, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            bg[static_cast<std::size_t>(y + 1) * pw + (x + 1)] = vessel(y, x) ? 0 : 1;
    const std::vector<double> d2 = squared_edt(bg, ph, pw);

    Raster out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double level;
            if (vessel(y, x)) {
                const double d = std::sqrt(d2[static_cast<std::size_t>(y + 1) * pw + (x + 1)]);
                level = (d <= params.edge_band) ? params.edge_level : params.lumen_level;
            } else {
                level = params.background_level + texture(y, x);
            }
            level += rng.gaussian(0.0, params.noise_sigma);
            out(y, x) = static_cast<std::uint8_t>(clampd(std::round(level), 0.0, 255.0));
        }
    return out;
}

Raster flip_horizontal(const Raster& r) {
    Raster out(r.height(), r.width());
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x) out(y, x) = r(y, r.width() - 1 - x);
    return out;
}

Raster flip_vertical(const Raster& r) {
    Raster out(r.height(), r.width());
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x) out(y, x) = r(r.height() - 1 - y, x);
    return out;
}

Raster resize_bilinear(const Raster& r, int out_h, int out_w) {
    Raster out(out_h, out_w);
    const double sy = static_cast<double>(r.height()) / out_h;
    const double sx = static_cast<double>(r.width()) / out_w;
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const double fy = clampd((y + 0.5) * sy - 0.5, 0.0, r.height() - 1.0);
            const double fx = clampd((x + 0.5) * sx - 0.5, 0.0, r.width() - 1.0);
            const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
            const int y1 = std::min(y0 + 1, r.height() - 1), x1 = std::min(x0 + 1, r.width() - 1);
            const double ty = fy - y0, tx = fx - x0;
            const double v = (r(y0, x0) * (1 - tx) + r(y0, x1) * tx) * (1 - ty) +
                             (r(y1, x0) * (1 - tx) + r(y1, x1) * tx) * ty;
            out(y, x) = static_cast<std::uint8_t>(clampd(std::round(v), 0.0, 255.0));
        }
    return out;
}

Raster resize_nearest(const Raster& r, int out_h, int out_w) {
    Raster out(out_h, out_w);
    const double sy = static_cast<double>(r.height()) / out_h;
    const double sx = static_cast<double>(r.width()) / out_w;
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const int yy = std::min(static_cast<int>((y + 0.5) * sy), r.height() - 1);
            const int xx = std::min(static_cast<int>((x + 0.5) * sx), r.width() - 1);
            out(y, x) = r(yy, xx);
        }
    return out;
}

Sample augment(const Sample& in, std::uint64_t seed, const AugmentParams& params) {
    if (!in.image.same_shape(in.mask))
        throw Error("datagen.augment", "image and mask dimensions differ");
    const int h = in.image.height(), w = in.image.width();
    const int crop_h = static_cast<int>(std::lround(h * params.crop_fraction));
    const int crop_w = static_cast<int>(std::lround(w * params.crop_fraction));
    if (crop_h > h || crop_w > w)
        throw Error("datagen.augment", "crop size exceeds image size");
    if (crop_h < 8 || crop_w < 8)
        throw Error("datagen.augment", "crop size degenerate");

    Rng rng(derive_seed(seed, "augment"));
    Sample out = in;
    out.meta.augmentation_trace.clear();

    if (rng.chance(params.flip_prob)) {
        out.image = flip_horizontal(out.image);
        out.mask = flip_horizontal(out.mask);
        out.meta.augmentation_trace.push_back("hflip");
    }
    if (rng.chance(params.flip_prob)) {
        out.image = flip_vertical(out.image);
        out.mask = flip_vertical(out.mask);
        out.meta.augmentation_trace.push_back("vflip");
    }

    // Crop then resize back; nearest-neighbor keeps mask values in {0,1,2}.
    {
        const int oy = static_cast<int>(rng.uniform_int(0, h - crop_h));
        const int ox = static_cast<int>(rng.uniform_int(0, w - crop_w));
        Raster ci(crop_h, crop_w), cm(crop_h, crop_w);
        for (int y = 0; y < crop_h; ++y)
            for (int x = 0; x < crop_w; ++x) {
                ci(y, x) = out.image(oy + y, ox + x);
                cm(y, x) = out.mask(oy + y, ox + x);
            }
        out.image = resize_bilinear(ci, h, w);
        out.mask = resize_nearest(cm, h, w);
        out.meta.augmentation_trace.push_back("crop(" + std::to_string(oy) + "," +
                                              std::to_string(ox) + "," + std::to_string(crop_h) +
                                              "," + std::to_string(crop_w) + ")");
    }

    if (rng.chance(params.discard_prob)) {
        const double area = rng.uniform(0.02, params.discard_max_area) * h * w;
        const double aspect = rng.uniform(0.5, 2.0);
        int rh = std::max(2, std::min(h, static_cast<int>(std::sqrt(area * aspect))));
        int rw = std::max(2, std::min(w, static_cast<int>(area / rh)));
        const int oy = static_cast<int>(rng.uniform_int(0, h - rh));
        const int ox = static_cast<int>(rng.uniform_int(0, w - rw));
        for (int y = oy; y < oy + rh; ++y)
            for (int x = ox; x < ox + rw; ++x) out.image(y, x) = 0;
        out.meta.augmentation_trace.push_back("discard(" + std::to_string(oy) + "," +
                                              std::to_string(ox) + "," + std::to_string(rh) + "," +
                                              std::to_string(rw) + ")");
    }

    // Contrast normalization: zero mean, unit variance, affine back to [0,255].
    {
        double mean = 0.0;
        for (std::size_t i = 0; i < out.image.size(); ++i) mean += out.image.at(i);
        mean /= static_cast<double>(out.image.size());
        double var = 0.0;
        for (std::size_t i = 0; i < out.image.size(); ++i) {
            const double d = out.image.at(i) - mean;
            var += d * d;
        }
        const double sd = std::max(std::sqrt(var / static_cast<double>(out.image.size())), 1e-6);
        for (std::size_t i = 0; i < out.image.size(); ++i) {
            const double z = (out.image.at(i) - mean) / sd;
            out.image.at(i) = static_cast<std::uint8_t>(
                clampd(std::round(params.norm_target_mean + params.norm_target_sigma * z), 0.0, 255.0));
        }
        out.meta.augmentation_trace.push_back("norm");
    }
    return out;
}

std::array<std::int64_t, kNumClasses> count_class_pixels(const Raster& mask) {
    std::array<std::int64_t, kNumClasses> n{0, 0, 0};
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const std::uint8_t v = mask.at(i);
        if (v >= kNumClasses) throw Error("datagen.count_class_pixels", "mask value outside {0,1,2}");
        ++n[v];
    }
    return n;
}

std::vector<const ManifestRecord*> DatasetManifest::split_records(const std::string& split) const {
    std::vector<const ManifestRecord*> out;
    for (const auto& r : records)
        if (r.split == split) out.push_back(&r);
    return out;
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("datagen.write_manifest", "cannot open " + path);
    json meta = {{"type", "meta"},
                 {"canvas_h", m.canvas_h},
                 {"canvas_w", m.canvas_w},
                 {"seed", m.seed},
                 {"n_train_class_pixels", m.train_class_pixels}};
    f << meta.dump() << "\n";
    for (const auto& r : m.records) {
        json rec = {{"id", r.id},
                    {"image_path", r.image_path},
                    {"mask_path", r.mask_path},
                    {"split", r.split},
                    {"seed", r.seed}};
        f << rec.dump() << "\n";
    }
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("datagen.read_manifest", "cannot open " + path);
    const fs::path root = fs::path(path).parent_path();
    DatasetManifest m;
    std::string line;
    bool saw_meta = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, true);
        if (j.value("type", "") == "meta") {
            m.canvas_h = j.at("canvas_h").get<int>();
            m.canvas_w = j.at("canvas_w").get<int>();
            m.seed = j.at("seed").get<std::uint64_t>();
            const auto n = j.at("n_train_class_pixels");
            for (int i = 0; i < kNumClasses; ++i) m.train_class_pixels[i] = n.at(i).get<std::int64_t>();
            saw_meta = true;
            continue;
        }
        ManifestRecord r;
        r.id = j.at("id").get<std::string>();
        r.image_path = (root / j.at("image_path").get<std::string>()).string();
        r.mask_path = (root / j.at("mask_path").get<std::string>()).string();
        r.split = j.at("split").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        m.records.push_back(std::move(r));
    }
    if (!saw_meta) throw Error("datagen.read_manifest", "manifest missing meta line: " + path);
    return m;
}

DatasetManifest build_dataset(int n_samples, std::uint64_t seed, const std::string& out_dir,
                              const BuildOptions& options) {
    if (n_samples < 10) throw Error("datagen.build_dataset", "need at least 10 samples");
    if (!(options.split_ratio > 0.0 && options.split_ratio < 1.0))
        throw Error("datagen.build_dataset", "split ratio must lie in (0,1)");

    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    fs::create_directories(fs::path(out_dir) / "masks", ec);
    if (ec || !fs::is_directory(fs::path(out_dir) / "images"))
        throw Error("datagen.build_dataset", "cannot create output directory " + out_dir);

    const int n_train = static_cast<int>(std::lround(n_samples * options.split_ratio));

    DatasetManifest m;
    m.canvas_h = options.canvas_h;
    m.canvas_w = options.canvas_w;
    m.seed = seed;

    for (int i = 0; i < n_samples; ++i) {
        const std::uint64_t scene_seed = derive_seed(seed, "scene", static_cast<std::uint64_t>(i));
        const bool is_train = i < n_train;

        const VesselGraph graph =
            generate_graph(scene_seed, options.canvas_h, options.canvas_w, options.graph);
        const Raster vessel = rasterize(graph);

        Sample s;
        s.mask = label_connectivity(vessel, graph.inlet_band);
        s.image = render_brightfield(vessel, scene_seed, options.render);
        char idbuf[24];
        std::snprintf(idbuf, sizeof idbuf, "sample_%05d", i);
        s.meta.id = idbuf;
        s.meta.seed = scene_seed;
        s.meta.split = is_train ? "train" : "test";

        if (is_train && options.augment_train)
            s = augment(s, derive_seed(seed, "augment", static_cast<std::uint64_t>(i)), options.aug);

        ManifestRecord r;
        r.id = s.meta.id;
        r.image_path = "images/" + s.meta.id + ".png";
        r.mask_path = "masks/" + s.meta.id + ".png";
        r.split = s.meta.split;
        r.seed = scene_seed;

        pngio::write_gray((fs::path(out_dir) / r.image_path).string(), s.image);
        pngio::write_mask((fs::path(out_dir) / r.mask_path).string(), s.mask);

        if (is_train) {
            const auto n = count_class_pixels(s.mask);
            for (int c = 0; c < kNumClasses; ++c) m.train_class_pixels[c] += n[c];
        }
        m.records.push_back(std::move(r));
    }

    for (int c = 0; c < kNumClasses; ++c)
        if (m.train_class_pixels[c] <= 0)
            throw Error("datagen.build_dataset",
                        "training split has no pixels of class " + std::to_string(c) +
                            "; adjust generator parameters");

    write_manifest(m, (fs::path(out_dir) / "manifest.jsonl").string());
    // read back so returned record paths are resolved like a fresh load
    return read_manifest((fs::path(out_dir) / "manifest.jsonl").string());
}

} // namespace vcnet::datagen
