#include "vcnet/vqcl.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "vcnet/rng.hpp"

namespace vcnet::vqcl {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_alignment(const nn::Shape& fshape, const nn::LabelBatch& labels, const char* op) {
    if (fshape.n != labels.n || fshape.h != labels.h || fshape.w != labels.w)
        throw Error(std::string("vqcl.") + op,
                    "feature map " + fshape.str() + " not aligned with labels (" +
                        std::to_string(labels.n) + "," + std::to_string(labels.h) + "," +
                        std::to_string(labels.w) + ")");
}

// Flat offset of channel 0 of pixel (n,y,x) in an NCHW buffer.
std::size_t pixel_base(const nn::Shape& s, int n, int y, int x) {
    return (static_cast<std::size_t>(n) * s.c * s.h + static_cast<std::size_t>(y)) * s.w + x;
}

std::vector<double> read_pixel_vector(std::span<const double> f, const nn::Shape& s, int n, int y,
                                      int x) {
    std::vector<double> v(s.c);
    const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
    const std::size_t base =
        (static_cast<std::size_t>(n) * s.c) * hw + static_cast<std::size_t>(y) * s.w + x;
    for (int c = 0; c < s.c; ++c) v[c] = f[base + static_cast<std::size_t>(c) * hw];
    return v;
}

// Shared loss evaluation. When grad_sink is non-null it receives, for every
// entry, dTotal/d(entry feature).
struct EntryRef {
    const QueueEntry* entry;
    std::vector<double>* grad; // nullptr when gradients are not requested
};

double loss_over_queue(const ClassCenters& centers, const FeatureQueue& queue, double tau,
                       std::vector<std::vector<std::vector<double>>>* grads,
                       std::vector<double>* per_class = nullptr) {
    if (tau <= 0.0) throw Error("vqcl.vqcl_loss", "temperature must be positive");
    const int L = queue.num_classes();
    if (centers.num_classes() < L)
        throw Error("vqcl.vqcl_loss", "fewer centers than queue classes");

    // exps[i][l][k] = exp(<C_i, f_{l,k}>/tau)
    std::vector<std::vector<std::vector<double>>> exps(L);
    for (int i = 0; i < L; ++i) {
        exps[i].resize(L);
        for (int l = 0; l < L; ++l) {
            const auto& es = queue.entries(l);
            exps[i][l].resize(es.size());
            for (std::size_t k = 0; k < es.size(); ++k)
                exps[i][l][k] = std::exp(dot(centers.unit(i), es[k].feature) / tau);
        }
    }

    if (grads) {
        grads->assign(L, {});
        for (int l = 0; l < L; ++l)
            (*grads)[l].assign(queue.size(l),
                               std::vector<double>(static_cast<std::size_t>(centers.dim()), 0.0));
    }

    if (per_class) per_class->assign(L, 0.0);
    double total = 0.0;
    for (int i = 0; i < L; ++i) {
        const std::size_t npos = queue.size(i);
        if (npos == 0) continue; // no positives, class contributes nothing

        double pos_mean = 0.0;
        for (double e : exps[i][i]) pos_mean += e;
        pos_mean /= static_cast<double>(npos);

        double neg_sum = 0.0;
        for (int l = 0; l < L; ++l) {
            if (l == i || queue.size(l) == 0) continue;
            double m = 0.0;
            for (double e : exps[i][l]) m += e;
            neg_sum += m / static_cast<double>(queue.size(l));
        }

        const double denom = pos_mean + neg_sum;
        const double term = std::log(denom) - std::log(pos_mean);
        if (per_class) (*per_class)[i] = term;
        total += term;

        if (grads) {
            // d/ds for positive k: (e_k/|Qi|)(1/denom - 1/pos_mean); negatives: (e_m/|Ql|)/denom.
            for (std::size_t k = 0; k < npos; ++k) {
                const double coeff =
                    exps[i][i][k] / static_cast<double>(npos) * (1.0 / denom - 1.0 / pos_mean) / tau;
                auto& g = (*grads)[i][k];
                const auto ci = centers.unit(i);
                for (int c = 0; c < centers.dim(); ++c) g[c] += coeff * ci[c];
            }
            for (int l = 0; l < L; ++l) {
                if (l == i || queue.size(l) == 0) continue;
                for (std::size_t k = 0; k < queue.size(l); ++k) {
                    const double coeff =
                        exps[i][l][k] / static_cast<double>(queue.size(l)) / denom / tau;
                    auto& g = (*grads)[l][k];
                    const auto ci = centers.unit(i);
                    for (int c = 0; c < centers.dim(); ++c) g[c] += coeff * ci[c];
                }
            }
        }
    }
    return total;
}

} // namespace

ClassCenters::ClassCenters(int num_classes, int dim) : num_classes_(num_classes), dim_(dim) {
    raw_.assign(static_cast<std::size_t>(num_classes) * dim, 0.0);
    unit_ = raw_;
}

std::span<const double> ClassCenters::unit(int cls) const {
    return {unit_.data() + static_cast<std::size_t>(cls) * dim_, static_cast<std::size_t>(dim_)};
}

std::span<const double> ClassCenters::raw(int cls) const {
    return {raw_.data() + static_cast<std::size_t>(cls) * dim_, static_cast<std::size_t>(dim_)};
}

void ClassCenters::restore(std::vector<double> raw, long iteration) {
    if (raw.size() != static_cast<std::size_t>(num_classes_) * dim_)
        throw Error("vqcl.ClassCenters", "restore size mismatch");
    raw_ = std::move(raw);
    iteration_ = iteration;
    renormalize();
}

void ClassCenters::renormalize() {
    for (int i = 0; i < num_classes_; ++i) {
        double q = 0.0;
        for (int c = 0; c < dim_; ++c) {
            const double v = raw_[static_cast<std::size_t>(i) * dim_ + c];
            q += v * v;
        }
        const double norm = std::sqrt(q);
        if (norm < 1e-12) continue; // keep previous unit vector for a vanished accumulator
        for (int c = 0; c < dim_; ++c)
            unit_[static_cast<std::size_t>(i) * dim_ + c] =
                raw_[static_cast<std::size_t>(i) * dim_ + c] / norm;
    }
}

FeatureQueue::FeatureQueue(int num_classes, int capacity) : capacity_(capacity) {
    if (num_classes < 1 || capacity < 1)
        throw Error("vqcl.FeatureQueue", "need at least one class and positive capacity");
    queues_.resize(num_classes);
}

void FeatureQueue::push(int cls, QueueEntry entry) {
    auto& q = queues_.at(cls);
    q.push_back(std::move(entry));
    while (static_cast<int>(q.size()) > capacity_) q.pop_front(); // strict oldest-first eviction
}

void FeatureQueue::clear() {
    for (auto& q : queues_) q.clear();
}

ClassCenters init_centers(int num_classes, int dim, std::uint64_t seed) {
    if (num_classes < 2 || dim < 2)
        throw Error("vqcl.init_centers", "need at least 2 classes and 2 dimensions");
    Rng rng(derive_seed(seed, "centers"));
    ClassCenters c(num_classes, dim);
    std::vector<double> raw(static_cast<std::size_t>(num_classes) * dim);
    for (int i = 0; i < num_classes; ++i) {
        // isotropic Gaussian, normalized: uniform on the unit sphere
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double v = rng.gaussian();
                raw[static_cast<std::size_t>(i) * dim + d] = v;
                norm2 += v * v;
            }
        } while (norm2 < 1e-12);
        const double inv = 1.0 / std::sqrt(norm2);
        for (int d = 0; d < dim; ++d) raw[static_cast<std::size_t>(i) * dim + d] *= inv;
    }
    c.restore(std::move(raw), 0);
    return c;
}

Raster downsample_labels(const Raster& mask, int stride) {
    if (stride < 1) throw Error("vqcl.downsample_labels", "stride must be >= 1");
    if (mask.height() % stride != 0 || mask.width() % stride != 0)
        throw Error("vqcl.downsample_labels",
                    "mask dims must be divisible by stride " + std::to_string(stride));
    Raster out(mask.height() / stride, mask.width() / stride);
    const int off = stride / 2;
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) out(y, x) = mask(y * stride + off, x * stride + off);
    return out;
}

void update_centers(ClassCenters& centers, std::span<const double> features,
                    const nn::Shape& fshape, const nn::LabelBatch& labels, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw Error("vqcl.update_centers", "alpha must lie in [0,1]");
    check_alignment(fshape, labels, "update_centers");
    if (fshape.c != centers.dim())
        throw Error("vqcl.update_centers", "feature dim does not match center dim");

    const int L = centers.num_classes();
    const std::size_t hw = static_cast<std::size_t>(fshape.h) * fshape.w;
    std::vector<double> sums(static_cast<std::size_t>(L) * centers.dim(), 0.0);
    std::vector<long> counts(L, 0);

    for (int n = 0; n < fshape.n; ++n)
        for (int y = 0; y < fshape.h; ++y)
            for (int x = 0; x < fshape.w; ++x) {
                const int cls =
                    labels.labels[(static_cast<std::size_t>(n) * fshape.h + y) * fshape.w + x];
                if (cls >= L) throw Error("vqcl.update_centers", "label out of range");
                ++counts[cls];
                const std::size_t base = (static_cast<std::size_t>(n) * fshape.c) * hw +
                                         static_cast<std::size_t>(y) * fshape.w + x;
                double* s = sums.data() + static_cast<std::size_t>(cls) * centers.dim();
                for (int c = 0; c < fshape.c; ++c) s[c] += features[base + static_cast<std::size_t>(c) * hw];
            }

    for (int i = 0; i < L; ++i) {
        if (counts[i] == 0) continue; // absent class: center stays bitwise unchanged
        double* raw = centers.raw_.data() + static_cast<std::size_t>(i) * centers.dim();
        const double* s = sums.data() + static_cast<std::size_t>(i) * centers.dim();
        for (int c = 0; c < centers.dim(); ++c)
            raw[c] = alpha * raw[c] + (1.0 - alpha) * s[c] / static_cast<double>(counts[i]);
    }
    centers.iteration_ += 1;
    centers.renormalize();
}

void enqueue(FeatureQueue& queue, std::span<const double> features, const nn::Shape& fshape,
             const nn::LabelBatch& labels, int samples_per_class, std::uint64_t seed,
             long iteration) {
    check_alignment(fshape, labels, "enqueue");
    const int L = queue.num_classes();

    std::vector<std::vector<std::array<int, 3>>> pixels(L);
    for (int n = 0; n < fshape.n; ++n)
        for (int y = 0; y < fshape.h; ++y)
            for (int x = 0; x < fshape.w; ++x) {
                const int cls =
                    labels.labels[(static_cast<std::size_t>(n) * fshape.h + y) * fshape.w + x];
                if (cls < L) pixels[cls].push_back({n, y, x});
            }

    Rng rng(derive_seed(seed, "enqueue"));
    for (int cls = 0; cls < L; ++cls) {
        auto& px = pixels[cls];
        const int take = std::min<int>(samples_per_class, static_cast<int>(px.size()));
        // partial Fisher-Yates: uniform sample without replacement
        for (int k = 0; k < take; ++k) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(k, static_cast<std::int64_t>(px.size()) - 1));
            std::swap(px[k], px[j]);
            QueueEntry e;
            e.feature = read_pixel_vector(features, fshape, px[k][0], px[k][1], px[k][2]);
            e.iteration = iteration;
            e.n = px[k][0];
            e.y = px[k][1];
            e.x = px[k][2];
            queue.push(cls, std::move(e));
        }
    }
}

double vqcl_loss(const ClassCenters& centers, const FeatureQueue& queue, double tau) {
    return loss_over_queue(centers, queue, tau, nullptr);
}

std::vector<double> vqcl_loss_per_class(const ClassCenters& centers, const FeatureQueue& queue,
                                        double tau) {
    std::vector<double> per_class;
    loss_over_queue(centers, queue, tau, nullptr, &per_class);
    return per_class;
}

nn::Tensor vqcl_loss_graph(const nn::Tensor& normalized_features, const ClassCenters& centers,
                           const FeatureQueue& queue, double tau, long current_iteration) {
    std::vector<std::vector<std::vector<double>>> grads;
    const double loss = loss_over_queue(centers, queue, tau, &grads);

    // Keep only gradient routes for current-iteration entries.
    struct Route {
        std::size_t base; // offset of channel 0 at the entry's pixel
        std::vector<double> grad;
    };
    const nn::Shape fs = normalized_features.shape();
    const std::size_t hw = static_cast<std::size_t>(fs.h) * fs.w;
    auto routes = std::make_shared<std::vector<Route>>();
    for (int cls = 0; cls < queue.num_classes(); ++cls) {
        const auto& entries = queue.entries(cls);
        for (std::size_t k = 0; k < entries.size(); ++k) {
            if (is_detached(entries[k], current_iteration)) continue;
            const auto& e = entries[k];
            if (e.n >= fs.n || e.y >= fs.h || e.x >= fs.w)
                throw Error("vqcl.vqcl_loss_graph",
                            "current-iteration entry location outside the feature map");
            routes->push_back({pixel_base(fs, e.n, e.y, e.x), std::move(grads[cls][k])});
        }
    }

    auto pf = normalized_features.node();
    return nn::make_op(nn::Shape{1, 1, 1, 1}, {loss}, {normalized_features},
                       [pf, routes, hw, fs](nn::detail::Node& self) {
                           pf->ensure_grad();
                           const double g = self.grad[0];
                           for (const auto& r : *routes)
                               for (int c = 0; c < fs.c; ++c)
                                   pf->grad[r.base + static_cast<std::size_t>(c) * hw] +=
                                       g * r.grad[c];
                       });
}

} // namespace vcnet::vqcl
