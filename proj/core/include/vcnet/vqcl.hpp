#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "vcnet/image.hpp"
#include "vcnet/nn.hpp"

namespace vcnet::vqcl {

struct VqclConfig {
    double alpha = 0.4;        // class-center momentum
    double tau = 0.4;          // contrastive temperature
    int queue_capacity = 128;  // per-class feature capacity
    int samples_per_class = 16; // pixels sampled per class per batch
};

// Momentum-averaged class prototypes. The ratio form of the update is kept in
// a raw accumulator; unit-norm centers are derived from it after every update.
class ClassCenters {
public:
    ClassCenters() = default;
    ClassCenters(int num_classes, int dim);

    int num_classes() const { return num_classes_; }
    int dim() const { return dim_; }
    long iteration() const { return iteration_; }

    std::span<const double> unit(int cls) const;
    std::span<const double> raw(int cls) const;

    // Direct state access for (de)serialization.
    const std::vector<double>& raw_storage() const { return raw_; }
    void restore(std::vector<double> raw, long iteration);

private:
    friend void update_centers(ClassCenters&, std::span<const double>, const nn::Shape&,
                               const nn::LabelBatch&, double);
    int num_classes_ = 0;
    int dim_ = 0;
    long iteration_ = 0;
    std::vector<double> raw_;  // L x D momentum accumulator
    std::vector<double> unit_; // L x D normalized centers
    void renormalize();
};

struct QueueEntry {
    std::vector<double> feature; // unit-norm copy of the pixel embedding
    long iteration = 0;
    // pixel location in the producing batch, used to route gradients
    int n = 0;
    int y = 0;
    int x = 0;
};

// Per-class FIFO of past pixel embeddings. Entries from the current training
// iteration still carry gradients (via their recorded locations); everything
// older is a detached constant.
class FeatureQueue {
public:
    FeatureQueue() = default;
    FeatureQueue(int num_classes, int capacity);

    int num_classes() const { return static_cast<int>(queues_.size()); }
    int capacity() const { return capacity_; }
    const std::deque<QueueEntry>& entries(int cls) const { return queues_.at(cls); }
    std::size_t size(int cls) const { return queues_.at(cls).size(); }

    void push(int cls, QueueEntry entry);
    void clear();

private:
    std::vector<std::deque<QueueEntry>> queues_;
    int capacity_ = 0;
};

inline bool is_detached(const QueueEntry& e, long current_iteration) {
    return e.iteration < current_iteration;
}

// Random unit-sphere prototypes; deterministic per seed. K starts at 0.
ClassCenters init_centers(int num_classes, int dim, std::uint64_t seed);

// Nearest-neighbor subsampling at stride-cell centers; dims must divide.
Raster downsample_labels(const Raster& mask, int stride);

// Momentum update: raw_i <- alpha*raw_i + (1-alpha)*mean(features of class i),
// skipping classes absent from the batch, then renormalize. Increments K.
// Features are read as plain values; no gradient flows into the centers.
void update_centers(ClassCenters& centers, std::span<const double> features,
                    const nn::Shape& fshape, const nn::LabelBatch& labels, double alpha);

// Samples up to `samples_per_class` pixels per class without replacement and
// appends their embeddings; oldest entries are evicted beyond capacity.
void enqueue(FeatureQueue& queue, std::span<const double> features, const nn::Shape& fshape,
             const nn::LabelBatch& labels, int samples_per_class, std::uint64_t seed,
             long iteration);

// Class-center InfoNCE over the queue: for class i the positive term is the
// mean of exp(<C_i,f>/tau) over class-i entries, the negatives are the
// per-class means over other classes' entries, and the per-class loss is
// -log(pos / (pos + sum(neg))). Total is the sum over classes.
double vqcl_loss(const ClassCenters& centers, const FeatureQueue& queue, double tau);

// Individual class terms of the same loss (classes without positives are 0).
std::vector<double> vqcl_loss_per_class(const ClassCenters& centers, const FeatureQueue& queue,
                                        double tau);

// Tape version used in training: gradients flow into the embedding field at
// the pixel locations of current-iteration entries only.
nn::Tensor vqcl_loss_graph(const nn::Tensor& normalized_features, const ClassCenters& centers,
                           const FeatureQueue& queue, double tau, long current_iteration);

} // namespace vcnet::vqcl
