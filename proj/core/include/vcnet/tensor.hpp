#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vcnet/error.hpp"

namespace vcnet::nn {

enum class Mode { Train, Eval };

// NCHW tensor shape; trailing dims default to 1 so vectors/scalars fit.
struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    long numel() const { return static_cast<long>(n) * c * h * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
               std::to_string(w) + ")";
    }
};

namespace detail {

// Reverse-mode tape node. Ops allocate one node per output; backward_fn reads
// this node's grad and accumulates into the parents' grads.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

} // namespace detail

// Value-semantics handle to a tape node. Copies share the node.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(const Shape& s, bool requires_grad = false);
    static Tensor full(const Shape& s, double v, bool requires_grad = false);
    static Tensor from_data(const Shape& s, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    long numel() const { return node_->shape.numel(); }
    bool requires_grad() const { return node_->requires_grad; }

    // Lvalue-only accessors: spans into a temporary's storage would dangle.
    std::span<const double> value() const& { return node_->value; }
    std::span<const double> value() const&& = delete;
    std::span<const double> grad() const& { return node_->grad; }
    std::span<const double> grad() const&& = delete;
    // Mutable storage access, used for parameter init and optimizer updates.
    std::vector<double>& raw_value() { return node_->value; }
    std::vector<double>& raw_grad() { return node_->grad; }

    double item() const;

    // Reverse-mode sweep from a scalar root.
    void backward() const;
    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    // Constant copy severed from the tape.
    Tensor detached() const;

    std::shared_ptr<detail::Node> node() const { return node_; }
    static Tensor wrap(std::shared_ptr<detail::Node> n) { return Tensor(std::move(n)); }

private:
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::Node> node_;
};

// Low-level constructor for custom ops (losses, contrastive terms).
Tensor make_op(const Shape& shape, std::vector<double> value, std::vector<Tensor> parents,
               std::function<void(detail::Node&)> backward);

// Elementwise and reduction ops.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor sum_all(const Tensor& a);

// Activations and regularization.
Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor dropout(const Tensor& x, double p, Mode mode, std::uint64_t seed);

// Structured ops.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int padding,
              int dilation = 1, int groups = 1);
Tensor batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   std::vector<double>& running_mean, std::vector<double>& running_var, Mode mode,
                   double momentum, double eps);
Tensor upsample_bilinear(const Tensor& x, int factor);
Tensor concat_channels(const std::vector<Tensor>& xs);
Tensor global_avg_pool(const Tensor& x);
Tensor broadcast_hw(const Tensor& x, int h, int w);
Tensor l2_normalize_channels(const Tensor& x, double eps = 1e-12);
Tensor softmax_channels(const Tensor& x);

} // namespace vcnet::nn
