#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vcnet/image.hpp"
#include "vcnet/rng.hpp"
#include "vcnet/tensor.hpp"

namespace vcnet::nn {

// Named parameter tensors (trainable) and buffers (running statistics),
// collected for the optimizer and the checkpoint writer.
using ParamList = std::vector<std::pair<std::string, Tensor>>;
using BufferList = std::vector<std::pair<std::string, std::vector<double>*>>;

struct Conv2d {
    Tensor weight; // (out, in/groups, k, k)
    Tensor bias;   // (out) — always present
    int stride = 1;
    int padding = 0;
    int dilation = 1;
    int groups = 1;

    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int kernel, int stride, int padding, Rng& rng, int dilation = 1,
           int groups = 1);

    Tensor forward(const Tensor& x) const {
        return conv2d(x, weight, bias, stride, padding, dilation, groups);
    }
    void collect(const std::string& prefix, ParamList& params) const;
};

struct BatchNorm2d {
    Tensor gamma;
    Tensor beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels, double momentum = 0.1);

    Tensor forward(const Tensor& x, Mode mode) {
        return batchnorm2d(x, gamma, beta, running_mean, running_var, mode, momentum, eps);
    }
    void collect(const std::string& prefix, ParamList& params, BufferList& buffers);
};

// Flat batch of per-pixel integer labels, row-major (n, y, x).
struct LabelBatch {
    int n = 0;
    int h = 0;
    int w = 0;
    std::vector<std::uint8_t> labels;

    static LabelBatch from_masks(const std::vector<const Raster*>& masks);
    long numel() const { return static_cast<long>(n) * h * w; }
};

// SGD with momentum and decoupled-from-nothing classic L2 weight decay:
// v <- mu*v + g + wd*p ; p <- p - lr*v.
class SgdOptimizer {
public:
    SgdOptimizer(ParamList params, double lr, double momentum, double weight_decay);
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }
    void step();
    void zero_grad();

private:
    ParamList params_;
    std::vector<std::vector<double>> velocity_;
    double lr_;
    double momentum_;
    double weight_decay_;
};

} // namespace vcnet::nn
