#include "vcnet/nn.hpp"

#include <cmath>

namespace vcnet::nn {

Conv2d::Conv2d(int in_ch, int out_ch, int kernel, int stride_, int padding_, Rng& rng,
               int dilation_, int groups_) {
    stride = stride_;
    padding = padding_;
    dilation = dilation_;
    groups = groups_;
    const int cin_g = in_ch / groups;
    Shape ws{out_ch, cin_g, kernel, kernel};
    std::vector<double> w(static_cast<std::size_t>(ws.numel()));
    // He initialization for ReLU-family networks.
    const double std_dev = std::sqrt(2.0 / (static_cast<double>(cin_g) * kernel * kernel));
    for (double& v : w) v = rng.gaussian(0.0, std_dev);
    weight = Tensor::from_data(ws, std::move(w), true);
    bias = Tensor::zeros(Shape{out_ch, 1, 1, 1}, true);
}

void Conv2d::collect(const std::string& prefix, ParamList& params) const {
    params.emplace_back(prefix + ".weight", weight);
    params.emplace_back(prefix + ".bias", bias);
}

BatchNorm2d::BatchNorm2d(int channels, double momentum_) : momentum(momentum_) {
    gamma = Tensor::full(Shape{channels, 1, 1, 1}, 1.0, true);
    beta = Tensor::zeros(Shape{channels, 1, 1, 1}, true);
    running_mean.assign(channels, 0.0);
    running_var.assign(channels, 1.0);
}

void BatchNorm2d::collect(const std::string& prefix, ParamList& params, BufferList& buffers) {
    params.emplace_back(prefix + ".gamma", gamma);
    params.emplace_back(prefix + ".beta", beta);
    buffers.emplace_back(prefix + ".running_mean", &running_mean);
    buffers.emplace_back(prefix + ".running_var", &running_var);
}

LabelBatch LabelBatch::from_masks(const std::vector<const Raster*>& masks) {
    LabelBatch b;
    if (masks.empty()) return b;
    b.n = static_cast<int>(masks.size());
    b.h = masks[0]->height();
    b.w = masks[0]->width();
    b.labels.reserve(static_cast<std::size_t>(b.numel()));
    for (const Raster* m : masks) {
        if (m->height() != b.h || m->width() != b.w)
            throw Error("nn.LabelBatch", "masks in a batch must share dimensions");
        b.labels.insert(b.labels.end(), m->pixels().begin(), m->pixels().end());
    }
    return b;
}

SgdOptimizer::SgdOptimizer(ParamList params, double lr, double momentum, double weight_decay)
    : params_(std::move(params)), lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
    velocity_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i)
        velocity_[i].assign(params_[i].second.value().size(), 0.0);
}

void SgdOptimizer::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i].second;
        auto& val = p.raw_value();
        auto& g = p.raw_grad();
        if (g.size() != val.size()) continue; // never touched by backward
        auto& v = velocity_[i];
        for (std::size_t j = 0; j < val.size(); ++j) {
            v[j] = momentum_ * v[j] + g[j] + weight_decay_ * val[j];
            val[j] -= lr_ * v[j];
        }
    }
}

void SgdOptimizer::zero_grad() {
    for (auto& [name, p] : params_) p.zero_grad();
}

} // namespace vcnet::nn
