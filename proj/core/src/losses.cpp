#include "vcnet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vcnet::losses {

std::string to_string(WeightMode m) {
    switch (m) {
        case WeightMode::None: return "none";
        case WeightMode::RW: return "rw";
        case WeightMode::DRW: return "drw";
        case WeightMode::PPW: return "ppw";
    }
    return "none";
}

WeightMode weight_mode_from_string(const std::string& s) {
    if (s == "none") return WeightMode::None;
    if (s == "rw") return WeightMode::RW;
    if (s == "drw") return WeightMode::DRW;
    if (s == "ppw") return WeightMode::PPW;
    throw Error("losses.weight_mode", "unknown mode '" + s + "'");
}

ClassWeights unit_weights(int num_classes) {
    return {std::vector<double>(static_cast<std::size_t>(num_classes), 1.0), WeightMode::None, 0.0};
}

namespace {

ClassWeights reciprocal_pow_weights(std::span<const std::int64_t> n, double beta, WeightMode tag) {
    if (n.empty()) throw Error("losses.weights", "empty class count vector");
    std::vector<double> w(n.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] <= 0)
            throw Error("losses.weights", "class " + std::to_string(i) + " has zero pixel count");
        w[i] = std::pow(1.0 / static_cast<double>(n[i]), beta);
        mean += w[i];
    }
    mean /= static_cast<double>(n.size());
    for (double& v : w) v /= mean; // mean-1 rescale keeps loss magnitudes comparable
    return {std::move(w), tag, beta};
}

} // namespace

ClassWeights rw_weights(std::span<const std::int64_t> n) {
    return reciprocal_pow_weights(n, 1.0, WeightMode::RW);
}

double ppw_beta(int epoch, int e_min, int e_max) {
    if (e_min >= e_max) throw Error("losses.ppw_beta", "requires e_min < e_max");
    if (epoch < e_min) return 0.0;
    if (epoch > e_max) return 1.0;
    const double t = static_cast<double>(epoch - e_min) / static_cast<double>(e_max - e_min);
    return t * t;
}

ClassWeights ppw_weights(std::span<const std::int64_t> n, double beta) {
    if (beta < 0.0 || beta > 1.0) throw Error("losses.ppw_weights", "beta must lie in [0,1]");
    return reciprocal_pow_weights(n, beta, WeightMode::PPW);
}

ClassWeights drw_weights(std::span<const std::int64_t> n, int epoch, int e_switch) {
    if (e_switch < 0) throw Error("losses.drw_weights", "switch epoch must be >= 0");
    if (epoch < e_switch) {
        ClassWeights w = unit_weights(static_cast<int>(n.size()));
        w.tag = WeightMode::DRW;
        return w;
    }
    ClassWeights w = rw_weights(n);
    w.tag = WeightMode::DRW;
    return w;
}

ClassWeights weights_for_epoch(const ImbalanceSchedule& s, int epoch) {
    switch (s.mode) {
        case WeightMode::None: return unit_weights(static_cast<int>(s.class_pixels.size()));
        case WeightMode::RW: return rw_weights(s.class_pixels);
        case WeightMode::DRW:
            return drw_weights(s.class_pixels, epoch, s.drw_switch < 0 ? s.e_min : s.drw_switch);
        case WeightMode::PPW: return ppw_weights(s.class_pixels, ppw_beta(epoch, s.e_min, s.e_max));
    }
    return unit_weights(static_cast<int>(s.class_pixels.size()));
}

double beta_for_epoch(const ImbalanceSchedule& s, int epoch) {
    switch (s.mode) {
        case WeightMode::None: return 0.0;
        case WeightMode::RW: return 1.0;
        case WeightMode::DRW:
            return epoch < (s.drw_switch < 0 ? s.e_min : s.drw_switch) ? 0.0 : 1.0;
        case WeightMode::PPW: return ppw_beta(epoch, s.e_min, s.e_max);
    }
    return 0.0;
}

nn::Tensor ce_loss(const nn::Tensor& logits, const nn::LabelBatch& labels,
                   const ClassWeights& weights) {
    const nn::Shape s = logits.shape();
    if (s.n != labels.n || s.h != labels.h || s.w != labels.w)
        throw Error("losses.ce_loss", "logits " + s.str() + " not aligned with labels");
    if (static_cast<int>(weights.omega.size()) != s.c)
        throw Error("losses.ce_loss", "weight count does not match class count");

    const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
    const std::size_t pixels = static_cast<std::size_t>(labels.numel());

    // fused stable CE: save softmax probabilities for backward
    auto probs = std::make_shared<std::vector<double>>(logits.value().size());
    double loss = 0.0;
    for (int n = 0; n < s.n; ++n)
        for (std::size_t i = 0; i < hw; ++i) {
            const int y = labels.labels[static_cast<std::size_t>(n) * hw + i];
            if (y >= s.c)
                throw Error("losses.ce_loss", "label " + std::to_string(y) + " out of range");
            double mx = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < s.c; ++c)
                mx = std::max(mx, logits.value()[(static_cast<std::size_t>(n) * s.c + c) * hw + i]);
            double z = 0.0;
            for (int c = 0; c < s.c; ++c)
                z += std::exp(logits.value()[(static_cast<std::size_t>(n) * s.c + c) * hw + i] - mx);
            const double logz = std::log(z) + mx;
            for (int c = 0; c < s.c; ++c) {
                const std::size_t idx = (static_cast<std::size_t>(n) * s.c + c) * hw + i;
                (*probs)[idx] = std::exp(logits.value()[idx] - logz);
            }
            const double logpy =
                logits.value()[(static_cast<std::size_t>(n) * s.c + y) * hw + i] - logz;
            loss -= weights.omega[y] * logpy;
        }
    loss /= static_cast<double>(pixels);

    auto px = logits.node();
    auto lbl = std::make_shared<std::vector<std::uint8_t>>(labels.labels);
    auto om = std::make_shared<std::vector<double>>(weights.omega);
    return nn::make_op(nn::Shape{1, 1, 1, 1}, {loss}, {logits},
                       [px, probs, lbl, om, s, hw, pixels](nn::detail::Node& self) {
                           px->ensure_grad();
                           const double g = self.grad[0] / static_cast<double>(pixels);
                           for (int n = 0; n < s.n; ++n)
                               for (std::size_t i = 0; i < hw; ++i) {
                                   const int y = (*lbl)[static_cast<std::size_t>(n) * hw + i];
                                   const double wy = (*om)[y];
                                   for (int c = 0; c < s.c; ++c) {
                                       const std::size_t idx =
                                           (static_cast<std::size_t>(n) * s.c + c) * hw + i;
                                       const double delta = (c == y) ? 1.0 : 0.0;
                                       px->grad[idx] += g * wy * ((*probs)[idx] - delta);
                                   }
                               }
                       });
}

std::vector<double> soft_dice_per_class(std::span<const double> probs, const nn::Shape& shape,
                                        const nn::LabelBatch& labels, double eps) {
    const std::size_t hw = static_cast<std::size_t>(shape.h) * shape.w;
    std::vector<double> inter(shape.c, 0.0), psum(shape.c, 0.0), ysum(shape.c, 0.0);
    for (int n = 0; n < shape.n; ++n)
        for (std::size_t i = 0; i < hw; ++i) {
            const int y = labels.labels[static_cast<std::size_t>(n) * hw + i];
            for (int c = 0; c < shape.c; ++c) {
                const double p = probs[(static_cast<std::size_t>(n) * shape.c + c) * hw + i];
                psum[c] += p;
                if (c == y) inter[c] += p;
            }
            ysum[y] += 1.0;
        }
    std::vector<double> dice(shape.c);
    for (int c = 0; c < shape.c; ++c)
        dice[c] = (2.0 * inter[c] + eps) / (psum[c] + ysum[c] + eps);
    return dice;
}

nn::Tensor dice_loss(const nn::Tensor& probs, const nn::LabelBatch& labels, double eps) {
    const nn::Shape s = probs.shape();
    if (s.n != labels.n || s.h != labels.h || s.w != labels.w)
        throw Error("losses.dice_loss", "probs " + s.str() + " not aligned with labels");

    const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
    std::vector<double> inter(s.c, 0.0), psum(s.c, 0.0), ysum(s.c, 0.0);
    for (int n = 0; n < s.n; ++n)
        for (std::size_t i = 0; i < hw; ++i) {
            const int y = labels.labels[static_cast<std::size_t>(n) * hw + i];
            if (y >= s.c) throw Error("losses.dice_loss", "label out of range");
            for (int c = 0; c < s.c; ++c) {
                const double p = probs.value()[(static_cast<std::size_t>(n) * s.c + c) * hw + i];
                psum[c] += p;
                if (c == y) inter[c] += p;
            }
            ysum[y] += 1.0;
        }

    auto numer = std::make_shared<std::vector<double>>(s.c);
    auto denom = std::make_shared<std::vector<double>>(s.c);
    double dice_sum = 0.0;
    for (int c = 0; c < s.c; ++c) {
        (*numer)[c] = 2.0 * inter[c] + eps;
        (*denom)[c] = psum[c] + ysum[c] + eps;
        dice_sum += (*numer)[c] / (*denom)[c];
    }
    const double loss = 1.0 - dice_sum / static_cast<double>(s.c);

    auto px = probs.node();
    auto lbl = std::make_shared<std::vector<std::uint8_t>>(labels.labels);
    return nn::make_op(
        nn::Shape{1, 1, 1, 1}, {loss}, {probs},
        [px, lbl, numer, denom, s, hw](nn::detail::Node& self) {
            px->ensure_grad();
            const double g = self.grad[0] / static_cast<double>(s.c);
            // d(1 - mean dice)/dp = -(2*y*D - N)/D^2 / L
            for (int n = 0; n < s.n; ++n)
                for (std::size_t i = 0; i < hw; ++i) {
                    const int y = (*lbl)[static_cast<std::size_t>(n) * hw + i];
                    for (int c = 0; c < s.c; ++c) {
                        const std::size_t idx = (static_cast<std::size_t>(n) * s.c + c) * hw + i;
                        const double dy = (c == y) ? 2.0 : 0.0;
                        const double d = (*denom)[c];
                        px->grad[idx] += -g * (dy * d - (*numer)[c]) / (d * d);
                    }
                }
        });
}

nn::Tensor total_loss(const nn::Tensor& ce, const nn::Tensor& dice, const nn::Tensor& vqcl) {
    const struct {
        const char* name;
        const nn::Tensor* t;
    } parts[] = {{"ce", &ce}, {"dice", &dice}, {"vqcl", &vqcl}};
    for (const auto& p : parts) {
        if (p.t->numel() != 1) throw Error("losses.total_loss", std::string(p.name) + " not scalar");
        if (!std::isfinite(p.t->item()))
            throw Error("losses.total_loss",
                        std::string("non-finite ") + p.name + " loss (training divergence)");
    }
    return nn::add(nn::add(ce, dice), vqcl);
}

} // namespace vcnet::losses
