#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vcnet/nn.hpp"

namespace vcnet::losses {

enum class WeightMode { None, RW, DRW, PPW };

std::string to_string(WeightMode m);
WeightMode weight_mode_from_string(const std::string& s);

struct ClassWeights {
    std::vector<double> omega; // one positive weight per class
    WeightMode tag = WeightMode::None;
    double beta = 0.0; // exponent used (PPW); 1 for RW stage, 0 for unit
};

// Phased schedule parameters plus the training-split class pixel counts n_i.
struct ImbalanceSchedule {
    WeightMode mode = WeightMode::None;
    int e_min = 100;
    int e_max = 200;
    int drw_switch = -1; // -1 -> e_min
    std::vector<std::int64_t> class_pixels;
};

ClassWeights unit_weights(int num_classes);

// omega_i = 1/n_i, rescaled to mean 1 so the CE term keeps its magnitude.
ClassWeights rw_weights(std::span<const std::int64_t> n);

// 0 below e_min, ((E-e_min)/(e_max-e_min))^2 inside, 1 above e_max.
double ppw_beta(int epoch, int e_min, int e_max);

// omega_i = (1/n_i)^beta, rescaled to mean 1.
ClassWeights ppw_weights(std::span<const std::int64_t> n, double beta);

// Unit weights before the switch epoch, rw_weights afterwards.
ClassWeights drw_weights(std::span<const std::int64_t> n, int epoch, int e_switch);

ClassWeights weights_for_epoch(const ImbalanceSchedule& s, int epoch);
double beta_for_epoch(const ImbalanceSchedule& s, int epoch);

// Mean over pixels of omega_y * (-log softmax(logits)_y); stable log-sum-exp.
nn::Tensor ce_loss(const nn::Tensor& logits, const nn::LabelBatch& labels,
                   const ClassWeights& weights);

// Per-class soft Dice on probabilities vs one-hot labels with epsilon
// smoothing; value layout is one dice per class.
std::vector<double> soft_dice_per_class(std::span<const double> probs, const nn::Shape& shape,
                                        const nn::LabelBatch& labels, double eps = 1e-6);

// 1 - macro-average soft Dice over all classes. `probs` must be a channel
// softmax (see nn::softmax_channels).
nn::Tensor dice_loss(const nn::Tensor& probs, const nn::LabelBatch& labels, double eps = 1e-6);

// Unweighted sum of the three terms; rejects non-finite inputs naming the
// offending component.
nn::Tensor total_loss(const nn::Tensor& ce, const nn::Tensor& dice, const nn::Tensor& vqcl);

} // namespace vcnet::losses
