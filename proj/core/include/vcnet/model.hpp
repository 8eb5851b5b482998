#pragma once

#include <cstdint>

#include "vcnet/nn.hpp"

namespace vcnet::model {

// Backbone/head sizes. Desk-scale defaults keep the full suite CPU-friendly;
// the paper-scale preset (stride 16, 2048 encoder channels, 128-d embeddings)
// is available via paper_scale().
struct ModelConfig {
    int num_classes = 3;
    int stride = 8;           // encoder output stride s
    int encoder_channels = 64; // C_enc
    int embed_dim = 32;        // D
    int proj_hidden = 0;       // 0 -> max(embed_dim, encoder_channels/4)
    double dropout_p = 0.1;
    double bn_momentum = 0.1;
    std::uint64_t init_seed = 1;

    static ModelConfig paper_scale();
    int resolved_proj_hidden() const;
    bool operator==(const ModelConfig&) const = default;
};

// Encoder-decoder segmentation network with a pluggable-size compact
// DeepLab-style encoder (strided conv stages + residual block + reduced
// atrous pyramid) and a bilinear-upsampling decoder, plus the contrastive
// head's Projection and MLP modules.
class VcNet {
public:
    explicit VcNet(const ModelConfig& config);

    struct ForwardResult {
        nn::Tensor logits;   // (N, L, H, W)
        nn::Tensor features; // (N, C_enc, H/s, W/s)
    };

    // Full-resolution class logits plus stride-s encoder features.
    // H and W must be divisible by the stride.
    ForwardResult forward(const nn::Tensor& images, nn::Mode mode);

    // Projection module: two 1x1 conv+BN+ReLU stages, C_enc -> D channels,
    // spatial size unchanged, outputs nonnegative.
    nn::Tensor project(const nn::Tensor& encoder_features, nn::Mode mode);

    // MLP module: depthwise 1x1 + pointwise 1x1 with a per-pixel linear skip,
    // then dropout (train only) and GELU. Returns the pre-normalization
    // embedding field; normalize with nn::l2_normalize_channels for use in
    // similarity computations.
    nn::Tensor mlp_embed(const nn::Tensor& x3, nn::Mode mode, std::uint64_t dropout_seed = 0);

    const ModelConfig& config() const { return config_; }
    int stride() const { return config_.stride; }

    void collect_state(nn::ParamList& params, nn::BufferList& buffers);

private:
    ModelConfig config_;

    nn::Conv2d stem_;
    nn::BatchNorm2d stem_bn_;
    nn::Conv2d enc1_;
    nn::BatchNorm2d enc1_bn_;
    nn::Conv2d enc2_;
    nn::BatchNorm2d enc2_bn_;
    nn::Conv2d enc3_; // only used when stride == 16
    nn::BatchNorm2d enc3_bn_;
    nn::Conv2d res_a_;
    nn::BatchNorm2d res_a_bn_;
    nn::Conv2d res_b_;
    nn::BatchNorm2d res_b_bn_;
    nn::Conv2d aspp1x1_;
    nn::BatchNorm2d aspp1x1_bn_;
    nn::Conv2d aspp_d2_;
    nn::BatchNorm2d aspp_d2_bn_;
    nn::Conv2d aspp_d4_;
    nn::BatchNorm2d aspp_d4_bn_;
    nn::Conv2d aspp_gap_;
    nn::Conv2d aspp_fuse_;
    nn::BatchNorm2d aspp_fuse_bn_;
    nn::Conv2d classifier_;

    nn::Conv2d proj1_;
    nn::BatchNorm2d proj1_bn_;
    nn::Conv2d proj2_;
    nn::BatchNorm2d proj2_bn_;
    nn::Conv2d mlp_dw_;
    nn::Conv2d mlp_pw_;
    nn::Conv2d mlp_linear_;
};

} // namespace vcnet::model
