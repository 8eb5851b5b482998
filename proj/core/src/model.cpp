#include "vcnet/model.hpp"

#include <algorithm>

namespace vcnet::model {

ModelConfig ModelConfig::paper_scale() {
    ModelConfig c;
    c.stride = 16;
    c.encoder_channels = 2048;
    c.embed_dim = 128;
    return c;
}

int ModelConfig::resolved_proj_hidden() const {
    if (proj_hidden > 0) return proj_hidden;
    return std::max(embed_dim, encoder_channels / 4);
}

VcNet::VcNet(const ModelConfig& config) : config_(config) {
    if (config.stride != 8 && config.stride != 16)
        throw Error("model.VcNet", "stride must be 8 or 16");
    if (config.encoder_channels % 4 != 0)
        throw Error("model.VcNet", "encoder_channels must be divisible by 4");

    Rng rng(derive_seed(config.init_seed, "model-init"));
    const int w = std::max(8, config.encoder_channels / 4); // stem width
    const int c = config.encoder_channels;
    const int q = c / 4; // per-branch pyramid width
    const double bm = config.bn_momentum;

    stem_ = nn::Conv2d(3, w, 3, 2, 1, rng);
    stem_bn_ = nn::BatchNorm2d(w, bm);
    enc1_ = nn::Conv2d(w, 2 * w, 3, 2, 1, rng);
    enc1_bn_ = nn::BatchNorm2d(2 * w, bm);
    enc2_ = nn::Conv2d(2 * w, c, 3, 2, 1, rng);
    enc2_bn_ = nn::BatchNorm2d(c, bm);
    if (config.stride == 16) {
        enc3_ = nn::Conv2d(c, c, 3, 2, 1, rng);
        enc3_bn_ = nn::BatchNorm2d(c, bm);
    }
    res_a_ = nn::Conv2d(c, c, 3, 1, 1, rng);
    res_a_bn_ = nn::BatchNorm2d(c, bm);
    res_b_ = nn::Conv2d(c, c, 3, 1, 1, rng);
    res_b_bn_ = nn::BatchNorm2d(c, bm);

    aspp1x1_ = nn::Conv2d(c, q, 1, 1, 0, rng);
    aspp1x1_bn_ = nn::BatchNorm2d(q, bm);
    aspp_d2_ = nn::Conv2d(c, q, 3, 1, 2, rng, /*dilation=*/2);
    aspp_d2_bn_ = nn::BatchNorm2d(q, bm);
    aspp_d4_ = nn::Conv2d(c, q, 3, 1, 4, rng, /*dilation=*/4);
    aspp_d4_bn_ = nn::BatchNorm2d(q, bm);
    aspp_gap_ = nn::Conv2d(c, q, 1, 1, 0, rng);
    aspp_fuse_ = nn::Conv2d(4 * q, c, 1, 1, 0, rng);
    aspp_fuse_bn_ = nn::BatchNorm2d(c, bm);
    classifier_ = nn::Conv2d(c, config.num_classes, 1, 1, 0, rng);

    const int ph = config.resolved_proj_hidden();
    const int d = config.embed_dim;
    proj1_ = nn::Conv2d(c, ph, 1, 1, 0, rng);
    proj1_bn_ = nn::BatchNorm2d(ph, bm);
    proj2_ = nn::Conv2d(ph, d, 1, 1, 0, rng);
    proj2_bn_ = nn::BatchNorm2d(d, bm);
    mlp_dw_ = nn::Conv2d(d, d, 1, 1, 0, rng, 1, /*groups=*/d);
    mlp_pw_ = nn::Conv2d(d, d, 1, 1, 0, rng);
    mlp_linear_ = nn::Conv2d(d, d, 1, 1, 0, rng);
}

VcNet::ForwardResult VcNet::forward(const nn::Tensor& images, nn::Mode mode) {
    const nn::Shape s = images.shape();
    if (s.c != 3)
        throw Error("model.forward", "expected 3-channel input, got " + std::to_string(s.c));
    if (s.h % config_.stride != 0 || s.w % config_.stride != 0)
        throw Error("model.forward", "input dims " + std::to_string(s.h) + "x" +
                                         std::to_string(s.w) + " must be multiples of stride " +
                                         std::to_string(config_.stride));

    nn::Tensor x = nn::relu(stem_bn_.forward(stem_.forward(images), mode));
    x = nn::relu(enc1_bn_.forward(enc1_.forward(x), mode));
    x = nn::relu(enc2_bn_.forward(enc2_.forward(x), mode));
    if (config_.stride == 16) x = nn::relu(enc3_bn_.forward(enc3_.forward(x), mode));

    // one residual refinement block at final stride
    nn::Tensor r = nn::relu(res_a_bn_.forward(res_a_.forward(x), mode));
    r = res_b_bn_.forward(res_b_.forward(r), mode);
    x = nn::relu(nn::add(x, r));

    // reduced atrous pyramid with a global-context branch
    nn::Tensor b0 = nn::relu(aspp1x1_bn_.forward(aspp1x1_.forward(x), mode));
    nn::Tensor b1 = nn::relu(aspp_d2_bn_.forward(aspp_d2_.forward(x), mode));
    nn::Tensor b2 = nn::relu(aspp_d4_bn_.forward(aspp_d4_.forward(x), mode));
    nn::Tensor b3 = nn::relu(aspp_gap_.forward(nn::global_avg_pool(x)));
    b3 = nn::broadcast_hw(b3, x.shape().h, x.shape().w);
    nn::Tensor fused = nn::concat_channels({b0, b1, b2, b3});
    nn::Tensor features = nn::relu(aspp_fuse_bn_.forward(aspp_fuse_.forward(fused), mode));

    nn::Tensor logits = nn::upsample_bilinear(classifier_.forward(features), config_.stride);
    return {logits, features};
}

nn::Tensor VcNet::project(const nn::Tensor& encoder_features, nn::Mode mode) {
    if (encoder_features.shape().c != config_.encoder_channels)
        throw Error("model.project",
                    "expected " + std::to_string(config_.encoder_channels) + " channels, got " +
                        std::to_string(encoder_features.shape().c));
    nn::Tensor x = nn::relu(proj1_bn_.forward(proj1_.forward(encoder_features), mode));
    return nn::relu(proj2_bn_.forward(proj2_.forward(x), mode));
}

nn::Tensor VcNet::mlp_embed(const nn::Tensor& x3, nn::Mode mode, std::uint64_t dropout_seed) {
    if (x3.shape().c != config_.embed_dim)
        throw Error("model.mlp_embed", "expected " + std::to_string(config_.embed_dim) +
                                           " channels, got " + std::to_string(x3.shape().c));
    nn::Tensor dsc = mlp_pw_.forward(mlp_dw_.forward(x3));
    nn::Tensor skip = mlp_linear_.forward(x3);
    nn::Tensor pre = nn::add(dsc, skip);
    return nn::gelu(nn::dropout(pre, config_.dropout_p, mode, dropout_seed));
}

void VcNet::collect_state(nn::ParamList& params, nn::BufferList& buffers) {
    stem_.collect("stem", params);
    stem_bn_.collect("stem_bn", params, buffers);
    enc1_.collect("enc1", params);
    enc1_bn_.collect("enc1_bn", params, buffers);
    enc2_.collect("enc2", params);
    enc2_bn_.collect("enc2_bn", params, buffers);
    if (config_.stride == 16) {
        enc3_.collect("enc3", params);
        enc3_bn_.collect("enc3_bn", params, buffers);
    }
    res_a_.collect("res_a", params);
    res_a_bn_.collect("res_a_bn", params, buffers);
    res_b_.collect("res_b", params);
    res_b_bn_.collect("res_b_bn", params, buffers);
    aspp1x1_.collect("aspp1x1", params);
    aspp1x1_bn_.collect("aspp1x1_bn", params, buffers);
    aspp_d2_.collect("aspp_d2", params);
    aspp_d2_bn_.collect("aspp_d2_bn", params, buffers);
    aspp_d4_.collect("aspp_d4", params);
    aspp_d4_bn_.collect("aspp_d4_bn", params, buffers);
    aspp_gap_.collect("aspp_gap", params);
    aspp_fuse_.collect("aspp_fuse", params);
    aspp_fuse_bn_.collect("aspp_fuse_bn", params, buffers);
    classifier_.collect("classifier", params);
    proj1_.collect("proj1", params);
    proj1_bn_.collect("proj1_bn", params, buffers);
    proj2_.collect("proj2", params);
    proj2_bn_.collect("proj2_bn", params, buffers);
    mlp_dw_.collect("mlp_dw", params);
    mlp_pw_.collect("mlp_pw", params);
    mlp_linear_.collect("mlp_linear", params);
}

} // namespace vcnet::model
