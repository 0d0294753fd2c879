#include "dstnet/net/attention.hpp"

#include <cmath>

#include "dstnet/core/checks.hpp"

namespace dstnet {

namespace {

// Fan-in-scaled uniform draws, the one init rule used for every trainable
// weight so fixed seeds reproduce exactly.
Tensor fan_in_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
    const double limit = std::sqrt(3.0 / fan_in);
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
}

}  // namespace

AttentionParams make_attention_params(int channels, Rng& rng) {
    require(channels >= 1, "make_attention_params: bad channel count");
    AttentionParams p;
    p.w_q = Var::leaf(fan_in_uniform({channels, channels}, channels, rng), true);
    p.w_k = Var::leaf(fan_in_uniform({channels, channels}, channels, rng), true);
    p.w_v = Var::leaf(fan_in_uniform({channels, channels}, channels, rng), true);
    p.d_k = static_cast<double>(channels);
    return p;
}

LcaParams make_lca_params(int channels, int reduction, Rng& rng) {
    require(reduction >= 1 && channels % reduction == 0 && channels / reduction >= 1,
            "make_lca_params: reduction must divide the channel count");
    const int mid = channels / reduction;
    LcaParams p;
    p.mlp_w1 = Var::leaf(fan_in_uniform({mid, channels}, channels, rng), true);
    p.mlp_w2 = Var::leaf(fan_in_uniform({channels, mid}, mid, rng), true);
    p.ln_gamma = Var::leaf(Tensor::full({channels}, 1.0), true);
    p.ln_beta = Var::leaf(Tensor::zeros({channels}), true);
    p.reduction = reduction;
    return p;
}

TfebParams make_tfeb_params(int channels, int window, int reduction, Rng& rng) {
    TfebParams p;
    p.attn = make_attention_params(channels, rng);
    p.lca = make_lca_params(channels, reduction, rng);
    p.window = window;
    return p;
}

Var cross_attention(const Var& x_img, const Var& x_feat, const AttentionParams& p, int window,
                    AttnProbe* probe) {
    require(p.d_k == static_cast<double>(x_img.val().dim(0)),
            "cross_attention: scaling factor must equal the channel width");
    return cross_attention(x_img, x_feat, p.w_q, p.w_k, p.w_v, window, probe);
}

Var lca(const Var& x, const LcaParams& p) {
    const int mid = p.mlp_w1.val().dim(0);
    const int c = p.mlp_w1.val().dim(1);
    require(x.val().dim(0) == c, "lca: channel mismatch");
    const Var no_bias_mid = Var::leaf(Tensor::zeros({mid}));
    const Var no_bias_out = Var::leaf(Tensor::zeros({c}));
    auto mlp = [&](const Var& pooled) {
        return linear(p.mlp_w2, relu(linear(p.mlp_w1, pooled, no_bias_mid)), no_bias_out);
    };
    const Var mask = sigmoid_v(add(mlp(global_avg(x)), mlp(global_max(x))));
    return mul_channels(layernorm_ch(x, p.ln_gamma, p.ln_beta), mask);
}

Var tfeb(const Var& x_img, const Var& x_feat, const TfebParams& p, AttnProbe* probe) {
    return lca(cross_attention(x_img, x_feat, p.attn, p.window, probe), p.lca);
}

}  // namespace dstnet
