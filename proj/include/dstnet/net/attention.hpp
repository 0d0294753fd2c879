#pragma once

#include "dstnet/core/autodiff.hpp"
#include "dstnet/core/ops.hpp"
#include "dstnet/core/rng.hpp"

namespace dstnet {

/// Projection triple for single-head cross attention. The scaling denominator
/// d_k equals the channel width (the factories enforce it).
struct AttentionParams {
    Var w_q;  // {C, C}
    Var w_k;  // {C, C}
    Var w_v;  // {C, C}
    double d_k = 0.0;
};

/// Channel-recalibration parameters: bias-free two-layer MLP shared by the
/// pooled descriptors, plus the layernorm affine pair.
struct LcaParams {
    Var mlp_w1;    // {C / r, C}
    Var mlp_w2;    // {C, C / r}
    Var ln_gamma;  // {C}
    Var ln_beta;   // {C}
    int reduction = 4;
};

struct TfebParams {
    AttentionParams attn;
    LcaParams lca;
    int window = 16;
};

AttentionParams make_attention_params(int channels, Rng& rng);
LcaParams make_lca_params(int channels, int reduction, Rng& rng);
TfebParams make_tfeb_params(int channels, int window, int reduction, Rng& rng);

/// Windowed cross attention with the module's parameter pack: queries from
/// x_img, keys/values from x_feat, residual into x_img.
Var cross_attention(const Var& x_img, const Var& x_feat, const AttentionParams& p, int window,
                    AttnProbe* probe = nullptr);

/// Channel recalibration: out = LN(x) * sigmoid(MLP(avg pool) + MLP(max pool))
/// with the mask broadcast over space.
Var lca(const Var& x, const LcaParams& p);

/// Transformer feature-extraction block: cross attention then channel
/// recalibration. Shape-preserving.
Var tfeb(const Var& x_img, const Var& x_feat, const TfebParams& p, AttnProbe* probe = nullptr);

}  // namespace dstnet
