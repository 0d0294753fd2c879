#pragma once

#include <utility>
#include <vector>

#include "dstnet/core/autodiff.hpp"
#include "dstnet/core/ops.hpp"
#include "dstnet/core/rng.hpp"

namespace dstnet {

/// Fixed pseudo-3D derivative stencils over the (channel, height, width)
/// volume: 1-D second differences and separable 3x3x3 Sobel kernels, one per
/// axis (x = width, y = height, z = channel). Not learned.
struct GradientStencils {
    Tensor lap_x, lap_y, lap_z;  // [1,-2,1] along one axis
    Tensor sob_x, sob_y, sob_z;  // derivative [-1,0,1], smoothing [1,2,1] twice
};

GradientStencils make_gradient_stencils();

/// One pseudo-3D residual block: a k x k x k volume conv decomposed into
/// three orthogonal plane convolutions plus an origin projection, fused by a
/// 3x3 2-D conv and a residual connection.
struct P3dKernels {
    Var k_ch;    // {k,k,1} over (channel,height)
    Var k_cw;    // {k,1,k} over (channel,width)
    Var k_hw;    // {1,k,k} over (height,width)
    Var k_o;     // {1,1,1} origin projection
    Var conv_w;  // {C,C,3,3} channel-mixing conv applied to the plane sum
    Var conv_b;  // {C}
    int scale = 1;
};

P3dKernels make_p3d_kernels(int channels, int scale, Rng& rng);

/// Five-branch attention fusion: local + global context, channel attention
/// followed by spatial attention, per-branch sigmoid gates, and a softmax
/// mixture across branches.
struct MaffParams {
    Var phi_local_w, phi_local_b;    // 3x3 conv on the branch sum
    Var phi_global_w, phi_global_b;  // linear map on the pooled descriptor
    Var se_w1, se_w2;                // channel-attention bottleneck
    Var spa_w, spa_b;                // 7x7 conv on stacked mean/max maps
    std::vector<Var> rep_w, rep_b;   // five per-branch 1x1 gate convs
    Var psi_w, psi_b;                // 1x1 conv to five mixture logits
    Var out_w, out_b;                // 3x3 output conv
};

MaffParams make_maff_params(int channels, Rng& rng, int reduction = 4);

struct MsfbParams {
    GradientStencils stencils;
    std::vector<P3dKernels> scales;  // k in {1,3,5,7,9}; shared by both stages
    MaffParams maff1, maff2, maff3;
    Var res_w, res_b;  // 1x1 residual conv on the block input
};

MsfbParams make_msfb_params(int channels, Rng& rng);

/// Snapshot of the hierarchical stages, for structural tests.
struct MsfbProbe {
    Tensor f_lap, f_sob;
    Tensor h1, h2;
    Tensor stage1_input, stage2_input;  // what the five scale branches saw
};

/// Gradient injection: per-axis volume convolution, absolute value, sum over
/// the three axes, GELU. Returns (f_lap, f_sob) at the input shape.
std::pair<Var, Var> p3d_gradients(const Var& x, const GradientStencils& s);

Var p3d_block(const Var& x, const P3dKernels& k);

/// branches must hold exactly five equal-shape maps. When omega_probe is set
/// the {5,H,W} softmax mixture weights are written there.
Var maff(const std::vector<Var>& branches, const MaffParams& p,
         Tensor* omega_probe = nullptr);

Var msfb_forward(const Var& x, const MsfbParams& p, MsfbProbe* probe = nullptr);

}  // namespace dstnet
