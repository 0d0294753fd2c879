#pragma once

#include <vector>

#include "dstnet/core/autodiff.hpp"
#include "dstnet/core/tensor.hpp"

namespace dstnet {

// Differentiable tensor operations. Forward kernels are OpenMP-parallel over
// disjoint outputs; backward kernels are written gather-style (parallel over
// the gradient target, serial inner sums), so every result is bitwise
// reproducible for any thread count.

// ---- elementwise ----------------------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div_v(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var relu(const Var& a);
Var gelu(const Var& a);        // exact erf form
Var sigmoid_v(const Var& a);
Var tanh_v(const Var& a);
Var abs_v(const Var& a);       // subgradient 0 at the origin
Var square(const Var& a);
Var pow_const(const Var& a, double p);   // requires a > 0
Var huber(const Var& a, double delta);   // d^2/(2*delta) inside, |d|-delta/2 outside
Var sum_all(const Var& a);     // -> shape {1}
Var mean_all(const Var& a);    // -> shape {1}

// ---- shape / resampling ---------------------------------------------------
Var concat_ch(const std::vector<Var>& parts);          // C_i x H x W -> sum(C_i) x H x W
Var slice_ch(const Var& x, int c0, int c1);            // channels [c0, c1)
Var pad_reflect(const Var& x, int top, int bottom, int left, int right);
Var crop(const Var& x, int top, int left, int h, int w);
Var upsample_bilinear2x(const Var& x);                 // half-pixel centers, edge clamp
Var avg_pool2(const Var& x);                           // 2x2 stride-2 mean, floor sizes
Var tile_mean(const Var& x, int tile);                 // 1xHxW -> 1x ceil(H/t) x ceil(W/t), partial tiles kept

// ---- convolution ----------------------------------------------------------
/// Cross-correlation with zero padding. x: Ci x H x W, w: Co x Ci x kh x kw,
/// optional bias {Co} (pass undefined Var for none).
Var conv2d(const Var& x, const Var& w, const Var& bias, int stride, int pad);

/// Volume correlation treating C x H x W as a single-channel 3-D grid.
/// w: kc x kh x kw (odd extents), zero padding keeps the input shape.
Var plane_conv3(const Var& x, const Var& w);

// ---- normalization / attention -------------------------------------------
Var softmax_ch(const Var& x);                          // softmax over dim 0 of C x H x W
Var layernorm_ch(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var global_avg(const Var& x);                          // C x H x W -> {C}
Var global_max(const Var& x);                          // first-max ties
Var channel_mean_map(const Var& x);                    // -> 1 x H x W
Var channel_max_map(const Var& x);
Var linear(const Var& w, const Var& x, const Var& bias);  // w: {out,in}, x: {in}
Var mul_channels(const Var& x, const Var& s);          // s: {C} broadcast over space
Var add_channels(const Var& x, const Var& s);          // s: {C} broadcast over space
Var mul_spatial(const Var& x, const Var& m);           // m: 1 x H x W broadcast over channels

struct AttnProbe {
    Tensor attention;  // {nwin, n, n} rows sum to 1
};

/// Windowed single-head cross attention. Queries come from x_img, keys and
/// values from x_feat; the window grid partitions H x W (inputs are
/// reflect-padded to a multiple of `window` and the output cropped back).
/// Scale is 1/sqrt(C). Output = x_img + softmax(Q K^T / sqrt(C)) V.
Var cross_attention(const Var& x_img, const Var& x_feat, const Var& wq, const Var& wk,
                    const Var& wv, int window, AttnProbe* probe = nullptr);

// ---- color ----------------------------------------------------------------
/// 3 x H x W weighted channel sum -> 1 x H x W (BT.601 luma weights live in
/// color_convert; callers pass them in).
Var channel_weighted_sum(const Var& x, const std::vector<double>& weights);

/// Hexcone HSV from RGB planes, hue in radians [0, 2*pi). Achromatic pixels
/// report hue 0 with zero hue gradient.
Var rgb_to_hsv_v(const Var& rgb);

/// Elementwise min(|a-b|, 2*pi - |a-b|) for angles in [0, 2*pi).
Var hue_circular_distance(const Var& a, const Var& b);

}  // namespace dstnet
