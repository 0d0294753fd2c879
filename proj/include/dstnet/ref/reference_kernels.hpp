#pragma once

#include <vector>

#include "dstnet/core/tensor.hpp"

namespace dstnet::ref {

// Serial reference kernels: plain nested loops over the textbook formulas,
// no OpenMP, no shared code with the production implementations. Tests use
// them as oracles and bench/ measures the production speedup against them.

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad);

/// Same-size volume correlation of a C x H x W grid with an odd Kc x Kh x Kw
/// kernel, zero padded on every axis.
Tensor plane_conv3(const Tensor& x, const Tensor& w);

/// Windowed single-head cross attention; queries from x_img, keys/values from
/// x_feat, scale 1/sqrt(C), residual added, reflect pad to the window grid.
/// When probs != nullptr the {nwin, n, n} softmax rows are written there.
Tensor cross_attention(const Tensor& x_img, const Tensor& x_feat, const Tensor& wq,
                       const Tensor& wk, const Tensor& wv, int window,
                       Tensor* probs = nullptr);

Tensor pad_reflect(const Tensor& x, int top, int bottom, int left, int right);
Tensor upsample_bilinear2x(const Tensor& x);
Tensor avg_pool2(const Tensor& x);
Tensor tile_mean(const Tensor& x, int tile);
Tensor softmax_ch(const Tensor& x);
Tensor layernorm_ch(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    double eps = 1e-5);
Tensor rgb_to_hsv(const Tensor& rgb);

/// 2-D Gaussian tap table, size x size, normalized to sum 1.
Tensor gaussian_kernel(int size, double sigma);

/// Gaussian blur with reflect padding (odd kernel).
Tensor gaussian_blur(const Tensor& x, int size, double sigma);

}  // namespace dstnet::ref
