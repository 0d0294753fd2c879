#pragma once

#include "dstnet/color/color_convert.hpp"
#include "dstnet/core/tensor.hpp"
#include "dstnet/priors/texture_extractor.hpp"

namespace dstnet {

/// Illumination-independent prior features and their fusion. Channel order of
/// f_inv is fixed: [dog, color, tex...].
struct GuidancePack {
    Tensor f_dog;    // {1, H, W} in [0, 1]
    Tensor f_color;  // {1, H, W} in [0, 1]
    Tensor f_tex;    // {C_tex, H, W}
    Tensor f_inv;    // {2 + C_tex, H, W}
};

struct GaussianKernel {
    double sigma = 0.0;
    int size = 0;
    Tensor weights;  // {size, size}, sums to 1
};

inline constexpr double kDogSigma1 = 1.0;
inline constexpr double kDogSigma2 = 1.6;
inline constexpr int kDogKernelSize = 11;  // 2 * ceil(3 * sigma2) + 1

/// Integer-sampled Gaussian taps normalized to sum 1. Rejects even sizes and
/// nonpositive sigma.
GaussianKernel gaussian_kernel(double sigma, int size);

/// Per-image min-max rescale to [0, 1]; inputs with max - min < 1e-8 map to
/// all zeros.
Tensor minmax_norm(const Tensor& x);

/// |L convolved with (G_sigma1 - G_sigma2)|, reflect padded, min-max
/// normalized. L is the {H, W} lightness plane.
Tensor dog_feature(const Tensor& lightness, double sigma1 = kDogSigma1,
                   double sigma2 = kDogSigma2, int size = kDogKernelSize);

/// Min-max normalized chroma magnitude sqrt(a^2 + b^2 + 1e-5).
Tensor color_feature(const LabImage& lab);

/// Extractor activations resized back to the image grid {C_tex, H, W}.
Tensor texture_feature(const Image& img, const TextureExtractor& extractor);

/// Channel concatenation [dog, color, tex] with no reweighting.
GuidancePack fuse_guidance(Tensor f_dog, Tensor f_color, Tensor f_tex);

/// Full pipeline: LAB split, DoG + chroma priors, texture activations, fusion.
GuidancePack compute_guidance(const Image& img, const TextureExtractor& extractor);

}  // namespace dstnet
