#pragma once

#include "dstnet/core/tensor.hpp"

namespace dstnet {

/// RGB image, planar {3, H, W}, every value in [0, 1]. The factory enforces
/// the range and the 8x8 minimum the metric windows and network levels need.
struct Image {
    Tensor rgb;

    static Image from_tensor(Tensor planar);

    int height() const { return rgb.dim(1); }
    int width() const { return rgb.dim(2); }
};

/// CIELAB planes {3, H, W}: L in [0, 100], a/b unbounded but finite.
struct LabImage {
    Tensor lab;

    int height() const { return lab.dim(1); }
    int width() const { return lab.dim(2); }
};

/// Hexcone HSV planes {3, H, W}: hue in radians [0, 2*pi), S and V in [0, 1].
struct HsvImage {
    Tensor hsv;

    int height() const { return hsv.dim(1); }
    int width() const { return hsv.dim(2); }
};

/// sRGB -> linear (gamma 2.4 piecewise) -> XYZ under D65 -> CIELAB.
LabImage srgb_to_lab(const Image& img);

/// Hexcone HSV; achromatic pixels report hue 0.
HsvImage rgb_to_hsv(const Image& img);

/// Analytic inverse of rgb_to_hsv (exact wherever S > 0).
Image hsv_to_rgb(const HsvImage& img);

/// BT.601 luma 0.299 R + 0.587 G + 0.114 B -> {H, W}.
Tensor rgb_to_gray(const Image& img);

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

}  // namespace dstnet
