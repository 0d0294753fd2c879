#include "dstnet/color/color_convert.hpp"

#include <cmath>

#include "dstnet/core/checks.hpp"
#include "dstnet/core/parallel.hpp"

namespace dstnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

// sRGB transfer function and D65 colorimetry constants.
constexpr double kGammaKnee = 0.04045;
constexpr double kXn = 0.95047, kYn = 1.0, kZn = 1.08883;
constexpr double kLabDelta = 6.0 / 29.0;

double srgb_to_linear(double c) {
    return c <= kGammaKnee ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    return t > kLabDelta * kLabDelta * kLabDelta
               ? std::cbrt(t)
               : t / (3.0 * kLabDelta * kLabDelta) + 4.0 / 29.0;
}

}  // namespace

Image Image::from_tensor(Tensor planar) {
    require(planar.rank() == 3 && planar.dim(0) == 3, "Image: expected 3 x H x W");
    require(planar.dim(1) >= 8 && planar.dim(2) >= 8, "Image: minimum size is 8 x 8");
    for (std::int64_t i = 0; i < planar.numel(); ++i)
        require(planar[i] >= 0.0 && planar[i] <= 1.0 && std::isfinite(planar[i]),
                "Image: values must lie in [0, 1]");
    return Image{std::move(planar)};
}

LabImage srgb_to_lab(const Image& img) {
    const Tensor& x = img.rgb;
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    Tensor out(x.shape());
    parallel_for(plane, [&](std::int64_t p) {
        const double rl = srgb_to_linear(x[p]);
        const double gl = srgb_to_linear(x[plane + p]);
        const double bl = srgb_to_linear(x[2 * plane + p]);
        const double xx = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
        const double yy = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
        const double zz = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
        const double fx = lab_f(xx / kXn);
        const double fy = lab_f(yy / kYn);
        const double fz = lab_f(zz / kZn);
        out[p] = 116.0 * fy - 16.0;
        out[plane + p] = 500.0 * (fx - fy);
        out[2 * plane + p] = 200.0 * (fy - fz);
    });
    return LabImage{std::move(out)};
}

HsvImage rgb_to_hsv(const Image& img) {
    const Tensor& x = img.rgb;
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    Tensor out(x.shape());
    parallel_for(plane, [&](std::int64_t p) {
        const double r = x[p], g = x[plane + p], b = x[2 * plane + p];
        const double mx = std::max(r, std::max(g, b));
        const double mn = std::min(r, std::min(g, b));
        const double chroma = mx - mn;
        double hue = 0.0;
        if (chroma > 0.0) {
            if (mx == r)
                hue = (g - b) / chroma;
            else if (mx == g)
                hue = (b - r) / chroma + 2.0;
            else
                hue = (r - g) / chroma + 4.0;
            hue *= kPi / 3.0;
            if (hue < 0.0) hue += 2.0 * kPi;
            if (hue >= 2.0 * kPi) hue -= 2.0 * kPi;
        }
        out[p] = hue;
        out[plane + p] = mx > 0.0 ? chroma / mx : 0.0;
        out[2 * plane + p] = mx;
    });
    return HsvImage{std::move(out)};
}

Image hsv_to_rgb(const HsvImage& img) {
    const Tensor& x = img.hsv;
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    Tensor out(x.shape());
    parallel_for(plane, [&](std::int64_t p) {
        const double h = x[p], s = x[plane + p], v = x[2 * plane + p];
        const double sector = h / (kPi / 3.0);  // [0, 6)
        const double c = v * s;
        const double frac = sector - 2.0 * std::floor(sector / 2.0);  // sector mod 2
        const double xm = c * (1.0 - std::fabs(frac - 1.0));
        double r = 0.0, g = 0.0, b = 0.0;
        switch (static_cast<int>(sector) % 6) {
            case 0: r = c; g = xm; break;
            case 1: r = xm; g = c; break;
            case 2: g = c; b = xm; break;
            case 3: g = xm; b = c; break;
            case 4: r = xm; b = c; break;
            default: r = c; b = xm; break;
        }
        const double m = v - c;
        out[p] = r + m;
        out[plane + p] = g + m;
        out[2 * plane + p] = b + m;
    });
    return Image{std::move(out)};
}

Tensor rgb_to_gray(const Image& img) {
    const Tensor& x = img.rgb;
    const std::int64_t plane = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    Tensor out({x.dim(1), x.dim(2)});
    parallel_for(plane, [&](std::int64_t p) {
        out[p] = kLumaR * x[p] + kLumaG * x[plane + p] + kLumaB * x[2 * plane + p];
    });
    return out;
}

}  // namespace dstnet
