#include "dstnet/priors/guidance.hpp"

#include <cmath>

#include "dstnet/core/autodiff.hpp"
#include "dstnet/core/checks.hpp"
#include "dstnet/core/ops.hpp"
#include "dstnet/core/parallel.hpp"

namespace dstnet {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNormEps = 1e-8;

// Reflect without repeating the edge sample, defined for any index.
int mirror(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

}  // namespace

GaussianKernel gaussian_kernel(double sigma, int size) {
    require(sigma > 0.0, "gaussian_kernel: sigma must be positive");
    require(size >= 3 && size % 2 == 1, "gaussian_kernel: size must be odd and >= 3");
    const int r = size / 2;
    Tensor w({size, size});
    const double norm = 1.0 / (2.0 * kPi * sigma * sigma);
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x)
            w.at(y + r, x + r) = norm * std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
    const double total = w.sum();
    w.scale_(1.0 / total);
    return GaussianKernel{sigma, size, std::move(w)};
}

Tensor minmax_norm(const Tensor& x) {
    const double lo = x.min();
    const double hi = x.max();
    Tensor out(x.shape());
    if (hi - lo < kNormEps) {
        out.fill(0.0);
        return out;
    }
    const double inv = 1.0 / (hi - lo);
    parallel_for(x.numel(), [&](std::int64_t i) { out[i] = (x[i] - lo) * inv; });
    return out;
}

Tensor dog_feature(const Tensor& lightness, double sigma1, double sigma2, int size) {
    require(lightness.rank() == 2, "dog_feature: expected {H, W} lightness plane");
    require(sigma1 < sigma2, "dog_feature: requires sigma1 < sigma2");
    const int h = lightness.dim(0), w = lightness.dim(1);
    const GaussianKernel g1 = gaussian_kernel(sigma1, size);
    const GaussianKernel g2 = gaussian_kernel(sigma2, size);
    const int r = size / 2;
    Tensor response({1, h, w});
    parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t p) {
        const int y = static_cast<int>(p / w);
        const int x = static_cast<int>(p % w);
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                acc += lightness.at(mirror(y + dy, h), mirror(x + dx, w)) *
                       (g1.weights.at(dy + r, dx + r) - g2.weights.at(dy + r, dx + r));
        response[p] = std::fabs(acc);
    });
    return minmax_norm(response);
}

Tensor color_feature(const LabImage& lab) {
    const int h = lab.height(), w = lab.width();
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    Tensor chroma({1, h, w});
    parallel_for(plane, [&](std::int64_t p) {
        const double a = lab.lab[plane + p];
        const double b = lab.lab[2 * plane + p];
        chroma[p] = std::sqrt(a * a + b * b + 1e-5);
    });
    return minmax_norm(chroma);
}

Tensor texture_feature(const Image& img, const TextureExtractor& extractor) {
    ad::NoGradGuard guard;
    Tensor feat = extractor.extract(img);
    // Bilinear x2 per halving stage, then crop the ceil-rounded excess.
    Var up = Var::leaf(std::move(feat));
    for (int s = extractor.stride(); s > 1; s /= 2) {
        require(s % 2 == 0, "texture_feature: extractor stride must be a power of two");
        up = upsample_bilinear2x(up);
    }
    require(up.val().dim(1) >= img.height() && up.val().dim(2) >= img.width(),
            "texture_feature: upsampled activation smaller than the image");
    if (up.val().dim(1) != img.height() || up.val().dim(2) != img.width())
        up = crop(up, 0, 0, img.height(), img.width());
    return up.val();
}

GuidancePack fuse_guidance(Tensor f_dog, Tensor f_color, Tensor f_tex) {
    require(f_dog.rank() == 3 && f_dog.dim(0) == 1, "fuse_guidance: f_dog must be 1 x H x W");
    require(f_color.same_shape(f_dog), "fuse_guidance: f_color shape mismatch");
    require(f_tex.rank() == 3 && f_tex.dim(1) == f_dog.dim(1) && f_tex.dim(2) == f_dog.dim(2),
            "fuse_guidance: f_tex spatial shape mismatch");
    ad::NoGradGuard guard;
    Tensor f_inv = concat_ch({Var::leaf(f_dog), Var::leaf(f_color), Var::leaf(f_tex)}).val();
    return GuidancePack{std::move(f_dog), std::move(f_color), std::move(f_tex),
                        std::move(f_inv)};
}

GuidancePack compute_guidance(const Image& img, const TextureExtractor& extractor) {
    const LabImage lab = srgb_to_lab(img);
    const int h = img.height(), w = img.width();
    Tensor lightness({h, w});
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    parallel_for(plane, [&](std::int64_t p) { lightness[p] = lab.lab[p]; });
    Tensor dog = dog_feature(lightness);
    Tensor color = color_feature(lab);
    Tensor tex = texture_feature(img, extractor);
    return fuse_guidance(std::move(dog), std::move(color), std::move(tex));
}

}  // namespace dstnet
