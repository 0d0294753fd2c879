#include "dstnet/priors/texture_extractor.hpp"

#include <cmath>

#include "dstnet/core/autodiff.hpp"
#include "dstnet/core/checks.hpp"
#include "dstnet/core/ops.hpp"
#include "dstnet/core/parallel.hpp"
#include "dstnet/core/rng.hpp"

namespace dstnet {

namespace {

// Common per-channel input standardization (mean/std of the usual natural
// image statistics the stack was designed around).
constexpr double kMean[3] = {0.485, 0.456, 0.406};
constexpr double kStd[3] = {0.229, 0.224, 0.225};

Tensor he_init(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    const double fan_in =
        static_cast<double>(t.dim(1)) * t.dim(2) * t.dim(3);
    const double sd = std::sqrt(2.0 / fan_in);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal() * sd;
    return t;
}

}  // namespace

ConvStackExtractor::ConvStackExtractor(int mid_channels, int out_channels, std::uint64_t seed)
    : mid_channels_(mid_channels), out_channels_(out_channels), seed_(seed) {
    require(mid_channels >= 1 && out_channels >= 1, "ConvStackExtractor: bad channel counts");
    Rng rng(seed);
    const int dims[5] = {3, mid_channels, mid_channels, out_channels, out_channels};
    for (int layer = 0; layer < 4; ++layer) {
        weights_.push_back(he_init({dims[layer + 1], dims[layer], 3, 3}, rng));
        biases_.push_back(Tensor::zeros({dims[layer + 1]}));
    }
}

Tensor ConvStackExtractor::extract(const Image& img) const {
    ad::NoGradGuard guard;
    const std::int64_t plane =
        static_cast<std::int64_t>(img.height()) * img.width();
    Tensor standardized(img.rgb.shape());
    parallel_for(standardized.numel(), [&](std::int64_t i) {
        const int c = static_cast<int>(i / plane);
        standardized[i] = (img.rgb[i] - kMean[c]) / kStd[c];
    });
    Var x = Var::leaf(std::move(standardized));
    const int strides[4] = {1, 2, 1, 2};
    for (int layer = 0; layer < 4; ++layer) {
        x = conv2d(x, Var::leaf(weights_[static_cast<size_t>(layer)]),
                   Var::leaf(biases_[static_cast<size_t>(layer)]), strides[layer], 1);
        x = relu(x);
    }
    return x.val();
}

std::vector<std::pair<std::string, Tensor*>> ConvStackExtractor::named_arrays() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (size_t i = 0; i < weights_.size(); ++i) {
        out.push_back({"tex.conv" + std::to_string(i) + ".w", &weights_[i]});
        out.push_back({"tex.conv" + std::to_string(i) + ".b", &biases_[i]});
    }
    return out;
}

}  // namespace dstnet
