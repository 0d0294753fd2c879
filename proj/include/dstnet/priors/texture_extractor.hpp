#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dstnet/color/color_convert.hpp"
#include "dstnet/core/tensor.hpp"

namespace dstnet {

/// Produces texture activations for the guidance stack. Implementations must
/// be deterministic: identical inputs give identical outputs.
class TextureExtractor {
public:
    virtual ~TextureExtractor() = default;

    /// Activations at the extractor's native stride (default stack: 4), shape
    /// {channels(), ceil(H/4), ceil(W/4)}.
    virtual Tensor extract(const Image& img) const = 0;

    virtual int channels() const = 0;
    virtual int stride() const = 0;
};

/// Fixed four-layer conv stack: 3 -> mid -> mid -> out -> out channels, 3x3
/// kernels, strides 1,2,1,2, ReLU after every layer, per-channel input
/// standardization. Weights are frozen: either seeded pseudo-random (He
/// fan-in scaling) or loaded from a serialized array container.
class ConvStackExtractor : public TextureExtractor {
public:
    ConvStackExtractor(int mid_channels, int out_channels, std::uint64_t seed);

    Tensor extract(const Image& img) const override;
    int channels() const override { return out_channels_; }
    int stride() const override { return 4; }

    /// Stable name -> tensor view, for serialization round-trips.
    std::vector<std::pair<std::string, Tensor*>> named_arrays();

    int mid_channels() const { return mid_channels_; }
    std::uint64_t seed() const { return seed_; }

private:
    int mid_channels_;
    int out_channels_;
    std::uint64_t seed_;
    std::vector<Tensor> weights_;  // 4 conv kernels
    std::vector<Tensor> biases_;   // 4 bias vectors
};

}  // namespace dstnet
