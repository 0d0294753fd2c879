#pragma once

#include <string>

#include "dstnet/color/color_convert.hpp"

namespace dstnet {

/// Decode a PNG or JPEG file (chosen by extension) into an Image; 8-bit
/// channels map to [0, 1] by v / 255. Throws std::runtime_error on failure.
Image load_image(const std::string& path);

/// Encode to PNG or JPEG by extension; values map by round(v * 255).
void save_image(const std::string& path, const Image& img);

}  // namespace dstnet
