#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "wavenet/tensor.hpp"

namespace wavenet {

/// Min-max scales a plane to 0..255. A constant plane maps to 128.
std::vector<std::uint8_t> to_gray8(const Plane& plane);

/// Binary P5 portable graymap with maxval 255.
void write_pgm(const std::filesystem::path& path, const Plane& plane);

}  // namespace wavenet
