#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fumo/image.hpp"

namespace fumo {

using Rgb8 = std::array<std::uint8_t, 3>;

const std::array<Rgb8, 256>& viridis_lut();

// Colorizes map values in [lo, hi] through the viridis table; 3-channel output.
ImageF heatmap(const ScalarMap& map, double lo = 0.0, double hi = 1.0);

// Panels placed left to right on a black canvas, top-aligned. Single-channel
// panels are replicated to gray.
ImageF hstack(const std::vector<ImageF>& panels);

}  // namespace fumo
