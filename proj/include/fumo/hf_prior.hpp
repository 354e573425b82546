#pragma once

#include <vector>

#include "fumo/image.hpp"

namespace fumo {

struct HfPriorParams {
    int levels = 4;
    double clamp_hi = 0.25;
};

// Multi-scale smooth/residual cascade. residuals[i] is the detail removed
// at dilation scales[i] = 2^i; the residuals plus final_smooth telescope
// back to the input.
struct DecompositionResult {
    std::vector<ImageF> residuals;
    ImageF final_smooth;
    std::vector<int> scales;
};

// 3x3 box with taps at {-r, 0, r}^2, each 1/9, replicate border, per channel.
ImageF dilated_smooth(const ImageF& img, int radius);

DecompositionResult decompose(const ImageF& img, int levels);

// Sum of residuals, reduced to one channel by the mean absolute value over
// channels, then clamp_rescale(0, clamp_hi).
ScalarMap hf_prior(const ImageF& img, int levels, double clamp_hi);

inline ScalarMap hf_prior(const ImageF& img, const HfPriorParams& params = {}) {
    return hf_prior(img, params.levels, params.clamp_hi);
}

}  // namespace fumo
