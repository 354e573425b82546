#pragma once

#include <vector>

#include "fumo/image.hpp"
#include "fumo/severity.hpp"

namespace fumo {

struct PatchGrid {
    int patch_size = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> scores;  // rows x cols, row-major, each in [1,5]
    std::vector<SeverityDistribution> distributions;

    double score(int row, int col) const { return scores[static_cast<std::size_t>(row) * cols + col]; }
};

struct GuidedFilterParams {
    int radius = 8;
    double epsilon = 1e-2;
    double pre_blur_sigma = 1.0;

    void validate() const;
};

struct IntensityPriorParams {
    int patch_size = 0;  // 0 selects adaptive_patch_size
    double boost_factor = 1.5;
    double boost_cap = 5.0;
    int gf_radius = 0;  // 0 selects patch_size / 2
    double gf_epsilon = 1e-2;
    double pre_blur_sigma = 1.0;
    double clamp_lo = 1.0;
    double clamp_hi = 5.0;
    int jobs = 1;

    void validate() const;
};

// Everything the prior is assembled from, kept for inspection and dumps.
struct IntensityPriorResult {
    PatchGrid grid;
    std::vector<BBox> boxes;
    ScalarMap severity;  // S
    ScalarMap boosted;   // S~
    ScalarMap filtered;  // guided filter output before normalization
    ScalarMap prior;     // P_int in [0,1]
};

// clamp(round(min(H, W) / 8), 32, 224)
int adaptive_patch_size(int height, int width);

// Scores ceil(H/a) x ceil(W/a) non-overlapping tiles; edge tiles keep their
// smaller size. Tiles are scored on up to `jobs` threads.
PatchGrid partition_and_score(const ImageF& img, const Scorer& scorer, int patch_size, int jobs = 1);

ScalarMap broadcast_scores(const PatchGrid& grid, int height, int width);

// Pixels whose centre lies inside any box become min(S * factor, cap).
ScalarMap apply_box_boost(const ScalarMap& severity, const std::vector<BBox>& boxes, double factor, double cap);

// Edge-preserving filter of `input` steered by `guide` (He et al.), box
// windows of radius r with replicate borders, O(1) per pixel.
ScalarMap guided_filter(const ScalarMap& input, const ScalarMap& guide, int radius, double epsilon);

inline ScalarMap guided_filter(const ScalarMap& input, const ScalarMap& guide, const GuidedFilterParams& params) {
    params.validate();
    return guided_filter(input, guide, params.radius, params.epsilon);
}

// Grayscale plus Gaussian pre-blur.
ScalarMap make_guide(const ImageF& img, double pre_blur_sigma);

IntensityPriorResult compute_intensity_prior(const ImageF& img, const Scorer& scorer,
                                             const IntensityPriorParams& params = {});

inline ScalarMap intensity_prior(const ImageF& img, const Scorer& scorer, const IntensityPriorParams& params = {}) {
    return compute_intensity_prior(img, scorer, params).prior;
}

}  // namespace fumo
