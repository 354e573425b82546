#include "fumo/hf_prior.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fumo {

ImageF dilated_smooth(const ImageF& img, int radius) {
    require(radius >= 1, "dilation radius must be >= 1, got " + std::to_string(radius));
    const int h = img.height();
    const int w = img.width();
    const int nc = img.channels();
    ImageF out(h, w, nc);
    for (int y = 0; y < h; ++y) {
        const int rows[3] = {std::max(y - radius, 0), y, std::min(y + radius, h - 1)};
        for (int x = 0; x < w; ++x) {
            const int cols[3] = {std::max(x - radius, 0), x, std::min(x + radius, w - 1)};
            for (int c = 0; c < nc; ++c) {
                // Accumulate deviations from the centre tap so flat regions
                // reproduce their value exactly.
                const double centre = img.at(y, x, c);
                double dev = 0.0;
                for (int yy : rows) {
                    for (int xx : cols) {
                        dev += img.at(yy, xx, c) - centre;
                    }
                }
                out.at(y, x, c) = centre + dev / 9.0;
            }
        }
    }
    return out;
}

DecompositionResult decompose(const ImageF& img, int levels) {
    require(levels >= 1, "decomposition needs at least one level, got " + std::to_string(levels));
    DecompositionResult result{{}, img, {}};
    result.residuals.reserve(levels);
    for (int i = 0; i < levels; ++i) {
        const int radius = 1 << i;
        ImageF smooth = dilated_smooth(result.final_smooth, radius);
        ImageF residual = result.final_smooth;
        auto r = residual.data();
        auto s = smooth.data();
        for (std::size_t k = 0; k < r.size(); ++k) {
            r[k] -= s[k];
        }
        result.residuals.push_back(std::move(residual));
        result.scales.push_back(radius);
        result.final_smooth = std::move(smooth);
    }
    return result;
}

ScalarMap hf_prior(const ImageF& img, int levels, double clamp_hi) {
    require(clamp_hi > 0.0, "hf clamp_hi must be positive");
    const auto parts = decompose(img, levels);
    const int nc = img.channels();
    ScalarMap magnitude(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int c = 0; c < nc; ++c) {
                double detail = 0.0;
                for (const auto& h : parts.residuals) {
                    detail += h.at(y, x, c);
                }
                acc += std::abs(detail);
            }
            magnitude.at(y, x) = acc / nc;
        }
    }
    return clamp_rescale(magnitude, 0.0, clamp_hi);
}

}  // namespace fumo
