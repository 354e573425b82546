#include "fumo/intensity_prior.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "fumo/parallel.hpp"

namespace fumo {

void GuidedFilterParams::validate() const {
    require(radius >= 1, "guided filter radius must be >= 1");
    require(epsilon > 0.0, "guided filter epsilon must be positive");
    require(pre_blur_sigma > 0.0, "guide pre-blur sigma must be positive");
}

void IntensityPriorParams::validate() const {
    require(patch_size == 0 || patch_size >= 16, "patch size must be 0 (adaptive) or >= 16");
    require(boost_factor >= 1.0, "boost factor must be >= 1");
    require(boost_cap >= 1.0, "boost cap must be >= 1");
    require(gf_radius >= 0, "guided filter radius must be >= 0 (0 = patch_size / 2)");
    require(gf_epsilon > 0.0, "guided filter epsilon must be positive");
    require(pre_blur_sigma > 0.0, "guide pre-blur sigma must be positive");
    require(clamp_lo < clamp_hi, "intensity clamp range needs lo < hi");
    require(jobs >= 1, "jobs must be >= 1");
}

int adaptive_patch_size(int height, int width) {
    require(height >= 32 && width >= 32, "intensity prior needs images of at least 32x32 pixels, got " +
                                             std::to_string(height) + "x" + std::to_string(width));
    const long a = std::lround(std::min(height, width) / 8.0);
    return static_cast<int>(std::clamp(a, 32L, 224L));
}

PatchGrid partition_and_score(const ImageF& img, const Scorer& scorer, int patch_size, int jobs) {
    require(patch_size >= 16, "patch size must be >= 16, got " + std::to_string(patch_size));
    require(jobs >= 1, "jobs must be >= 1");
    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.rows = (img.height() + patch_size - 1) / patch_size;
    grid.cols = (img.width() + patch_size - 1) / patch_size;
    const int count = grid.rows * grid.cols;

    std::vector<std::optional<SeverityDistribution>> results(count);
    parallel_for(count, jobs, [&](int i) {
        const int row = i / grid.cols;
        const int col = i % grid.cols;
        try {
            const ImageF patch = img.crop(row * patch_size, col * patch_size, patch_size, patch_size);
            results[i] = scorer.score_patch(patch, {row, col});
        } catch (const Error& e) {
            throw Error(e.code(), "patch (" + std::to_string(row) + "," + std::to_string(col) + "): " + e.what());
        }
    });

    grid.scores.reserve(count);
    grid.distributions.reserve(count);
    for (auto& r : results) {
        grid.scores.push_back(ordinal_score(*r));
        grid.distributions.push_back(*r);
    }
    return grid;
}

ScalarMap broadcast_scores(const PatchGrid& grid, int height, int width) {
    const int a = grid.patch_size;
    require(a >= 1 && grid.rows == (height + a - 1) / a && grid.cols == (width + a - 1) / a &&
                grid.scores.size() == static_cast<std::size_t>(grid.rows) * grid.cols,
            "patch grid does not match the target dimensions");
    ScalarMap out(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            out.at(y, x) = grid.score(y / a, x / a);
        }
    }
    return out;
}

ScalarMap apply_box_boost(const ScalarMap& severity, const std::vector<BBox>& boxes, double factor, double cap) {
    require(factor >= 1.0, "boost factor must be >= 1");
    require(cap >= 1.0, "boost cap must be >= 1");
    ScalarMap out = severity;
    if (boxes.empty()) return out;
    const int h = severity.height();
    const int w = severity.width();
    for (int y = 0; y < h; ++y) {
        const double cy = (y + 0.5) / h;
        for (int x = 0; x < w; ++x) {
            const double cx = (x + 0.5) / w;
            const bool inside = std::any_of(boxes.begin(), boxes.end(), [&](const BBox& b) {
                return cx >= b.x0 && cx < b.x1 && cy >= b.y0 && cy < b.y1;
            });
            if (inside) out.at(y, x) = std::min(severity.at(y, x) * factor, cap);
        }
    }
    return out;
}

namespace {

// Window means with replicate padding via a summed-area table.
class BoxMean {
public:
    BoxMean(int height, int width, int radius) : h_(height), w_(width), r_(radius) {}

    std::vector<double> operator()(const std::vector<double>& src) const {
        const int ph = h_ + 2 * r_;
        const int pw = w_ + 2 * r_;
        std::vector<double> sat(static_cast<std::size_t>(ph + 1) * (pw + 1), 0.0);
        auto idx = [pw](int y, int x) { return static_cast<std::size_t>(y) * (pw + 1) + x; };
        for (int y = 0; y < ph; ++y) {
            const int sy = std::clamp(y - r_, 0, h_ - 1);
            double row = 0.0;
            for (int x = 0; x < pw; ++x) {
                const int sx = std::clamp(x - r_, 0, w_ - 1);
                row += src[static_cast<std::size_t>(sy) * w_ + sx];
                sat[idx(y + 1, x + 1)] = sat[idx(y, x + 1)] + row;
            }
        }
        const int win = 2 * r_ + 1;
        const double n = static_cast<double>(win) * win;
        std::vector<double> out(static_cast<std::size_t>(h_) * w_);
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                const double s = sat[idx(y + win, x + win)] - sat[idx(y, x + win)] - sat[idx(y + win, x)] +
                                 sat[idx(y, x)];
                out[static_cast<std::size_t>(y) * w_ + x] = s / n;
            }
        }
        return out;
    }

private:
    int h_;
    int w_;
    int r_;
};

}  // namespace

ScalarMap guided_filter(const ScalarMap& input, const ScalarMap& guide, int radius, double epsilon) {
    require(input.same_shape(guide), "guided filter input and guide must have the same shape");
    require(radius >= 1, "guided filter radius must be >= 1");
    require(epsilon > 0.0, "guided filter epsilon must be positive");
    const std::size_t n = input.size();
    // Both signals are shifted by their first sample; the filter is
    // shift-equivariant and flat inputs then pass through exactly.
    const double p0 = input.data()[0];
    const double g0 = guide.data()[0];
    std::vector<double> p(n), g(n), gg(n), gp(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = input.data()[i] - p0;
        g[i] = guide.data()[i] - g0;
        gg[i] = g[i] * g[i];
        gp[i] = g[i] * p[i];
    }
    const BoxMean box(input.height(), input.width(), radius);
    const auto mean_g = box(g);
    const auto mean_p = box(p);
    const auto mean_gg = box(gg);
    const auto mean_gp = box(gp);

    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double var = mean_gg[i] - mean_g[i] * mean_g[i];
        const double cov = mean_gp[i] - mean_g[i] * mean_p[i];
        a[i] = cov / (var + epsilon);
        b[i] = mean_p[i] - a[i] * mean_g[i];
    }
    const auto mean_a = box(a);
    const auto mean_b = box(b);

    ScalarMap out(input.height(), input.width());
    auto dst = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] = mean_a[i] * g[i] + mean_b[i] + p0;
    }
    return out;
}

ScalarMap make_guide(const ImageF& img, double pre_blur_sigma) {
    return gaussian_blur(to_grayscale(img), pre_blur_sigma);
}

IntensityPriorResult compute_intensity_prior(const ImageF& img, const Scorer& scorer,
                                             const IntensityPriorParams& params) {
    params.validate();
    const int h = img.height();
    const int w = img.width();
    const int patch = params.patch_size > 0 ? params.patch_size : adaptive_patch_size(h, w);
    const int radius = params.gf_radius > 0 ? params.gf_radius : std::max(1, patch / 2);

    PatchGrid grid = partition_and_score(img, scorer, patch, params.jobs);
    ScalarMap severity = broadcast_scores(grid, h, w);
    std::vector<BBox> boxes;
    for (const auto& box : scorer.detect_reflection_boxes(img)) {
        if (box.valid()) boxes.push_back(box);
    }
    ScalarMap boosted = apply_box_boost(severity, boxes, params.boost_factor, params.boost_cap);
    ScalarMap filtered = guided_filter(boosted, make_guide(img, params.pre_blur_sigma), radius, params.gf_epsilon);
    ScalarMap prior = clamp_rescale(filtered, params.clamp_lo, params.clamp_hi);
    return {std::move(grid), std::move(boxes), std::move(severity), std::move(boosted), std::move(filtered),
            std::move(prior)};
}

}  // namespace fumo
