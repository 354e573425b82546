#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fumo/error.hpp"

namespace fumo {

// H x W x C raster, row-major with interleaved channels. Samples are
// nominally in [0,1] (sRGB-coded, no linearization).
class ImageF {
public:
    ImageF(int height, int width, int channels, double fill = 0.0);
    ImageF(int height, int width, int channels, std::vector<double> data);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& at(int y, int x, int c) noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    double at(int y, int x, int c) const noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<double> data() & noexcept { return data_; }
    std::span<const double> data() const& noexcept { return data_; }
    std::span<const double> data() && = delete;  // would dangle

    bool same_shape(const ImageF& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    // Sub-rectangle copy; the rectangle is clipped to the image bounds.
    ImageF crop(int y0, int x0, int h, int w) const;

    // Single channel as a standalone 1-channel image.
    ImageF channel(int c) const;

    bool operator==(const ImageF&) const = default;

private:
    int height_;
    int width_;
    int channels_;
    std::vector<double> data_;
};

// H x W single-channel field (severity field, priors, gate).
class ScalarMap {
public:
    ScalarMap(int height, int width, double fill = 0.0);
    ScalarMap(int height, int width, std::vector<double> data);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& at(int y, int x) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(int y, int x) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    // Replicate-border access.
    double clamped(int y, int x) const noexcept;

    std::span<double> data() & noexcept { return data_; }
    std::span<const double> data() const& noexcept { return data_; }
    std::span<const double> data() && = delete;  // would dangle

    bool same_shape(const ScalarMap& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    bool operator==(const ScalarMap&) const = default;

private:
    int height_;
    int width_;
    std::vector<double> data_;
};

ScalarMap to_scalar_map(const ImageF& single_channel);
ImageF to_image(const ScalarMap& map);

// BT.601 luma for 3 channels, copy for 1 channel.
ScalarMap to_grayscale(const ImageF& img);

// Separable Gaussian, radius ceil(3 sigma), replicate border.
ScalarMap gaussian_blur(const ScalarMap& map, double sigma);

// Normalized 1-D taps for gaussian_blur, length 2*ceil(3 sigma)+1.
std::vector<double> gaussian_kernel(double sigma);

// Bilinear resampling with half-pixel centers; samples outside the source
// are clamped to the edge.
ScalarMap resize_bilinear(const ScalarMap& map, int out_h, int out_w);
ImageF resize_bilinear(const ImageF& img, int out_h, int out_w);

// x -> (clamp(x, lo, hi) - lo) / (hi - lo)
ScalarMap clamp_rescale(const ScalarMap& map, double lo, double hi);

bool all_finite(std::span<const double> values);

}  // namespace fumo
