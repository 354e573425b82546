#include "fumo/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fumo {

namespace {

void check_dims(int height, int width) {
    require(height >= 1 && width >= 1,
            "raster dimensions must be positive, got " + std::to_string(height) + "x" +
                std::to_string(width));
}

std::size_t area(int height, int width) {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
}

}  // namespace

ImageF::ImageF(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
    check_dims(height, width);
    require(channels == 1 || channels == 3,
            "image must have 1 or 3 channels, got " + std::to_string(channels));
    data_.assign(area(height, width) * channels, fill);
}

ImageF::ImageF(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    check_dims(height, width);
    require(channels == 1 || channels == 3,
            "image must have 1 or 3 channels, got " + std::to_string(channels));
    require(data_.size() == area(height, width) * channels, "image data length does not match shape");
}

ImageF ImageF::crop(int y0, int x0, int h, int w) const {
    const int y1 = std::min(height_, y0 + h);
    const int x1 = std::min(width_, x0 + w);
    require(y0 >= 0 && x0 >= 0 && y1 > y0 && x1 > x0, "crop rectangle lies outside the image");
    ImageF out(y1 - y0, x1 - x0, channels_);
    for (int y = y0; y < y1; ++y) {
        const double* src = &data_[(static_cast<std::size_t>(y) * width_ + x0) * channels_];
        std::copy(src, src + static_cast<std::size_t>(x1 - x0) * channels_, &out.at(y - y0, 0, 0));
    }
    return out;
}

ImageF ImageF::channel(int c) const {
    require(c >= 0 && c < channels_, "channel index out of range");
    ImageF out(height_, width_, 1);
    for (std::size_t i = 0; i < area(height_, width_); ++i) {
        out.data_[i] = data_[i * channels_ + c];
    }
    return out;
}

ScalarMap::ScalarMap(int height, int width, double fill) : height_(height), width_(width) {
    check_dims(height, width);
    data_.assign(area(height, width), fill);
}

ScalarMap::ScalarMap(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    check_dims(height, width);
    require(data_.size() == area(height, width), "map data length does not match shape");
}

double ScalarMap::clamped(int y, int x) const noexcept {
    y = std::clamp(y, 0, height_ - 1);
    x = std::clamp(x, 0, width_ - 1);
    return at(y, x);
}

ScalarMap to_scalar_map(const ImageF& single_channel) {
    require(single_channel.channels() == 1, "expected a single-channel image");
    auto src = single_channel.data();
    return ScalarMap(single_channel.height(), single_channel.width(),
                     std::vector<double>(src.begin(), src.end()));
}

ImageF to_image(const ScalarMap& map) {
    auto src = map.data();
    return ImageF(map.height(), map.width(), 1, std::vector<double>(src.begin(), src.end()));
}

ScalarMap to_grayscale(const ImageF& img) {
    if (img.channels() == 1) {
        return to_scalar_map(img);
    }
    require(img.channels() == 3, "grayscale conversion needs 1 or 3 channels");
    ScalarMap out(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out.at(y, x) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
        }
    }
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    require(sigma > 0.0 && std::isfinite(sigma), "gaussian sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += taps[i + radius];
    }
    for (double& t : taps) {
        t /= sum;
    }
    return taps;
}

ScalarMap gaussian_blur(const ScalarMap& map, double sigma) {
    const auto taps = gaussian_kernel(sigma);
    const int radius = static_cast<int>(taps.size() / 2);
    const int h = map.height();
    const int w = map.width();

    ScalarMap horiz(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += taps[k + radius] * map.clamped(y, x + k);
            }
            horiz.at(y, x) = acc;
        }
    }
    ScalarMap out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += taps[k + radius] * horiz.clamped(y + k, x);
            }
            out.at(y, x) = acc;
        }
    }
    return out;
}

namespace {

struct Tap {
    int i0;
    int i1;
    double frac;
};

std::vector<Tap> bilinear_taps(int in_size, int out_size) {
    std::vector<Tap> taps(out_size);
    const double scale = static_cast<double>(in_size) / out_size;
    for (int o = 0; o < out_size; ++o) {
        double src = (o + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
        const int i0 = static_cast<int>(std::floor(src));
        const int i1 = std::min(i0 + 1, in_size - 1);
        taps[o] = {i0, i1, src - i0};
    }
    return taps;
}

// a + t (b - a) returns a exactly when a == b, so constants survive resampling.
inline double lerp(double a, double b, double t) { return a + t * (b - a); }

}  // namespace

ScalarMap resize_bilinear(const ScalarMap& map, int out_h, int out_w) {
    require(out_h >= 1 && out_w >= 1, "resize target dimensions must be positive");
    const auto ty = bilinear_taps(map.height(), out_h);
    const auto tx = bilinear_taps(map.width(), out_w);
    ScalarMap out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const double top = lerp(map.at(ty[y].i0, tx[x].i0), map.at(ty[y].i0, tx[x].i1), tx[x].frac);
            const double bot = lerp(map.at(ty[y].i1, tx[x].i0), map.at(ty[y].i1, tx[x].i1), tx[x].frac);
            out.at(y, x) = lerp(top, bot, ty[y].frac);
        }
    }
    return out;
}

ImageF resize_bilinear(const ImageF& img, int out_h, int out_w) {
    require(out_h >= 1 && out_w >= 1, "resize target dimensions must be positive");
    const auto ty = bilinear_taps(img.height(), out_h);
    const auto tx = bilinear_taps(img.width(), out_w);
    ImageF out(out_h, out_w, img.channels());
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            for (int c = 0; c < img.channels(); ++c) {
                const double top =
                    lerp(img.at(ty[y].i0, tx[x].i0, c), img.at(ty[y].i0, tx[x].i1, c), tx[x].frac);
                const double bot =
                    lerp(img.at(ty[y].i1, tx[x].i0, c), img.at(ty[y].i1, tx[x].i1, c), tx[x].frac);
                out.at(y, x, c) = lerp(top, bot, ty[y].frac);
            }
        }
    }
    return out;
}

ScalarMap clamp_rescale(const ScalarMap& map, double lo, double hi) {
    require(lo < hi, "clamp_rescale needs lo < hi");
    ScalarMap out = map;
    const double span = hi - lo;
    for (double& v : out.data()) {
        v = (std::clamp(v, lo, hi) - lo) / span;
    }
    return out;
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace fumo
