#include "fumo/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace fumo {

namespace {

void check_pair(const ImageF& a, const ImageF& b) {
    require(a.same_shape(b), "metric inputs differ in shape");
}

}  // namespace

std::string_view metric_name(Metric metric) {
    switch (metric) {
        case Metric::psnr: return "psnr";
        case Metric::ssim: return "ssim";
        case Metric::l1: return "l1";
        case Metric::mse: return "mse";
        case Metric::grad: return "grad_loss";
        case Metric::lpips: return "lpips";
    }
    return "unknown";
}

std::optional<Metric> metric_from_name(std::string_view name) {
    for (Metric m : {Metric::psnr, Metric::ssim, Metric::l1, Metric::mse, Metric::grad, Metric::lpips}) {
        if (metric_name(m) == name) return m;
    }
    return std::nullopt;
}

bool metric_available(Metric metric) { return metric != Metric::lpips; }

double l1_loss(const ImageF& a, const ImageF& b) {
    check_pair(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a.data()[i] - b.data()[i]);
    return acc / static_cast<double>(a.size());
}

double mse(const ImageF& a, const ImageF& b) {
    check_pair(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr(const ImageF& a, const ImageF& b) {
    const double err = mse(a, b);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(err);
}

namespace {

// Valid-mode separable filtering of one channel.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int oh = h - k + 1;
    const int ow = w - k + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * src[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

std::vector<double> ssim_taps() {
    std::vector<double> taps(kSsimWindow);
    const int r = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        taps[i] = std::exp(-((i - r) * (i - r)) / (2.0 * kSsimSigma * kSsimSigma));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

}  // namespace

double ssim(const ImageF& a, const ImageF& b) {
    check_pair(a, b);
    require(a.height() >= kSsimWindow && a.width() >= kSsimWindow,
            "SSIM needs images of at least " + std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow));
    const auto taps = ssim_taps();
    const int h = a.height();
    const int w = a.width();
    const std::size_t n = static_cast<std::size_t>(h) * w;
    double total = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = a.data()[i * a.channels() + c];
            y[i] = b.data()[i * b.channels() + c];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, h, w, taps);
        const auto my = filter_valid(y, h, w, taps);
        const auto mxx = filter_valid(xx, h, w, taps);
        const auto myy = filter_valid(yy, h, w, taps);
        const auto mxy = filter_valid(xy, h, w, taps);
        double acc = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = mxx[i] - mx[i] * mx[i];
            const double vy = myy[i] - my[i] * my[i];
            const double cxy = mxy[i] - mx[i] * my[i];
            acc += ((2.0 * mx[i] * my[i] + kSsimC1) * (2.0 * cxy + kSsimC2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + kSsimC1) * (vx + vy + kSsimC2));
        }
        total += acc / static_cast<double>(mx.size());
    }
    return total / a.channels();
}

void sobel(const ImageF& img, int channel, ScalarMap& gx, ScalarMap& gy) {
    const int h = img.height();
    const int w = img.width();
    gx = ScalarMap(h, w);
    gy = ScalarMap(h, w);
    auto px = [&](int y, int x) {
        return img.at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1), channel);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Differences first so flat neighbourhoods give exact zeros.
            gx.at(y, x) = (px(y - 1, x + 1) - px(y - 1, x - 1)) + 2.0 * (px(y, x + 1) - px(y, x - 1)) +
                          (px(y + 1, x + 1) - px(y + 1, x - 1));
            gy.at(y, x) = (px(y + 1, x - 1) - px(y - 1, x - 1)) + 2.0 * (px(y + 1, x) - px(y - 1, x)) +
                          (px(y + 1, x + 1) - px(y - 1, x + 1));
        }
    }
}

double sobel_gradient_loss(const ImageF& a, const ImageF& b) {
    check_pair(a, b);
    ScalarMap ax(1, 1), ay(1, 1), bx(1, 1), by(1, 1);
    double acc = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        sobel(a, c, ax, ay);
        sobel(b, c, bx, by);
        for (std::size_t i = 0; i < ax.size(); ++i) {
            acc += std::abs(ax.data()[i] - bx.data()[i]) + std::abs(ay.data()[i] - by.data()[i]);
        }
    }
    return acc / static_cast<double>(a.size());
}

RefineLoss composite_refine_loss(const ImageF& a, const ImageF& b, const RefineWeights& weights) {
    check_pair(a, b);
    RefineLoss loss;
    loss.pixel = l1_loss(a, b);
    loss.gradient = sobel_gradient_loss(a, b);
    loss.total = weights.pixel * loss.pixel + weights.gradient * loss.gradient;
    loss.perceptual_available = false;
    return loss;
}

double compute_metric(Metric metric, const ImageF& a, const ImageF& b) {
    switch (metric) {
        case Metric::psnr: return psnr(a, b);
        case Metric::ssim: return ssim(a, b);
        case Metric::l1: return l1_loss(a, b);
        case Metric::mse: return mse(a, b);
        case Metric::grad: return sobel_gradient_loss(a, b);
        case Metric::lpips: break;
    }
    fail(ErrorCode::invalid_input, "metric lpips is not available: it needs a pretrained perceptual network");
}

MetricReport evaluate_pair(const ImageF& a, const ImageF& b) {
    MetricReport r;
    r.mse = mse(a, b);
    r.psnr = r.mse == 0.0 ? std::numeric_limits<double>::infinity() : -10.0 * std::log10(r.mse);
    r.ssim = ssim(a, b);
    r.l1 = l1_loss(a, b);
    r.grad_loss = sobel_gradient_loss(a, b);
    return r;
}

}  // namespace fumo
