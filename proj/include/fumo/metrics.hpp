#pragma once

#include <limits>
#include <optional>
#include <string_view>

#include "fumo/image.hpp"

namespace fumo {

struct MetricReport {
    double psnr = 0.0;  // dB; +inf for identical inputs
    double ssim = 0.0;
    double l1 = 0.0;
    double mse = 0.0;
    double grad_loss = 0.0;
};

enum class Metric { psnr, ssim, l1, mse, grad, lpips };

std::string_view metric_name(Metric metric);
std::optional<Metric> metric_from_name(std::string_view name);

// LPIPS needs a pretrained perceptual network and is not provided.
bool metric_available(Metric metric);

double l1_loss(const ImageF& a, const ImageF& b);
double mse(const ImageF& a, const ImageF& b);

// Peak 1.0. Identical images give +infinity.
double psnr(const ImageF& a, const ImageF& b);

// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, range 1; mean over valid window positions, then over channels.
double ssim(const ImageF& a, const ImageF& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Mean over samples of |Sx a - Sx b| + |Sy a - Sy b| with 3x3 Sobel kernels,
// replicate border, per channel.
double sobel_gradient_loss(const ImageF& a, const ImageF& b);

// Per-sample Sobel responses (x then y) of one channel.
void sobel(const ImageF& img, int channel, ScalarMap& gx, ScalarMap& gy);

struct RefineWeights {
    double pixel = 0.5;
    double perceptual = 0.25;
    double gradient = 0.25;
};

struct RefineLoss {
    double total = 0.0;
    double pixel = 0.0;
    double gradient = 0.0;
    // The perceptual term is never computed; it contributes 0 to total.
    bool perceptual_available = false;
};

RefineLoss composite_refine_loss(const ImageF& a, const ImageF& b, const RefineWeights& weights = {});

double compute_metric(Metric metric, const ImageF& a, const ImageF& b);

MetricReport evaluate_pair(const ImageF& a, const ImageF& b);

}  // namespace fumo
