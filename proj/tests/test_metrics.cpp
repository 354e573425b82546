#include <doctest.h>

#include <cmath>

#include "fumo/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fumo;

namespace {

ImageF ramp(int h, int w, int c, double k) {
    ImageF img(h, w, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) img.at(y, x, ch) = k * x;
    return img;
}

}  // namespace

TEST_CASE("l1 and mse") {
    const auto a = testing::random_image(9, 7, 3, 1);
    const auto b = testing::random_image(9, 7, 3, 2);
    CHECK(l1_loss(a, a) == 0.0);
    CHECK(mse(a, a) == 0.0);
    CHECK(l1_loss(ImageF(4, 4, 3, 1.0), ImageF(4, 4, 3, 0.0)) == 1.0);
    CHECK(mse(ImageF(4, 4, 3, 0.5), ImageF(4, 4, 3, 0.0)) == 0.25);

    double abs_sum = 0, sq_sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    CHECK(std::abs(l1_loss(a, b) - abs_sum / a.size()) < 1e-9);
    CHECK(std::abs(mse(a, b) - sq_sum / a.size()) < 1e-9);
    CHECK_THROWS_AS(l1_loss(a, testing::random_image(9, 7, 1, 2)), Error);
    CHECK_THROWS_AS(mse(a, testing::random_image(9, 8, 3, 2)), Error);
}

TEST_CASE("psnr") {
    const auto a = testing::random_image(6, 6, 3, 3);
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr(a, a) > 0);

    ImageF z(10, 10, 1, 0.0), p(10, 10, 1, 0.1);
    CHECK(psnr(z, p) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(psnr(ImageF(4, 4, 3, 0.5), ImageF(4, 4, 3, 0.0)) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
    CHECK(std::abs(psnr(ImageF(4, 4, 3, 0.5), ImageF(4, 4, 3, 0.0)) - 6.0206) < 1e-4);
}

TEST_CASE("ssim") {
    const auto a = testing::random_image(16, 16, 3, 4);
    const auto b = testing::random_image(16, 16, 3, 5);
    CHECK(std::abs(ssim(a, a) - 1.0) < 1e-9);
    CHECK(ssim(ImageF(12, 12, 3, 0.0), ImageF(12, 12, 3, 1.0)) == doctest::Approx(1e-4 / 1.0001).epsilon(1e-9));
    CHECK(std::abs(ssim(a, b) - oracle::ssim(a, b)) < 1e-6);

    const auto c = testing::random_image(13, 15, 1, 6);
    const auto d = testing::random_image(13, 15, 1, 7);
    CHECK(std::abs(ssim(c, d) - oracle::ssim(c, d)) < 1e-6);

    const auto near = [&] {
        ImageF n = a;
        for (double& v : n.data()) v = std::clamp(v + 0.02, 0.0, 1.0);
        return n;
    }();
    CHECK(std::abs(ssim(a, near) - oracle::ssim(a, near)) < 1e-6);
    CHECK(ssim(a, near) > ssim(a, b));

    CHECK_THROWS_AS(ssim(ImageF(10, 16, 3), ImageF(10, 16, 3)), Error);
}

TEST_CASE("sobel gradient loss") {
    const auto a = testing::random_image(10, 10, 3, 8);
    CHECK(sobel_gradient_loss(a, a) == 0.0);
    CHECK(sobel_gradient_loss(ImageF(7, 7, 3, 0.2), ImageF(7, 7, 3, 0.9)) == 0.0);

    SUBCASE("ramp against flat") {
        // Interior columns respond 8k; the two replicate-padded border columns 4k.
        for (int w : {3, 8, 17}) {
            const double k = 0.05;
            const double expected = 8.0 * k * (w - 1) / w;
            CHECK(sobel_gradient_loss(ramp(5, w, 3, k), ImageF(5, w, 3, 0.3)) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
    SUBCASE("single-pixel hand values") {
        ImageF img(3, 3, 1, 0.0);
        img.at(1, 2, 0) = 1.0;
        ScalarMap gx(1, 1), gy(1, 1);
        sobel(img, 0, gx, gy);
        CHECK(gx.at(1, 1) == 2.0);
        CHECK(gx.at(0, 1) == 1.0);
        CHECK(gy.at(1, 1) == 0.0);
        CHECK(gy.at(0, 2) == 3.0);  // replicate border above and to the right
    }
}

TEST_CASE("composite refine loss") {
    const auto a = testing::random_image(12, 12, 3, 9);
    const auto b = testing::random_image(12, 12, 3, 10);
    CHECK(composite_refine_loss(a, a).total == 0.0);

    // 8-wide ramp of slope 0.4/7 against black: L1 = 0.2, gradient loss = 0.4.
    const auto r = ramp(4, 8, 3, 0.4 / 7.0);
    const ImageF black(4, 8, 3, 0.0);
    const auto loss = composite_refine_loss(r, black);
    CHECK(loss.pixel == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(loss.gradient == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(loss.total == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_FALSE(loss.perceptual_available);

    CHECK(composite_refine_loss(a, b, {1.0, 0.0, 0.0}).total == l1_loss(a, b));
}

TEST_CASE("symmetry and ranges") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto a = testing::random_image(14, 14, 3, 100 + seed);
        const auto b = testing::random_image(14, 14, 3, 200 + seed);
        const auto ab = evaluate_pair(a, b);
        const auto ba = evaluate_pair(b, a);
        CHECK(std::abs(ab.psnr - ba.psnr) < 1e-9);
        CHECK(std::abs(ab.ssim - ba.ssim) < 1e-9);
        CHECK(std::abs(ab.l1 - ba.l1) < 1e-9);
        CHECK(std::abs(ab.mse - ba.mse) < 1e-9);
        CHECK(std::abs(ab.grad_loss - ba.grad_loss) < 1e-9);
        CHECK(ab.ssim >= -1.0);
        CHECK(ab.ssim <= 1.0);
        CHECK(ab.l1 >= 0.0);
        CHECK(ab.grad_loss >= 0.0);
    }
}

TEST_CASE("metric names") {
    CHECK(metric_from_name("psnr") == Metric::psnr);
    CHECK(metric_from_name("grad_loss") == Metric::grad);
    CHECK_FALSE(metric_from_name("clipiqa"));
    CHECK_FALSE(metric_available(Metric::lpips));
    CHECK(metric_available(Metric::ssim));
    const auto a = testing::random_image(12, 12, 3, 1);
    CHECK_THROWS_AS(compute_metric(Metric::lpips, a, a), Error);
    CHECK(compute_metric(Metric::mse, a, a) == 0.0);
}
