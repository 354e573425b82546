#include <doctest.h>

#include <cmath>

#include "fumo/image.hpp"
#include "test_support.hpp"

using namespace fumo;

TEST_CASE("containers reject bad shapes") {
    CHECK_THROWS_AS(ImageF(0, 4, 3), Error);
    CHECK_THROWS_AS(ImageF(4, 4, 2), Error);
    CHECK_THROWS_AS(ImageF(2, 2, 1, std::vector<double>(3)), Error);
    CHECK_THROWS_AS(ScalarMap(3, 0), Error);
    CHECK_THROWS_AS(ScalarMap(2, 2, std::vector<double>(5)), Error);
}

TEST_CASE("to_grayscale") {
    SUBCASE("white stays white") {
        const auto g = to_grayscale(ImageF(4, 5, 3, 1.0));
        for (double v : g.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("single channel is copied") {
        const auto img = testing::random_image(6, 7, 1, 3);
        const auto g = to_grayscale(img);
        CHECK(std::equal(g.data().begin(), g.data().end(), img.data().begin()));
    }
    SUBCASE("pure red gives the red weight") {
        ImageF img(1, 1, 3, 0.0);
        img.at(0, 0, 0) = 1.0;
        CHECK(to_grayscale(img).at(0, 0) == doctest::Approx(0.299).epsilon(1e-15));
    }
}

TEST_CASE("gaussian_blur") {
    CHECK_THROWS_AS(gaussian_blur(ScalarMap(4, 4), 0.0), Error);
    CHECK_THROWS_AS(gaussian_blur(ScalarMap(4, 4), -1.0), Error);

    SUBCASE("constant maps are preserved") {
        for (double sigma : {0.3, 1.0, 2.5}) {
            const auto out = gaussian_blur(ScalarMap(9, 13, 0.37), sigma);
            for (double v : out.data()) CHECK(std::abs(v - 0.37) < 1e-6);
        }
    }
    SUBCASE("impulse centre equals squared centre tap") {
        // 1-D taps for sigma 1, radius 3, evaluated by hand.
        double sum = 0.0;
        for (int i = -3; i <= 3; ++i) sum += std::exp(-i * i / 2.0);
        const double centre_tap = 1.0 / sum;

        ScalarMap impulse(15, 15, 0.0);
        impulse.at(7, 7) = 1.0;
        const auto out = gaussian_blur(impulse, 1.0);
        CHECK(out.at(7, 7) == doctest::Approx(centre_tap * centre_tap).epsilon(1e-12));

        double total = 0.0;
        for (double v : out.data()) total += v;
        CHECK(std::abs(total - 1.0) < 1e-6);
    }
    SUBCASE("kernel radius is ceil(3 sigma)") {
        CHECK(gaussian_kernel(1.0).size() == 7);
        CHECK(gaussian_kernel(1.1).size() == 9);
    }
}

TEST_CASE("resize_bilinear") {
    CHECK_THROWS_AS(resize_bilinear(ScalarMap(2, 2), 0, 3), Error);

    SUBCASE("constants survive any size") {
        const ScalarMap c(5, 7, 0.7);
        for (auto [h, w] : {std::pair{1, 1}, {3, 11}, {20, 4}}) {
            const auto values = resize_bilinear(c, h, w);
            for (double v : values.data()) CHECK(v == 0.7);
        }
    }
    SUBCASE("same size is identity") {
        const auto m = testing::random_map(6, 9, 11);
        const auto out = resize_bilinear(m, 6, 9);
        CHECK(testing::max_abs_diff(out.data(), m.data()) < 1e-6);
    }
    SUBCASE("2x2 ramp widened to 2x4") {
        // Half-pixel sources: -0.25, 0.25, 0.75, 1.25 -> clamped to [0, 1].
        const ScalarMap m(2, 2, {0.0, 1.0, 0.0, 1.0});
        const auto out = resize_bilinear(m, 2, 4);
        const double expected[4] = {0.0, 0.25, 0.75, 1.0};
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < 4; ++x) CHECK(out.at(y, x) == doctest::Approx(expected[x]));
            for (int x = 1; x < 4; ++x) CHECK(out.at(y, x) >= out.at(y, x - 1));
        }
    }
}

TEST_CASE("clamp_rescale") {
    CHECK_THROWS_AS(clamp_rescale(ScalarMap(2, 2), 5.0, 1.0), Error);
    CHECK_THROWS_AS(clamp_rescale(ScalarMap(2, 2), 1.0, 1.0), Error);
    {
        const auto values = clamp_rescale(ScalarMap(2, 2, 5.0), 1.0, 5.0);
        for (double v : values.data()) CHECK(v == 1.0);
    }
    {
        const auto values = clamp_rescale(ScalarMap(2, 2, 1.0), 1.0, 5.0);
        for (double v : values.data()) CHECK(v == 0.0);
    }
    CHECK(clamp_rescale(ScalarMap(1, 1, 3.0), 1.0, 5.0).at(0, 0) == 0.5);

    const auto wide = testing::random_map(20, 20, 5, -10.0, 10.0);
    {
        const auto values = clamp_rescale(wide, -1.0, 2.0);
        for (double v : values.data()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("crop clips to bounds") {
    const auto img = testing::random_image(10, 10, 3, 2);
    const auto patch = img.crop(8, 6, 4, 4);
    CHECK(patch.height() == 2);
    CHECK(patch.width() == 4);
    CHECK(patch.at(1, 3, 2) == img.at(9, 9, 2));
}
