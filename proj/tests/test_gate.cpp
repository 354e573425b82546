#include <doctest.h>

#include <cmath>
#include <limits>

#include "fumo/gate.hpp"
#include "test_support.hpp"

using namespace fumo;

namespace {

FeatureLevel random_level(int h, int w, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-3.0f, 3.0f);
    FeatureLevel level{h, w, c, std::vector<float>(static_cast<std::size_t>(h) * w * c)};
    for (float& v : level.data) v = u(rng);
    return level;
}

FeatureStack random_stack(std::uint64_t seed) {
    return {{random_level(32, 32, 4, seed), random_level(16, 16, 8, seed + 1), random_level(8, 8, 16, seed + 2)}};
}

}  // namespace

TEST_CASE("gate_map") {
    const auto p = testing::random_map(10, 12, 1);
    const auto q = testing::random_map(10, 12, 2);

    const auto zero_beta = gate_map(p, q, 0.0);
    for (double v : zero_beta.data()) CHECK(v == 1.0);

    const auto full = gate_map(ScalarMap(3, 3, 1.0), ScalarMap(3, 3, 1.0), 0.25);
    for (double v : full.data()) CHECK(v == 1.25);

    const auto mid = gate_map(ScalarMap(3, 3, 0.5), ScalarMap(3, 3, 0.5), 0.2);
    for (double v : mid.data()) CHECK(std::abs(v - 1.05) < 1e-12);

    SUBCASE("range and exact identity where a prior is zero") {
        ScalarMap pz = p;
        pz.at(4, 4) = 0.0;
        const auto g = gate_map(pz, q, 0.25);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(g.data()[i] >= 1.0);
            CHECK(g.data()[i] <= 1.25);
            CHECK(g.data()[i] == doctest::Approx(1.0 + 0.25 * pz.data()[i] * q.data()[i]).epsilon(1e-15));
        }
        CHECK(g.at(4, 4) == 1.0);
    }
    SUBCASE("invalid inputs") {
        CHECK_THROWS_AS(gate_map(p, ScalarMap(10, 11, 0.5), 0.25), Error);
        CHECK_THROWS_AS(gate_map(ScalarMap(2, 2, 1.5), ScalarMap(2, 2, 0.5), 0.25), Error);
        CHECK_THROWS_AS(gate_map(ScalarMap(2, 2, -0.1), ScalarMap(2, 2, 0.5), 0.25), Error);
        CHECK_THROWS_AS(gate_map(p, q, -0.1), Error);
    }
}

TEST_CASE("beta_schedule") {
    const GateConfig cfg{0.25, 0.1};
    CHECK(beta_schedule(0.05, cfg) == 0.0);
    CHECK(beta_schedule(0.0, cfg) == 0.0);
    CHECK(beta_schedule(0.1, cfg) == 0.0);
    CHECK(beta_schedule(1.0, cfg) == 0.25);
    CHECK(beta_schedule(0.55, cfg) == doctest::Approx(0.125).epsilon(1e-15));

    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double b = beta_schedule(i / 1000.0, cfg);
        CHECK(b >= prev);
        CHECK(b - prev < 0.25 / 900.0 + 1e-12);
        prev = b;
    }
    CHECK(beta_schedule(0.3, GateConfig{1.0, 0.0}) == doctest::Approx(0.3));
    CHECK_THROWS_AS(beta_schedule(1.01, cfg), Error);
    CHECK_THROWS_AS(beta_schedule(-0.01, cfg), Error);
    CHECK_THROWS_AS(beta_schedule(0.5, GateConfig{0.0, 0.1}), Error);
    CHECK_THROWS_AS(beta_schedule(0.5, GateConfig{0.25, 1.0}), Error);
}

TEST_CASE("modulate_stack") {
    const auto stack = random_stack(7);

    CHECK(modulate_stack(stack, ScalarMap(32, 32, 1.0), 0.25) == stack);

    SUBCASE("clip engages above 1 + beta_max") {
        const auto out = modulate_stack(stack, ScalarMap(32, 32, 2.0), 0.25);
        for (std::size_t l = 0; l < stack.levels.size(); ++l)
            for (std::size_t i = 0; i < stack.levels[l].data.size(); ++i)
                CHECK(out.levels[l].data[i] == static_cast<float>(1.25 * stack.levels[l].data[i]));
    }
    SUBCASE("constant gate scales every level") {
        const auto out = modulate_stack(stack, ScalarMap(20, 24, 1.2), 0.25);
        for (std::size_t l = 0; l < stack.levels.size(); ++l) {
            CHECK(out.levels[l].height == stack.levels[l].height);
            CHECK(out.levels[l].channels == stack.levels[l].channels);
            for (std::size_t i = 0; i < stack.levels[l].data.size(); ++i)
                CHECK(std::abs(out.levels[l].data[i] - 1.2 * stack.levels[l].data[i]) < 1e-6);
        }
    }
    SUBCASE("per-pixel factors stay in [1, 1 + beta_max]") {
        const auto g = gate_map(testing::random_map(32, 32, 3), testing::random_map(32, 32, 4), 0.6);
        const auto out = modulate_stack(stack, g, 0.25);
        for (std::size_t l = 0; l < stack.levels.size(); ++l)
            for (std::size_t i = 0; i < stack.levels[l].data.size(); ++i) {
                const double in = stack.levels[l].data[i];
                if (std::abs(in) < 1e-3) continue;
                const double factor = out.levels[l].data[i] / in;
                CHECK(factor >= 1.0 - 1e-6);
                CHECK(factor <= 1.25 + 1e-6);
            }
    }
    SUBCASE("broadcast over channels") {
        ScalarMap g(2, 2, {1.0, 1.1, 1.2, 1.3});
        FeatureLevel level{2, 2, 2, {1, 2, 1, 2, 1, 2, 1, 2}};
        const auto out = modulate_stack({{level}}, g, 0.25);
        CHECK(out.levels[0].data == std::vector<float>{1.0f, 2.0f, 1.1f, 2.2f, 1.2f, 2.4f, 1.25f, 2.5f});
    }
    SUBCASE("composition identity at beta zero") {
        const auto g = gate_map(testing::random_map(32, 32, 5), testing::random_map(32, 32, 6), 0.0);
        CHECK(modulate_stack(stack, g, 0.25) == stack);
    }
    CHECK_THROWS_AS(modulate_stack(FeatureStack{}, ScalarMap(2, 2, 1.0), 0.25), Error);
    CHECK_THROWS_AS(modulate_stack(stack, ScalarMap(2, 2, 1.0), 0.0), Error);
    CHECK_THROWS_AS(modulate_stack(stack, ScalarMap(2, 2, std::numeric_limits<double>::quiet_NaN()), 0.25), Error);
}

TEST_CASE("FSTK files") {
    const auto stack = random_stack(11);
    const auto bytes = encode_fstk(stack);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "FSTK");
    CHECK(bytes[4] == 3);
    std::size_t expected = 8;
    for (const auto& l : stack.levels) expected += 12 + 4 * l.data.size();
    CHECK(bytes.size() == expected);
    CHECK(decode_fstk(bytes) == stack);

    testing::TempDir dir("fstk");
    write_fstk(dir / "s.fstk", stack);
    CHECK(read_fstk(dir / "s.fstk") == stack);

    auto truncated = bytes;
    truncated.resize(bytes.size() - 1);
    CHECK_THROWS_AS(decode_fstk(truncated), Error);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_fstk(bad_magic), Error);

    FeatureStack bad{{FeatureLevel{1, 1, 1, {std::numeric_limits<float>::infinity()}}}};
    CHECK_THROWS_AS(bad.validate(), Error);
}
