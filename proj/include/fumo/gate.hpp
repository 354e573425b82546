#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fumo/image.hpp"

namespace fumo {

// One conditioning residual: height x width x channels, row-major,
// channels interleaved.
struct FeatureLevel {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    bool operator==(const FeatureLevel&) const = default;
};

struct FeatureStack {
    std::vector<FeatureLevel> levels;

    void validate() const;
    bool operator==(const FeatureStack&) const = default;
};

struct GateConfig {
    double beta_max = 0.25;
    double warmup_ratio = 0.1;

    void validate() const;
};

// g = 1 + beta * P_int * P_hf
ScalarMap gate_map(const ScalarMap& p_int, const ScalarMap& p_hf, double beta);

// Zero through the warmup fraction, then a linear ramp reaching beta_max at u = 1.
double beta_schedule(double progress, const GateConfig& cfg = {});

// Gate resized to one level and clipped to [1, 1 + beta_max].
ScalarMap level_gate(const ScalarMap& g, int height, int width, double beta_max);

FeatureStack modulate_stack(const FeatureStack& stack, const ScalarMap& g, double beta_max);

// "FSTK", u32 level count, then per level u32 h, u32 w, u32 c and LE float32 data.
std::vector<std::uint8_t> encode_fstk(const FeatureStack& stack);
FeatureStack decode_fstk(const std::vector<std::uint8_t>& bytes);
void write_fstk(const std::filesystem::path& path, const FeatureStack& stack);
FeatureStack read_fstk(const std::filesystem::path& path);

}  // namespace fumo
