#include "fumo/gate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "fumo/image_io.hpp"

namespace fumo {

void FeatureStack::validate() const {
    require(!levels.empty(), "feature stack has no levels");
    for (std::size_t s = 0; s < levels.size(); ++s) {
        const auto& l = levels[s];
        require(l.height >= 1 && l.width >= 1 && l.channels >= 1,
                "feature level " + std::to_string(s) + " has an empty shape");
        require(l.data.size() == static_cast<std::size_t>(l.height) * l.width * l.channels,
                "feature level " + std::to_string(s) + " data length does not match its shape");
        require(std::all_of(l.data.begin(), l.data.end(), [](float v) { return std::isfinite(v); }),
                "feature level " + std::to_string(s) + " has non-finite samples");
    }
}

void GateConfig::validate() const {
    require(beta_max > 0.0 && std::isfinite(beta_max), "beta_max must be positive");
    require(warmup_ratio >= 0.0 && warmup_ratio < 1.0, "warmup ratio must be in [0, 1)");
}

ScalarMap gate_map(const ScalarMap& p_int, const ScalarMap& p_hf, double beta) {
    require(p_int.same_shape(p_hf), "intensity and high-frequency priors differ in shape");
    require(beta >= 0.0 && std::isfinite(beta), "gate beta must be >= 0");
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    require(std::all_of(p_int.data().begin(), p_int.data().end(), in_unit), "intensity prior leaves [0,1]");
    require(std::all_of(p_hf.data().begin(), p_hf.data().end(), in_unit), "high-frequency prior leaves [0,1]");
    ScalarMap g(p_int.height(), p_int.width());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.data()[i] = 1.0 + beta * (p_int.data()[i] * p_hf.data()[i]);
    }
    return g;
}

double beta_schedule(double progress, const GateConfig& cfg) {
    cfg.validate();
    require(progress >= 0.0 && progress <= 1.0, "training progress must be in [0, 1]");
    const double ramp = (progress - cfg.warmup_ratio) / (1.0 - cfg.warmup_ratio);
    return cfg.beta_max * std::clamp(ramp, 0.0, 1.0);
}

ScalarMap level_gate(const ScalarMap& g, int height, int width, double beta_max) {
    require(beta_max > 0.0, "beta_max must be positive");
    ScalarMap out = resize_bilinear(g, height, width);
    for (double& v : out.data()) {
        v = std::clamp(v, 1.0, 1.0 + beta_max);
    }
    return out;
}

FeatureStack modulate_stack(const FeatureStack& stack, const ScalarMap& g, double beta_max) {
    stack.validate();
    require(all_finite(g.data()), "gate map has non-finite samples");
    FeatureStack out = stack;
    for (auto& level : out.levels) {
        const ScalarMap gate = level_gate(g, level.height, level.width, beta_max);
        const auto factors = gate.data();
        for (std::size_t px = 0; px < factors.size(); ++px) {
            float* sample = level.data.data() + px * level.channels;
            for (int c = 0; c < level.channels; ++c) {
                sample[c] = static_cast<float>(sample[c] * factors[px]);
            }
        }
    }
    return out;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        if (pos_ + 4 > bytes_.size()) fail(ErrorCode::io_read, "FSTK data is truncated");
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += 4;
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 4;
};

}  // namespace

std::vector<std::uint8_t> encode_fstk(const FeatureStack& stack) {
    stack.validate();
    std::vector<std::uint8_t> out{'F', 'S', 'T', 'K'};
    put_u32(out, static_cast<std::uint32_t>(stack.levels.size()));
    for (const auto& level : stack.levels) {
        put_u32(out, static_cast<std::uint32_t>(level.height));
        put_u32(out, static_cast<std::uint32_t>(level.width));
        put_u32(out, static_cast<std::uint32_t>(level.channels));
        for (float v : level.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

FeatureStack decode_fstk(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "FSTK", 4) != 0) {
        fail(ErrorCode::io_read, "not an FSTK file");
    }
    Reader in(bytes);
    const std::uint32_t count = in.u32();
    FeatureStack stack;
    for (std::uint32_t s = 0; s < count; ++s) {
        FeatureLevel level;
        const std::uint32_t h = in.u32();
        const std::uint32_t w = in.u32();
        const std::uint32_t c = in.u32();
        const std::uint64_t n = static_cast<std::uint64_t>(h) * w * c;
        if (h == 0 || w == 0 || c == 0 || n * 4 > in.remaining()) {
            fail(ErrorCode::io_read, "FSTK level " + std::to_string(s) + " has an invalid shape");
        }
        level.height = static_cast<int>(h);
        level.width = static_cast<int>(w);
        level.channels = static_cast<int>(c);
        level.data.resize(n);
        for (auto& v : level.data) v = std::bit_cast<float>(in.u32());
        stack.levels.push_back(std::move(level));
    }
    if (in.remaining() != 0) fail(ErrorCode::io_read, "FSTK has trailing bytes");
    try {
        stack.validate();
    } catch (const Error& e) {
        fail(ErrorCode::io_read, std::string("FSTK: ") + e.what());
    }
    return stack;
}

void write_fstk(const std::filesystem::path& path, const FeatureStack& stack) {
    write_file(path, encode_fstk(stack));
}

FeatureStack read_fstk(const std::filesystem::path& path) {
    try {
        return decode_fstk(read_file(path));
    } catch (const Error& e) {
        fail(ErrorCode::io_read, path.string() + ": " + e.what());
    }
}

}  // namespace fumo
