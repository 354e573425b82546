#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fumo/image.hpp"

namespace fumo {

struct GammaTriple {
    std::array<double, 3> gamma1{1.0, 1.0, 1.0};
    std::array<double, 3> gamma2{0.0, 0.0, 0.0};

    void validate() const;
};

struct SynthConfig {
    std::array<double, 2> gamma1_range{0.8, 1.0};
    std::array<double, 2> gamma2_range{0.2, 0.6};
    std::uint64_t seed = 0;

    void validate() const;
};

// Random stream for one sample, derived from (seed, sample index) only, so
// draws do not depend on generation order.
class SampleRng {
public:
    SampleRng(std::uint64_t seed, std::uint64_t index);

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index_below(std::size_t n);

private:
    std::mt19937_64 engine_;
};

// M_c = g1_c T_c + g2_c R_c - g1_c g2_c T_c R_c, clamped to [0,1].
ImageF blend(const ImageF& transmission, const ImageF& reflection, const GammaTriple& gamma);

// Six draws: gamma1 for channels 0..2, then gamma2 for channels 0..2.
GammaTriple sample_gammas(const SynthConfig& cfg, SampleRng& rng);

struct ManifestRecord {
    std::size_t index = 0;
    std::string t_path;
    std::string r_path;
    std::optional<std::string> out_path;  // empty when the sample was skipped
    GammaTriple gamma;
    std::uint64_t seed = 0;
    std::string error;
};

std::string manifest_line(const ManifestRecord& record);
ManifestRecord parse_manifest_line(const std::string& line);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

// PNG files directly inside `dir`, sorted by name.
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

// Loads a transmission/reflection pair as 3-channel images, resizing R to T.
std::pair<ImageF, ImageF> load_pair(const std::filesystem::path& t_path, const std::filesystem::path& r_path);

// Writes `count` mixtures as out_dir/mix_NNNNNN.png plus out_dir/manifest.jsonl.
// Unreadable inputs are skipped and recorded with an error.
std::vector<ManifestRecord> synth_batch(const std::filesystem::path& t_dir, const std::filesystem::path& r_dir,
                                        const std::filesystem::path& out_dir, int count, const SynthConfig& cfg,
                                        int jobs = 1);

}  // namespace fumo
