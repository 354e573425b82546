#include "fumo/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fumo/image_io.hpp"
#include "fumo/log.hpp"
#include "fumo/parallel.hpp"

namespace fumo {

using json = nlohmann::json;

void GammaTriple::validate() const {
    for (double v : gamma1) require(v >= 0.0 && v <= 1.0, "gamma1 components must lie in [0,1]");
    for (double v : gamma2) require(v >= 0.0 && v <= 1.0, "gamma2 components must lie in [0,1]");
}

void SynthConfig::validate() const {
    for (const auto& r : {gamma1_range, gamma2_range}) {
        require(r[0] >= 0.0 && r[1] <= 1.0 && r[0] <= r[1], "gamma ranges must satisfy 0 <= lo <= hi <= 1");
    }
}

SampleRng::SampleRng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    engine_.seed(seq);
}

double SampleRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t SampleRng::index_below(std::size_t n) {
    require(n > 0, "cannot draw an index from an empty range");
    return std::min(static_cast<std::size_t>(uniform() * static_cast<double>(n)), n - 1);
}

ImageF blend(const ImageF& transmission, const ImageF& reflection, const GammaTriple& gamma) {
    require(transmission.same_shape(reflection), "transmission and reflection differ in shape");
    require(transmission.channels() == 3, "blending needs 3-channel images");
    gamma.validate();
    ImageF out(transmission.height(), transmission.width(), 3);
    auto t = transmission.data();
    auto r = reflection.data();
    auto m = out.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
        const std::size_t c = i % 3;
        const double g1 = gamma.gamma1[c];
        const double g2 = gamma.gamma2[c];
        m[i] = std::clamp(g1 * t[i] + g2 * r[i] - g1 * g2 * t[i] * r[i], 0.0, 1.0);
    }
    return out;
}

GammaTriple sample_gammas(const SynthConfig& cfg, SampleRng& rng) {
    cfg.validate();
    GammaTriple g;
    for (double& v : g.gamma1) v = rng.uniform(cfg.gamma1_range[0], cfg.gamma1_range[1]);
    for (double& v : g.gamma2) v = rng.uniform(cfg.gamma2_range[0], cfg.gamma2_range[1]);
    return g;
}

std::string manifest_line(const ManifestRecord& record) {
    json j = {
        {"index", record.index},
        {"t_path", record.t_path},
        {"r_path", record.r_path},
        {"out_path", record.out_path ? json(*record.out_path) : json(nullptr)},
        {"gamma1", record.gamma.gamma1},
        {"gamma2", record.gamma.gamma2},
        {"seed", record.seed},
    };
    if (!record.error.empty()) {
        j["skipped"] = true;
        j["error"] = record.error;
    }
    return j.dump();
}

ManifestRecord parse_manifest_line(const std::string& line) {
    try {
        const json j = json::parse(line);
        ManifestRecord r;
        r.index = j.at("index").get<std::size_t>();
        r.t_path = j.at("t_path").get<std::string>();
        r.r_path = j.at("r_path").get<std::string>();
        if (!j.at("out_path").is_null()) r.out_path = j["out_path"].get<std::string>();
        r.gamma.gamma1 = j.at("gamma1").get<std::array<double, 3>>();
        r.gamma.gamma2 = j.at("gamma2").get<std::array<double, 3>>();
        r.seed = j.value("seed", std::uint64_t{0});
        r.error = j.value("error", std::string{});
        return r;
    } catch (const json::exception& e) {
        fail(ErrorCode::io_read, std::string("malformed manifest record: ") + e.what());
    }
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_read, "cannot open manifest " + path.string());
    std::vector<ManifestRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) records.push_back(parse_manifest_line(line));
    }
    return records;
}

std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        fail(ErrorCode::invalid_input, dir.string() + " is not a directory");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

namespace {

ImageF as_rgb(const ImageF& img) {
    if (img.channels() == 3) return img;
    ImageF out(img.height(), img.width(), 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, 0);
        }
    }
    return out;
}

}  // namespace

std::pair<ImageF, ImageF> load_pair(const std::filesystem::path& t_path, const std::filesystem::path& r_path) {
    ImageF t = as_rgb(read_png(t_path));
    ImageF r = as_rgb(read_png(r_path));
    if (!r.same_shape(t)) r = resize_bilinear(r, t.height(), t.width());
    return {std::move(t), std::move(r)};
}

std::vector<ManifestRecord> synth_batch(const std::filesystem::path& t_dir, const std::filesystem::path& r_dir,
                                        const std::filesystem::path& out_dir, int count, const SynthConfig& cfg,
                                        int jobs) {
    require(count >= 1, "synthesis count must be >= 1");
    require(jobs >= 1, "jobs must be >= 1");
    cfg.validate();
    const auto t_files = list_pngs(t_dir);
    const auto r_files = list_pngs(r_dir);
    require(!t_files.empty(), "no PNG files in transmission directory " + t_dir.string());
    require(!r_files.empty(), "no PNG files in reflection directory " + r_dir.string());
    std::filesystem::create_directories(out_dir);

    std::vector<ManifestRecord> records(static_cast<std::size_t>(count));
    parallel_for(count, jobs, [&](int i) {
        SampleRng rng(cfg.seed, static_cast<std::uint64_t>(i));
        ManifestRecord& rec = records[i];
        rec.index = static_cast<std::size_t>(i);
        rec.seed = cfg.seed;
        rec.t_path = t_files[rng.index_below(t_files.size())].string();
        rec.r_path = r_files[rng.index_below(r_files.size())].string();
        rec.gamma = sample_gammas(cfg, rng);
        char name[32];
        std::snprintf(name, sizeof(name), "mix_%06d.png", i);
        const auto out_path = out_dir / name;
        ImageF mixture(1, 1, 3);
        try {
            auto [t, r] = load_pair(rec.t_path, rec.r_path);
            mixture = blend(t, r, rec.gamma);
        } catch (const Error& e) {
            rec.error = e.what();
            log_warn("skipping sample " + std::to_string(i) + ": " + e.what());
            return;
        }
        write_png(out_path, mixture);
        rec.out_path = out_path.string();
    });

    const auto manifest_path = out_dir / "manifest.jsonl";
    std::ofstream manifest(manifest_path, std::ios::trunc);
    for (const auto& rec : records) manifest << manifest_line(rec) << '\n';
    if (!manifest) fail(ErrorCode::io_write, "failed writing " + manifest_path.string());
    return records;
}

}  // namespace fumo
