#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fumo/gate.hpp"
#include "fumo/hf_prior.hpp"
#include "fumo/intensity_prior.hpp"
#include "fumo/mixture.hpp"
#include "fumo/remote_scorer.hpp"

namespace fumo {

enum class ScorerKind { mock, remote, fixture };

std::string to_string(ScorerKind kind);
ScorerKind scorer_kind_from_string(const std::string& name);

// Settings for every command. Precedence: flags > config file > defaults.
struct PipelineConfig {
    ScorerKind scorer_kind = ScorerKind::mock;
    ScorerConfig scorer;
    std::optional<std::filesystem::path> fixture_path;
    HfPriorParams hf;
    IntensityPriorParams intensity;
    double beta = 0.25;  // gate strength at inference (schedule fully warmed up)
    GateConfig gate;
    SynthConfig synth;
    std::filesystem::path output_dir = ".";
    bool visualize = false;
    bool raw = false;
    int jobs = 1;

    void validate() const;
};

// Overlays the keys present in `doc` onto `cfg`. Unknown keys are errors.
void apply_config_json(PipelineConfig& cfg, const nlohmann::json& doc);
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const PipelineConfig& cfg);

// Builds the scorer the config selects. Remote scorers require FUMO_API_KEY.
std::unique_ptr<Scorer> make_scorer(const PipelineConfig& cfg);

}  // namespace fumo
