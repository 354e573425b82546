#include "fumo/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace fumo {

using json = nlohmann::json;

std::string to_string(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::mock: return "mock";
        case ScorerKind::remote: return "remote";
        case ScorerKind::fixture: return "fixture";
    }
    return "mock";
}

ScorerKind scorer_kind_from_string(const std::string& name) {
    if (name == "mock") return ScorerKind::mock;
    if (name == "remote") return ScorerKind::remote;
    if (name == "fixture") return ScorerKind::fixture;
    fail(ErrorCode::invalid_input, "unknown scorer \"" + name + "\" (expected mock, remote or fixture)");
}

void PipelineConfig::validate() const {
    scorer.validate();
    require(scorer_kind != ScorerKind::fixture || fixture_path.has_value(), "fixture scorer needs a fixture file");
    require(hf.levels >= 1, "hf levels must be >= 1");
    require(hf.clamp_hi > 0.0, "hf clamp_hi must be positive");
    intensity.validate();
    require(beta >= 0.0, "gate beta must be >= 0");
    gate.validate();
    synth.validate();
    require(jobs >= 1, "jobs must be >= 1");
}

namespace {

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
    require(obj.is_object(), "config section \"" + section + "\" must be an object");
    for (const auto& [key, value] : obj.items()) {
        require(allowed.count(key) != 0, "unknown config key \"" + section + (section.empty() ? "" : ".") + key + "\"");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

void apply_config_json(PipelineConfig& cfg, const json& doc) {
    try {
        check_keys(doc, "", {"scorer", "hf", "intensity", "gate", "synth", "output_dir", "visualize", "raw", "jobs"});
        if (doc.contains("scorer")) {
            const json& s = doc["scorer"];
            check_keys(s, "scorer",
                       {"kind", "fixture", "endpoint_url", "model_name", "temperature", "timeout_seconds",
                        "max_in_flight", "cache_path", "score_prompt", "box_prompt", "top_logprobs", "max_attempts",
                        "backoff_ms"});
            if (s.contains("kind")) cfg.scorer_kind = scorer_kind_from_string(s["kind"].get<std::string>());
            if (s.contains("fixture")) cfg.fixture_path = s["fixture"].get<std::string>();
            if (s.contains("cache_path")) cfg.scorer.cache_path = s["cache_path"].get<std::string>();
            read(s, "endpoint_url", cfg.scorer.endpoint_url);
            read(s, "model_name", cfg.scorer.model_name);
            read(s, "temperature", cfg.scorer.temperature);
            read(s, "timeout_seconds", cfg.scorer.timeout_seconds);
            read(s, "max_in_flight", cfg.scorer.max_in_flight);
            read(s, "score_prompt", cfg.scorer.score_prompt);
            read(s, "box_prompt", cfg.scorer.box_prompt);
            read(s, "top_logprobs", cfg.scorer.top_logprobs);
            read(s, "max_attempts", cfg.scorer.max_attempts);
            read(s, "backoff_ms", cfg.scorer.backoff_ms);
        }
        if (doc.contains("hf")) {
            const json& h = doc["hf"];
            check_keys(h, "hf", {"levels", "clamp_hi"});
            read(h, "levels", cfg.hf.levels);
            read(h, "clamp_hi", cfg.hf.clamp_hi);
        }
        if (doc.contains("intensity")) {
            const json& i = doc["intensity"];
            check_keys(i, "intensity",
                       {"patch_size", "boost_factor", "boost_cap", "gf_radius", "gf_epsilon", "pre_blur_sigma",
                        "clamp_lo", "clamp_hi"});
            read(i, "patch_size", cfg.intensity.patch_size);
            read(i, "boost_factor", cfg.intensity.boost_factor);
            read(i, "boost_cap", cfg.intensity.boost_cap);
            read(i, "gf_radius", cfg.intensity.gf_radius);
            read(i, "gf_epsilon", cfg.intensity.gf_epsilon);
            read(i, "pre_blur_sigma", cfg.intensity.pre_blur_sigma);
            read(i, "clamp_lo", cfg.intensity.clamp_lo);
            read(i, "clamp_hi", cfg.intensity.clamp_hi);
        }
        if (doc.contains("gate")) {
            const json& g = doc["gate"];
            check_keys(g, "gate", {"beta", "beta_max", "warmup_ratio"});
            read(g, "beta", cfg.beta);
            read(g, "beta_max", cfg.gate.beta_max);
            read(g, "warmup_ratio", cfg.gate.warmup_ratio);
        }
        if (doc.contains("synth")) {
            const json& s = doc["synth"];
            check_keys(s, "synth", {"gamma1_range", "gamma2_range", "seed"});
            read(s, "gamma1_range", cfg.synth.gamma1_range);
            read(s, "gamma2_range", cfg.synth.gamma2_range);
            read(s, "seed", cfg.synth.seed);
        }
        if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
        read(doc, "visualize", cfg.visualize);
        read(doc, "raw", cfg.raw);
        read(doc, "jobs", cfg.jobs);
    } catch (const json::exception& e) {
        fail(ErrorCode::invalid_input, std::string("bad config value: ") + e.what());
    }
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_read, "cannot open config " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) fail(ErrorCode::invalid_input, "config " + path.string() + " is not valid JSON");
    PipelineConfig cfg;
    apply_config_json(cfg, doc);
    return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
    json scorer = {
        {"kind", to_string(cfg.scorer_kind)},
        {"endpoint_url", cfg.scorer.endpoint_url},
        {"model_name", cfg.scorer.model_name},
        {"temperature", cfg.scorer.temperature},
        {"timeout_seconds", cfg.scorer.timeout_seconds},
        {"max_in_flight", cfg.scorer.max_in_flight},
        {"score_prompt", cfg.scorer.score_prompt},
        {"box_prompt", cfg.scorer.box_prompt},
        {"top_logprobs", cfg.scorer.top_logprobs},
        {"max_attempts", cfg.scorer.max_attempts},
        {"backoff_ms", cfg.scorer.backoff_ms},
    };
    if (cfg.fixture_path) scorer["fixture"] = cfg.fixture_path->string();
    if (cfg.scorer.cache_path) scorer["cache_path"] = cfg.scorer.cache_path->string();
    return {
        {"scorer", scorer},
        {"hf", {{"levels", cfg.hf.levels}, {"clamp_hi", cfg.hf.clamp_hi}}},
        {"intensity",
         {{"patch_size", cfg.intensity.patch_size},
          {"boost_factor", cfg.intensity.boost_factor},
          {"boost_cap", cfg.intensity.boost_cap},
          {"gf_radius", cfg.intensity.gf_radius},
          {"gf_epsilon", cfg.intensity.gf_epsilon},
          {"pre_blur_sigma", cfg.intensity.pre_blur_sigma},
          {"clamp_lo", cfg.intensity.clamp_lo},
          {"clamp_hi", cfg.intensity.clamp_hi}}},
        {"gate", {{"beta", cfg.beta}, {"beta_max", cfg.gate.beta_max}, {"warmup_ratio", cfg.gate.warmup_ratio}}},
        {"synth",
         {{"gamma1_range", cfg.synth.gamma1_range},
          {"gamma2_range", cfg.synth.gamma2_range},
          {"seed", cfg.synth.seed}}},
        {"output_dir", cfg.output_dir.string()},
        {"visualize", cfg.visualize},
        {"raw", cfg.raw},
        {"jobs", cfg.jobs},
    };
}

std::unique_ptr<Scorer> make_scorer(const PipelineConfig& cfg) {
    switch (cfg.scorer_kind) {
        case ScorerKind::mock: return std::make_unique<MockScorer>();
        case ScorerKind::fixture: {
            require(cfg.fixture_path.has_value(), "fixture scorer needs a fixture file");
            return std::make_unique<FixtureScorer>(FixtureScorer::from_file(*cfg.fixture_path));
        }
        case ScorerKind::remote: {
            const char* key = std::getenv("FUMO_API_KEY");
            if (key == nullptr || *key == '\0') {
                fail(ErrorCode::scorer_unavailable,
                     "FUMO_API_KEY is not set; cannot use remote scorer at " + cfg.scorer.endpoint_url);
            }
            return std::make_unique<RemoteScorer>(cfg.scorer);
        }
    }
    fail(ErrorCode::invalid_input, "unknown scorer kind");
}

}  // namespace fumo
