#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fumo/severity.hpp"

namespace fumo {

inline constexpr const char* kDefaultScorePrompt =
    "This image patch may have been photographed through glass. Rate how strongly reflections from the "
    "glass interfere with the scene in this patch. Answer with exactly one word from: None, Minor, Mid, "
    "Major, Critical.";

inline constexpr const char* kDefaultBoxPrompt =
    "This image may have been photographed through glass. Locate the regions dominated by reflections. "
    "Respond only with a JSON array of objects {\"x0\": .., \"y0\": .., \"x1\": .., \"y1\": ..} in "
    "coordinates normalized to [0,1], or [] if there are none.";

struct ScorerConfig {
    std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
    std::string model_name = "gpt-4o-mini";
    double temperature = 1.0;  // softmax temperature over the category logits
    double timeout_seconds = 60.0;
    int max_in_flight = 4;
    std::optional<std::filesystem::path> cache_path;
    std::string score_prompt = kDefaultScorePrompt;
    std::string box_prompt = kDefaultBoxPrompt;
    int top_logprobs = 20;
    int max_attempts = 3;
    int backoff_ms = 500;

    void validate() const;
};

struct ParsedUrl {
    std::string scheme_host_port;  // e.g. "https://api.example.com:443"
    std::string path;
};

ParsedUrl parse_endpoint_url(const std::string& url);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::string sha256_hex(std::string_view data);

// Cache key: SHA-256 over PNG bytes, prompt and model name, concatenated.
std::string request_key(const std::vector<std::uint8_t>& png, std::string_view prompt, std::string_view model);

nlohmann::json build_chat_request(const ScorerConfig& cfg, std::string_view prompt,
                                  const std::vector<std::uint8_t>& png, bool want_logprobs);

// True when a generated token names the category: case-insensitive, after
// trimming non-letters, either the full name or a prefix of it that no other
// category shares (a multi-token name's first sub-token).
bool token_matches_category(std::string_view token, std::size_t category);

// Pulls category log-probabilities from the first generated token's
// top_logprobs. Log-probabilities differ from logits by a per-position
// constant, which the restricted softmax cancels. Categories absent from
// the top-k get (minimum observed - 10). Throws protocol errors.
CategoryLogits extract_category_logits(const nlohmann::json& response);

// Tolerant parse of the assistant text: finds the outermost [...] and keeps
// valid boxes. Never throws; unparseable payloads yield an empty list.
std::vector<BBox> parse_box_payload(std::string_view text);

std::string response_message_text(const nlohmann::json& response);

// Append-only JSON-lines cache of scorer results, safe for concurrent use.
class ResponseCache {
public:
    using Entry = std::variant<CategoryLogits, std::vector<BBox>>;

    // Loads existing records; with no path the cache is memory-only.
    explicit ResponseCache(std::optional<std::filesystem::path> path);

    std::optional<Entry> find(const std::string& key) const;
    void store(const std::string& key, const Entry& entry);
    std::size_t size() const;

private:
    std::optional<std::filesystem::path> path_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Entry> entries_;
};

// OpenAI-compatible chat-completions scorer. API key from FUMO_API_KEY.
class RemoteScorer final : public Scorer {
public:
    explicit RemoteScorer(ScorerConfig cfg);
    ~RemoteScorer() override;

    SeverityDistribution score_patch(const ImageF& patch, PatchIndex index) const override;
    std::vector<BBox> detect_reflection_boxes(const ImageF& img) const override;
    std::string name() const override { return "remote"; }

    const ScorerConfig& config() const noexcept { return cfg_; }
    std::size_t network_calls() const noexcept;

private:
    nlohmann::json post_with_retry(const nlohmann::json& body) const;

    struct State;
    ScorerConfig cfg_;
    std::string api_key_;
    ParsedUrl url_;
    std::unique_ptr<State> state_;
};

}  // namespace fumo
