#include "fumo/remote_scorer.hpp"

#include <httplib.h>

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <thread>

#include "fumo/image_io.hpp"
#include "fumo/log.hpp"

namespace fumo {

using json = nlohmann::json;

void ScorerConfig::validate() const {
    require(temperature > 0.0 && std::isfinite(temperature), "scorer temperature must be positive");
    require(max_in_flight >= 1, "max_in_flight must be >= 1");
    require(timeout_seconds > 0.0, "scorer timeout must be positive");
    require(max_attempts >= 1, "max_attempts must be >= 1");
    require(backoff_ms >= 0, "backoff_ms must be >= 0");
    require(top_logprobs >= 1 && top_logprobs <= 20, "top_logprobs must be in [1, 20]");
}

ParsedUrl parse_endpoint_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    require(scheme_end != std::string::npos, "endpoint URL needs a scheme: " + url);
    const std::string scheme = url.substr(0, scheme_end);
    require(scheme == "http" || scheme == "https", "endpoint URL scheme must be http or https: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl parsed;
    parsed.scheme_host_port = url.substr(0, path_start);
    parsed.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    require(parsed.scheme_host_port.size() > scheme_end + 3, "endpoint URL has no host: " + url);
    return parsed;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorCode::protocol, "SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        hex.push_back(kHex[digest[i] >> 4]);
        hex.push_back(kHex[digest[i] & 0xf]);
    }
    return hex;
}

std::string request_key(const std::vector<std::uint8_t>& png, std::string_view prompt, std::string_view model) {
    std::string material(png.begin(), png.end());
    material.append(prompt);
    material.append(model);
    return sha256_hex(material);
}

json build_chat_request(const ScorerConfig& cfg, std::string_view prompt, const std::vector<std::uint8_t>& png,
                        bool want_logprobs) {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", std::string(prompt)}});
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
    json body = {
        {"model", cfg.model_name},
        {"messages", json::array({{{"role", "user"}, {"content", std::move(content)}}})},
        {"temperature", 0},
        {"stream", false},
    };
    if (want_logprobs) {
        body["max_tokens"] = 1;
        body["logprobs"] = true;
        body["top_logprobs"] = cfg.top_logprobs;
    } else {
        body["max_tokens"] = 512;
    }
    return body;
}

namespace {

std::string normalize_token(std::string_view token) {
    std::size_t b = 0;
    std::size_t e = token.size();
    auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
    while (b < e && !is_alpha(token[b])) ++b;
    while (e > b && !is_alpha(token[e - 1])) --e;
    std::string out(token.substr(b, e - b));
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string lower_name(std::size_t category) {
    std::string name(kCategoryNames[category]);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    return name;
}

}  // namespace

bool token_matches_category(std::string_view token, std::size_t category) {
    const std::string t = normalize_token(token);
    if (t.size() < 2) return false;
    const std::string name = lower_name(category);
    if (t == name) return true;
    if (name.compare(0, t.size(), t) != 0 || t.size() > name.size()) return false;
    for (std::size_t other = 0; other < kNumCategories; ++other) {
        if (other != category && lower_name(other).compare(0, t.size(), t) == 0) return false;
    }
    return true;
}

CategoryLogits extract_category_logits(const json& response) {
    std::vector<std::pair<std::string, double>> candidates;
    try {
        const json& logprobs = response.at("choices").at(0).at("logprobs");
        if (logprobs.contains("content")) {
            const json& first = logprobs.at("content").at(0);
            candidates.emplace_back(first.at("token").get<std::string>(), first.at("logprob").get<double>());
            for (const auto& entry : first.at("top_logprobs")) {
                candidates.emplace_back(entry.at("token").get<std::string>(), entry.at("logprob").get<double>());
            }
        } else {
            // Legacy completions shape: top_logprobs[0] is a token -> logprob object.
            for (const auto& [token, lp] : logprobs.at("top_logprobs").at(0).items()) {
                candidates.emplace_back(token, lp.get<double>());
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::protocol, std::string("response lacks first-token logprobs: ") + e.what());
    }

    std::array<std::optional<double>, kNumCategories> found{};
    for (const auto& [token, lp] : candidates) {
        if (!std::isfinite(lp)) continue;
        for (std::size_t k = 0; k < kNumCategories; ++k) {
            if (token_matches_category(token, k) && (!found[k] || lp > *found[k])) {
                found[k] = lp;
            }
        }
    }
    double lowest = INFINITY;
    for (const auto& f : found) {
        if (f) lowest = std::min(lowest, *f);
    }
    if (!std::isfinite(lowest)) {
        fail(ErrorCode::protocol, "no severity category among the returned top tokens");
    }
    CategoryLogits logits;
    for (std::size_t k = 0; k < kNumCategories; ++k) {
        logits.values[k] = found[k].value_or(lowest - 10.0);
    }
    return logits;
}

std::string response_message_text(const json& response) {
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        fail(ErrorCode::protocol, std::string("response has no message content: ") + e.what());
    }
}

std::vector<BBox> parse_box_payload(std::string_view text) {
    const auto open = text.find('[');
    const auto close = text.rfind(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        log_warn("box payload has no JSON array; treating as no boxes");
        return {};
    }
    json parsed = json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array()) {
        log_warn("box payload is not a parseable JSON array; treating as no boxes");
        return {};
    }
    return parse_box_list(parsed);
}

ResponseCache::ResponseCache(std::optional<std::filesystem::path> path) : path_(std::move(path)) {
    if (!path_ || !std::filesystem::exists(*path_)) return;
    std::ifstream in(*path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.contains("key")) {
            log_warn("cache " + path_->string() + ":" + std::to_string(line_no) + " is malformed; skipped");
            continue;
        }
        const std::string key = record["key"].get<std::string>();
        if (record.contains("logits") && record["logits"].is_array() && record["logits"].size() == kNumCategories) {
            CategoryLogits logits;
            for (std::size_t k = 0; k < kNumCategories; ++k) logits.values[k] = record["logits"][k].get<double>();
            entries_[key] = logits;
        } else if (record.contains("boxes")) {
            entries_[key] = parse_box_list(record["boxes"]);
        }
    }
}

std::optional<ResponseCache::Entry> ResponseCache::find(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::store(const std::string& key, const Entry& entry) {
    json record = {{"key", key}};
    if (const auto* logits = std::get_if<CategoryLogits>(&entry)) {
        record["logits"] = logits->values;
    } else {
        json boxes = json::array();
        for (const auto& b : std::get<std::vector<BBox>>(entry)) {
            boxes.push_back({{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}});
        }
        record["boxes"] = std::move(boxes);
    }
    std::lock_guard lock(mutex_);
    entries_[key] = entry;
    if (path_) {
        std::ofstream out(*path_, std::ios::app);
        out << record.dump() << '\n';
        if (!out) log_warn("could not append to cache " + path_->string());
    }
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

struct RemoteScorer::State {
    explicit State(const ScorerConfig& cfg) : in_flight(cfg.max_in_flight), cache(cfg.cache_path) {}

    std::counting_semaphore<> in_flight;
    ResponseCache cache;
    std::atomic<std::size_t> calls{0};
};

RemoteScorer::RemoteScorer(ScorerConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    url_ = parse_endpoint_url(cfg_.endpoint_url);
    if (const char* key = std::getenv("FUMO_API_KEY")) api_key_ = key;
    state_ = std::make_unique<State>(cfg_);
}

RemoteScorer::~RemoteScorer() = default;

std::size_t RemoteScorer::network_calls() const noexcept { return state_->calls.load(); }

json RemoteScorer::post_with_retry(const json& body) const {
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms << (attempt - 1)));
        }
        httplib::Result res;
        {
            state_->in_flight.acquire();
            state_->calls.fetch_add(1);
            httplib::Client client(url_.scheme_host_port);
            const auto timeout = std::chrono::milliseconds(static_cast<long>(cfg_.timeout_seconds * 1000.0));
            client.set_connection_timeout(timeout);
            client.set_read_timeout(timeout);
            client.set_write_timeout(timeout);
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
            res = client.Post(url_.path, headers, payload, "application/json");
            state_->in_flight.release();
        }
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            json parsed = json::parse(res->body, nullptr, false);
            if (parsed.is_discarded()) fail(ErrorCode::protocol, "endpoint returned non-JSON body");
            return parsed;
        }
        last_error = "HTTP status " + std::to_string(res->status);
        if (res->status != 429 && res->status < 500) break;
    }
    fail(ErrorCode::scorer_unavailable, "scorer endpoint " + cfg_.endpoint_url + " unavailable (" + last_error + ")");
}

SeverityDistribution RemoteScorer::score_patch(const ImageF& patch, PatchIndex) const {
    const auto png = encode_png(patch);
    const std::string key = request_key(png, cfg_.score_prompt, cfg_.model_name);
    if (auto hit = state_->cache.find(key)) {
        if (const auto* logits = std::get_if<CategoryLogits>(&*hit)) {
            return restricted_softmax(*logits, cfg_.temperature);
        }
    }
    const CategoryLogits logits = extract_category_logits(post_with_retry(build_chat_request(cfg_, cfg_.score_prompt, png, true)));
    state_->cache.store(key, logits);
    return restricted_softmax(logits, cfg_.temperature);
}

std::vector<BBox> RemoteScorer::detect_reflection_boxes(const ImageF& img) const {
    const auto png = encode_png(img);
    const std::string key = request_key(png, cfg_.box_prompt, cfg_.model_name);
    if (auto hit = state_->cache.find(key)) {
        if (const auto* boxes = std::get_if<std::vector<BBox>>(&*hit)) return *boxes;
    }
    const json response = post_with_retry(build_chat_request(cfg_, cfg_.box_prompt, png, false));
    auto boxes = parse_box_payload(response_message_text(response));
    state_->cache.store(key, boxes);
    return boxes;
}

}  // namespace fumo
