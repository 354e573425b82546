#include "fumo/severity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fumo/log.hpp"

namespace fumo {

using json = nlohmann::json;

SeverityDistribution SeverityDistribution::from_probs(const std::array<double, kNumCategories>& probs) {
    double sum = 0.0;
    for (double p : probs) {
        require(std::isfinite(p) && p >= 0.0, "severity probabilities must be finite and nonnegative");
        sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-9, "severity probabilities must sum to 1");
    return SeverityDistribution(probs);
}

SeverityDistribution SeverityDistribution::one_hot(std::size_t category) {
    require(category < kNumCategories, "category index out of range");
    std::array<double, kNumCategories> probs{};
    probs[category] = 1.0;
    return SeverityDistribution(probs);
}

SeverityDistribution restricted_softmax(const CategoryLogits& logits, double tau) {
    require(tau > 0.0 && std::isfinite(tau), "softmax temperature must be positive");
    for (double l : logits.values) {
        require(std::isfinite(l), "category logits must be finite");
    }
    const double peak = *std::max_element(logits.values.begin(), logits.values.end());
    std::array<double, kNumCategories> weights{};
    double total = 0.0;
    for (std::size_t k = 0; k < kNumCategories; ++k) {
        weights[k] = std::exp((logits.values[k] - peak) / tau);
        total += weights[k];
    }
    for (double& w : weights) {
        w /= total;
    }
    return SeverityDistribution::from_probs(weights);
}

double ordinal_score(const SeverityDistribution& dist) {
    // sum (k+1) p_k rewritten around the midpoint weight 3; symmetric pairs
    // cancel exactly, so uniform mass scores exactly 3.
    const auto& p = dist.probs();
    const double s = 3.0 + (2.0 * (p[4] - p[0]) + (p[3] - p[1]));
    return std::clamp(s, 1.0, 5.0);
}

bool BBox::valid() const noexcept {
    return std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) && std::isfinite(y1) && 0.0 <= x0 &&
           x0 < x1 && x1 <= 1.0 && 0.0 <= y0 && y0 < y1 && y1 <= 1.0;
}

ScalarMap local_stddev(const ScalarMap& map, int window) {
    require(window >= 1 && window % 2 == 1, "stddev window must be a positive odd size");
    const int r = window / 2;
    const int h = map.height();
    const int w = map.width();
    const int ph = h + 2 * r;
    const int pw = w + 2 * r;
    // Integral images over a replicate-padded copy, shifted by the first
    // sample to keep the variance subtraction well conditioned.
    const double shift = map.at(0, 0);
    std::vector<double> s1(static_cast<std::size_t>(ph + 1) * (pw + 1), 0.0);
    std::vector<double> s2(s1.size(), 0.0);
    auto idx = [pw](int y, int x) { return static_cast<std::size_t>(y) * (pw + 1) + x; };
    for (int y = 0; y < ph; ++y) {
        double row1 = 0.0;
        double row2 = 0.0;
        for (int x = 0; x < pw; ++x) {
            const double v = map.clamped(y - r, x - r) - shift;
            row1 += v;
            row2 += v * v;
            s1[idx(y + 1, x + 1)] = s1[idx(y, x + 1)] + row1;
            s2[idx(y + 1, x + 1)] = s2[idx(y, x + 1)] + row2;
        }
    }
    const double n = static_cast<double>(window) * window;
    ScalarMap out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int y1 = y + window;
            const int x1 = x + window;
            const double a = s1[idx(y1, x1)] - s1[idx(y, x1)] - s1[idx(y1, x)] + s1[idx(y, x)];
            const double b = s2[idx(y1, x1)] - s2[idx(y, x1)] - s2[idx(y1, x)] + s2[idx(y, x)];
            const double mean = a / n;
            out.at(y, x) = std::sqrt(std::max(0.0, b / n - mean * mean));
        }
    }
    return out;
}

double MockScorer::activity(const ImageF& patch) {
    auto samples = patch.data();
    const double n = static_cast<double>(samples.size());
    const double shift = samples[0];
    double dev = 0.0;
    for (double v : samples) {
        dev += v - shift;
    }
    const double mean = shift + dev / n;
    double var = 0.0;
    for (double v : samples) {
        var += (v - mean) * (v - mean);
    }
    const double stddev = std::sqrt(var / n);
    return std::clamp(2.0 * stddev + std::abs(mean - 0.5), 0.0, 1.0);
}

SeverityDistribution MockScorer::score_patch(const ImageF& patch, PatchIndex) const {
    const double v = activity(patch);
    CategoryLogits logits;
    for (std::size_t k = 0; k < kNumCategories; ++k) {
        const double d = v - static_cast<double>(k) / 4.0;
        logits.values[k] = -(d * d) / 0.02;
    }
    return restricted_softmax(logits, 1.0);
}

std::vector<BBox> MockScorer::detect_reflection_boxes(const ImageF& img) const {
    const ScalarMap stddev = local_stddev(to_grayscale(img), kStdWindow);
    const int h = img.height();
    const int w = img.width();
    std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
    auto active = [&](int y, int x) { return stddev.at(y, x) > kStdThreshold; };

    std::size_t best_size = 0;
    int bx0 = 0, by0 = 0, bx1 = 0, by1 = 0;
    int next_label = 0;
    std::deque<std::pair<int, int>> queue;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            if (!active(sy, sx) || label[static_cast<std::size_t>(sy) * w + sx] >= 0) {
                continue;
            }
            // 4-connected flood fill.
            const int id = next_label++;
            std::size_t size = 0;
            int x0 = sx, y0 = sy, x1 = sx, y1 = sy;
            label[static_cast<std::size_t>(sy) * w + sx] = id;
            queue.emplace_back(sy, sx);
            while (!queue.empty()) {
                auto [y, x] = queue.front();
                queue.pop_front();
                ++size;
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                constexpr int dy[4] = {-1, 1, 0, 0};
                constexpr int dx[4] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int ny = y + dy[k];
                    const int nx = x + dx[k];
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    auto& l = label[static_cast<std::size_t>(ny) * w + nx];
                    if (l < 0 && active(ny, nx)) {
                        l = id;
                        queue.emplace_back(ny, nx);
                    }
                }
            }
            if (size > best_size) {
                best_size = size;
                bx0 = x0;
                by0 = y0;
                bx1 = x1;
                by1 = y1;
            }
        }
    }
    if (best_size == 0) {
        return {};
    }
    return {BBox{static_cast<double>(bx0) / w, static_cast<double>(by0) / h, static_cast<double>(bx1 + 1) / w,
                 static_cast<double>(by1 + 1) / h}};
}

namespace {

std::optional<BBox> box_from_json(const json& item) {
    BBox box;
    if (item.is_object()) {
        for (const char* key : {"x0", "y0", "x1", "y1"}) {
            if (!item.contains(key) || !item[key].is_number()) return std::nullopt;
        }
        box = {item["x0"].get<double>(), item["y0"].get<double>(), item["x1"].get<double>(),
               item["y1"].get<double>()};
    } else if (item.is_array() && item.size() == 4) {
        for (const auto& v : item) {
            if (!v.is_number()) return std::nullopt;
        }
        box = {item[0].get<double>(), item[1].get<double>(), item[2].get<double>(), item[3].get<double>()};
    } else {
        return std::nullopt;
    }
    if (!box.valid()) return std::nullopt;
    return box;
}

}  // namespace

std::vector<BBox> parse_box_list(const json& array) {
    std::vector<BBox> boxes;
    if (!array.is_array()) return boxes;
    for (const auto& item : array) {
        if (auto box = box_from_json(item)) {
            boxes.push_back(*box);
        } else {
            log_warn("dropping invalid box " + item.dump());
        }
    }
    return boxes;
}

FixtureScorer::FixtureScorer(std::map<std::pair<int, int>, SeverityDistribution> patches, std::vector<BBox> boxes)
    : patches_(std::move(patches)), boxes_(std::move(boxes)) {}

FixtureScorer FixtureScorer::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::invalid_input, std::string("fixture is not valid JSON: ") + e.what());
    }
    require(doc.is_object(), "fixture must be a JSON object");
    std::map<std::pair<int, int>, SeverityDistribution> patches;
    std::vector<BBox> boxes;
    for (const auto& [key, value] : doc.items()) {
        if (key == "boxes") {
            boxes = parse_box_list(value);
            continue;
        }
        int row = 0;
        int col = 0;
        char comma = 0;
        std::istringstream in(key);
        if (!(in >> row >> comma >> col) || comma != ',' || !in.eof() || row < 0 || col < 0) {
            fail(ErrorCode::invalid_input, "fixture key \"" + key + "\" is not of the form \"row,col\"");
        }
        require(value.is_array() && value.size() == kNumCategories,
                "fixture entry \"" + key + "\" must hold 5 probabilities");
        std::array<double, kNumCategories> probs{};
        for (std::size_t k = 0; k < kNumCategories; ++k) {
            require(value[k].is_number(), "fixture entry \"" + key + "\" has a non-numeric probability");
            probs[k] = value[k].get<double>();
        }
        patches.emplace(std::make_pair(row, col), SeverityDistribution::from_probs(probs));
    }
    return FixtureScorer(std::move(patches), std::move(boxes));
}

FixtureScorer FixtureScorer::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::io_read, "cannot open fixture " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

SeverityDistribution FixtureScorer::score_patch(const ImageF&, PatchIndex index) const {
    auto it = patches_.find({index.row, index.col});
    if (it == patches_.end()) {
        fail(ErrorCode::fixture_incomplete,
             "fixture has no entry for patch " + std::to_string(index.row) + "," + std::to_string(index.col));
    }
    return it->second;
}

std::vector<BBox> FixtureScorer::detect_reflection_boxes(const ImageF&) const { return boxes_; }

}  // namespace fumo
