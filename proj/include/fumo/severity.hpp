#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fumo/image.hpp"

namespace fumo {

inline constexpr std::size_t kNumCategories = 5;

// Ordered severity levels; ordinal weight of index k is k + 1.
inline constexpr std::array<std::string_view, kNumCategories> kCategoryNames = {
    "None", "Minor", "Mid", "Major", "Critical"};

struct CategoryLogits {
    std::array<double, kNumCategories> values{};
};

class SeverityDistribution {
public:
    // Validates nonnegativity and unit sum (1e-9).
    static SeverityDistribution from_probs(const std::array<double, kNumCategories>& probs);

    static SeverityDistribution one_hot(std::size_t category);

    const std::array<double, kNumCategories>& probs() const noexcept { return probs_; }
    double operator[](std::size_t k) const noexcept { return probs_[k]; }

    bool operator==(const SeverityDistribution&) const = default;

private:
    explicit SeverityDistribution(const std::array<double, kNumCategories>& probs) : probs_(probs) {}
    std::array<double, kNumCategories> probs_;
};

SeverityDistribution restricted_softmax(const CategoryLogits& logits, double tau);

// Expected ordinal weight, in [1,5].
double ordinal_score(const SeverityDistribution& dist);

// Normalized box; 0 <= x0 < x1 <= 1, 0 <= y0 < y1 <= 1.
struct BBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;

    bool valid() const noexcept;
    bool operator==(const BBox&) const = default;
};

struct PatchIndex {
    int row = 0;
    int col = 0;
};

// Source of severity judgements. Implementations must tolerate concurrent
// calls.
class Scorer {
public:
    virtual ~Scorer() = default;

    virtual SeverityDistribution score_patch(const ImageF& patch, PatchIndex index) const = 0;
    virtual std::vector<BBox> detect_reflection_boxes(const ImageF& img) const = 0;
    virtual std::string name() const = 0;
};

// Deterministic stand-in driven by patch statistics.
class MockScorer final : public Scorer {
public:
    static constexpr double kStdThreshold = 0.15;
    static constexpr int kStdWindow = 9;

    SeverityDistribution score_patch(const ImageF& patch, PatchIndex index) const override;
    std::vector<BBox> detect_reflection_boxes(const ImageF& img) const override;
    std::string name() const override { return "mock"; }

    // clamp(2 std + |mean - 0.5|, 0, 1) over all samples of the patch.
    static double activity(const ImageF& patch);
};

// Replays distributions and boxes from a JSON file:
//   {"0,0": [p0..p4], "0,1": [...], ..., "boxes": [{"x0":..,"y0":..,"x1":..,"y1":..}]}
class FixtureScorer final : public Scorer {
public:
    static FixtureScorer from_file(const std::filesystem::path& path);
    static FixtureScorer from_json_text(const std::string& text);

    FixtureScorer(std::map<std::pair<int, int>, SeverityDistribution> patches, std::vector<BBox> boxes);

    SeverityDistribution score_patch(const ImageF& patch, PatchIndex index) const override;
    std::vector<BBox> detect_reflection_boxes(const ImageF& img) const override;
    std::string name() const override { return "fixture"; }

private:
    std::map<std::pair<int, int>, SeverityDistribution> patches_;
    std::vector<BBox> boxes_;
};

// Keeps the valid entries of a JSON array of boxes, given either as
// {"x0","y0","x1","y1"} objects or [x0, y0, x1, y1] arrays; the rest are
// dropped with a warning.
std::vector<BBox> parse_box_list(const nlohmann::json& array);

// Local standard deviation over a square window with replicate border.
ScalarMap local_stddev(const ScalarMap& map, int window);

}  // namespace fumo
