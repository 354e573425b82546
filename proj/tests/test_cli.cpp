#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fumo/cli.hpp"
#include "fumo/gate.hpp"
#include "fumo/image_io.hpp"
#include "test_support.hpp"

using namespace fumo;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), {"fumo", "-q"});
    return run_cli(args);
}

bool same_bytes(const fs::path& a, const fs::path& b) { return read_file(a) == read_file(b); }

void write_json(const fs::path& path, const nlohmann::json& j) { std::ofstream(path) << j.dump(); }

}  // namespace

TEST_CASE("output stems") {
    CHECK(output_stem("dir/photo.png") == "photo");
    CHECK(output_stem("photo.int.fmap") == "photo");
    CHECK(output_stem("photo.hf.png") == "photo");
    CHECK(output_stem("my.photo.png") == "my.photo");
}

TEST_CASE("hf-prior command") {
    testing::TempDir dir("cli_hf");
    const auto in = dir / "in.png";
    write_png(in, testing::random_image(40, 48, 3, 1));

    CHECK(run({"hf-prior", in.string(), "-o", (dir / "out").string()}) == kExitOk);
    CHECK(fs::exists(dir / "out" / "in.hf.png"));
    CHECK_FALSE(fs::exists(dir / "out" / "in.hf.fmap"));

    SUBCASE("one level on a constant image is all zeros") {
        write_png(dir / "flat.png", ImageF(32, 32, 3, 0.6));
        CHECK(run({"hf-prior", (dir / "flat.png").string(), "--levels", "1", "-o", (dir / "out").string()}) == kExitOk);
        const auto m = read_map_png(dir / "out" / "flat.hf.png");
        for (double v : m.data()) CHECK(v == 0.0);
    }
    SUBCASE("raw output reloads bit-exactly") {
        CHECK(run({"hf-prior", in.string(), "--raw", "--heatmap", "-o", (dir / "raw").string()}) == kExitOk);
        const auto expected = hf_prior(read_png(in), 4, 0.25);
        const auto back = read_fmap(dir / "raw" / "in.hf.fmap");
        REQUIRE(back.same_shape(expected));
        for (std::size_t i = 0; i < back.size(); ++i) CHECK(back.data()[i] == static_cast<float>(expected.data()[i]));
        CHECK(fs::exists(dir / "raw" / "in.hf.heat.png"));
    }
    SUBCASE("exit codes") {
        CHECK(run({"hf-prior", (dir / "missing.png").string(), "-o", (dir / "out").string()}) == kExitBadInput);
        write_file(dir / "junk.png", {'n', 'o', 'p', 'e'});
        CHECK(run({"hf-prior", (dir / "junk.png").string(), "-o", (dir / "out").string()}) == kExitBadInput);
        write_file(dir / "blocker", {'x'});
        CHECK(run({"hf-prior", in.string(), "-o", (dir / "blocker" / "sub").string()}) == kExitWriteFailed);
        CHECK(run({"hf-prior", in.string(), "--levels", "0", "-o", (dir / "out").string()}) == kExitBadInput);
        CHECK(run({"hf-prior"}) != kExitOk);
    }
}

TEST_CASE("int-prior command") {
    testing::TempDir dir("cli_int");
    const auto in = dir / "in.png";
    write_png(in, testing::random_image(64, 64, 3, 2));

    CHECK(run({"int-prior", in.string(), "--scorer", "mock", "--raw", "-o", (dir / "out").string()}) == kExitOk);
    CHECK(fs::exists(dir / "out" / "in.int.png"));
    CHECK(fs::exists(dir / "out" / "in.int.fmap"));
    const auto dump = nlohmann::json::parse(std::ifstream(dir / "out" / "in.int.json"));
    CHECK(dump["rows"] == 2);
    CHECK(dump["cols"] == 2);
    CHECK(dump["patch_size"] == 32);
    CHECK(dump["distributions"][1][0].size() == 5);

    SUBCASE("remote scorer without a key") {
        ::unsetenv("FUMO_API_KEY");
        CHECK(run({"int-prior", in.string(), "--scorer", "remote", "--endpoint", "http://127.0.0.1:1/v1/chat",
                   "-o", (dir / "out").string()}) == kExitScorerUnavailable);
    }
    SUBCASE("incomplete fixture") {
        write_json(dir / "fx.json", {{"0,0", {1, 0, 0, 0, 0}}});
        CHECK(run({"int-prior", in.string(), "--scorer", "fixture", "--fixture", (dir / "fx.json").string(),
                   "-o", (dir / "out").string()}) == kExitFixtureIncomplete);
    }
    SUBCASE("complete fixture, all Critical") {
        nlohmann::json fx;
        for (const char* key : {"0,0", "0,1", "1,0", "1,1"}) fx[key] = {0, 0, 0, 0, 1};
        write_json(dir / "fx.json", fx);
        CHECK(run({"int-prior", in.string(), "--scorer", "fixture", "--fixture", (dir / "fx.json").string(),
                   "--raw", "-o", (dir / "fx").string()}) == kExitOk);
        const auto m = read_fmap(dir / "fx" / "in.int.fmap");
        for (double v : m.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("gate command") {
    testing::TempDir dir("cli_gate");
    const auto p = testing::random_map(16, 16, 3);
    const auto q = testing::random_map(16, 16, 4);
    write_fmap(dir / "a.int.fmap", p);
    write_fmap(dir / "a.hf.fmap", q);

    SUBCASE("identity at beta zero, with a stack") {
        FeatureStack stack{{FeatureLevel{8, 8, 2, std::vector<float>(128, 0.75f)}, FeatureLevel{4, 4, 1, std::vector<float>(16, -2.0f)}}};
        write_fstk(dir / "c.fstk", stack);
        CHECK(run({"gate", (dir / "a.int.fmap").string(), (dir / "a.hf.fmap").string(), "--beta", "0", "--stack",
                   (dir / "c.fstk").string(), "-o", (dir / "out").string()}) == kExitOk);
        const auto g = read_fmap(dir / "out" / "a.gate.fmap");
        for (double v : g.data()) CHECK(v == 1.0);
        CHECK(read_fstk(dir / "out" / "a.mod.fstk") == stack);
        CHECK(fs::exists(dir / "out" / "a.gate.heat.png"));
    }
    SUBCASE("spot value") {
        CHECK(run({"gate", (dir / "a.int.fmap").string(), (dir / "a.hf.fmap").string(), "--beta", "0.2", "-o",
                   (dir / "out").string()}) == kExitOk);
        const auto g = read_fmap(dir / "out" / "a.gate.fmap");
        const double pi = static_cast<float>(p.at(5, 9)), ph = static_cast<float>(q.at(5, 9));
        CHECK(g.at(5, 9) == doctest::Approx(1.0 + 0.2 * pi * ph).epsilon(1e-7));
    }
    SUBCASE("shape mismatch") {
        write_fmap(dir / "b.hf.fmap", testing::random_map(16, 15, 4));
        CHECK(run({"gate", (dir / "a.int.fmap").string(), (dir / "b.hf.fmap").string(), "-o",
                   (dir / "out").string()}) == kExitBadInput);
    }
}

TEST_CASE("pipeline command") {
    testing::TempDir dir("cli_pipe");
    const auto in = dir / "scene.png";
    write_png(in, testing::random_image(72, 64, 3, 5));
    const std::vector<std::string> outputs{"scene.int.png", "scene.int.fmap", "scene.int.json", "scene.hf.png",
                                           "scene.hf.fmap", "scene.gate.fmap", "scene.gate.heat.png",
                                           "scene.sheet.png"};

    CHECK(run({"pipeline", in.string(), "--scorer", "mock", "-o", (dir / "a").string()}) == kExitOk);
    CHECK(run({"-j", "3", "pipeline", in.string(), "--scorer", "mock", "-o", (dir / "b").string()}) == kExitOk);
    for (const auto& name : outputs) {
        CAPTURE(name);
        REQUIRE(fs::exists(dir / "a" / name));
        CHECK(same_bytes(dir / "a" / name, dir / "b" / name));
    }

    SUBCASE("matches the sub-commands run separately") {
        const auto sep = (dir / "sep").string();
        CHECK(run({"int-prior", in.string(), "--scorer", "mock", "--raw", "-o", sep}) == kExitOk);
        CHECK(run({"hf-prior", in.string(), "--raw", "-o", sep}) == kExitOk);
        CHECK(run({"gate", (dir / "sep" / "scene.int.fmap").string(), (dir / "sep" / "scene.hf.fmap").string(),
                   "-o", sep}) == kExitOk);
        for (const char* name : {"scene.int.png", "scene.int.fmap", "scene.int.json", "scene.hf.png",
                                 "scene.hf.fmap", "scene.gate.fmap", "scene.gate.heat.png"}) {
            CAPTURE(name);
            CHECK(same_bytes(dir / "a" / name, dir / "sep" / name));
        }
    }
    SUBCASE("constant image") {
        write_png(dir / "flat.png", ImageF(64, 64, 3, 0.5));
        CHECK(run({"pipeline", (dir / "flat.png").string(), "--scorer", "mock", "-o", (dir / "flat").string()}) == kExitOk);
        const auto g = read_fmap(dir / "flat" / "flat.gate.fmap");
        for (double v : g.data()) CHECK(v == 1.0);
    }
}

TEST_CASE("synth and eval commands") {
    testing::TempDir dir("cli_synth");
    fs::create_directories(dir / "t");
    fs::create_directories(dir / "r");
    write_png(dir / "t" / "a.png", testing::random_image(24, 24, 3, 1));
    write_png(dir / "r" / "b.png", testing::random_image(24, 24, 3, 2));

    CHECK(run({"synth", (dir / "t").string(), (dir / "r").string(), "-n", "3", "--seed", "9", "-o",
               (dir / "mix").string()}) == kExitOk);
    CHECK(read_manifest(dir / "mix" / "manifest.jsonl").size() == 3);
    CHECK(run({"synth", (dir / "t").string(), (dir / "r").string(), "-n", "1", "--gamma1", "0.9", "0.8", "-o",
               (dir / "bad").string()}) == kExitBadInput);

    // eval: predictions are the mixtures renamed to match ground-truth stems
    fs::create_directories(dir / "pred");
    fs::create_directories(dir / "gt");
    fs::copy_file(dir / "mix" / "mix_000000.png", dir / "pred" / "x.png");
    fs::copy_file(dir / "mix" / "mix_000000.png", dir / "gt" / "x.png");
    fs::copy_file(dir / "mix" / "mix_000001.png", dir / "pred" / "y.png");
    fs::copy_file(dir / "t" / "a.png", dir / "gt" / "y.png");
    fs::copy_file(dir / "t" / "a.png", dir / "pred" / "unmatched.png");

    CHECK(run({"eval", (dir / "pred").string(), (dir / "gt").string(), "-o", (dir / "res.jsonl").string()}) == kExitOk);
    std::ifstream res(dir / "res.jsonl");
    std::vector<nlohmann::json> lines;
    for (std::string line; std::getline(res, line);) lines.push_back(nlohmann::json::parse(line));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0]["pair_id"] == "x");
    CHECK(lines[0]["psnr"] == "inf");
    CHECK(lines[0]["ssim"] == doctest::Approx(1.0));
    CHECK(lines[1]["pair_id"] == "y");
    CHECK(lines[1]["l1"].get<double>() > 0.0);
    CHECK(lines[2]["summary"] == true);
    CHECK(lines[2]["count"] == 2);
    CHECK(lines[2]["psnr"] == "inf");
}

TEST_CASE("config file and flag precedence") {
    testing::TempDir dir("cli_cfg");
    write_json(dir / "cfg.json", {{"hf", {{"levels", 1}}}, {"output_dir", (dir / "from_file").string()}});
    const auto in = dir / "in.png";
    write_png(in, testing::random_image(32, 32, 3, 3));
    const auto img = read_png(in);

    auto matches = [](const ScalarMap& stored, const ScalarMap& expected) {
        for (std::size_t i = 0; i < stored.size(); ++i)
            if (stored.data()[i] != static_cast<float>(expected.data()[i])) return false;
        return true;
    };

    // The file beats the defaults.
    CHECK(run({"--config", (dir / "cfg.json").string(), "hf-prior", in.string(), "--raw"}) == kExitOk);
    CHECK(matches(read_fmap(dir / "from_file" / "in.hf.fmap"), hf_prior(img, 1, 0.25)));

    // Flags beat the file.
    CHECK(run({"--config", (dir / "cfg.json").string(), "hf-prior", in.string(), "--raw", "--levels", "3", "-o",
               (dir / "from_flag").string()}) == kExitOk);
    CHECK(matches(read_fmap(dir / "from_flag" / "in.hf.fmap"), hf_prior(img, 3, 0.25)));

    write_json(dir / "typo.json", {{"hf", {{"levles", 2}}}});
    CHECK(run({"--config", (dir / "typo.json").string(), "config"}) == kExitBadInput);
    CHECK(run({"--config", (dir / "nope.json").string(), "config"}) == kExitBadInput);
}
