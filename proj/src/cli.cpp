#include "fumo/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fumo/heatmap.hpp"
#include "fumo/image_io.hpp"
#include "fumo/log.hpp"
#include "fumo/metrics.hpp"
#include "fumo/parallel.hpp"

namespace fumo {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_input:
        case ErrorCode::io_read: return kExitBadInput;
        case ErrorCode::io_write: return kExitWriteFailed;
        case ErrorCode::scorer_unavailable: return kExitScorerUnavailable;
        case ErrorCode::fixture_incomplete: return kExitFixtureIncomplete;
        case ErrorCode::protocol: return kExitProtocol;
    }
    return kExitFailure;
}

std::string output_stem(const fs::path& input) {
    std::string stem = input.stem().string();
    for (const char* tag : {".int", ".hf", ".gate"}) {
        const std::string t(tag);
        if (stem.size() > t.size() && stem.compare(stem.size() - t.size(), t.size(), t) == 0) {
            stem.resize(stem.size() - t.size());
            break;
        }
    }
    return stem;
}

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        fail(ErrorCode::io_write, "cannot create output directory " + dir.string());
    }
}

json psnr_json(double value) { return std::isfinite(value) ? json(value) : json("inf"); }

json boxes_json(const std::vector<BBox>& boxes) {
    json out = json::array();
    for (const auto& b : boxes) out.push_back({{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}});
    return out;
}

json patch_dump(const fs::path& input, const IntensityPriorResult& r, const std::string& scorer_name) {
    json scores = json::array();
    json dists = json::array();
    for (int row = 0; row < r.grid.rows; ++row) {
        json score_row = json::array();
        json dist_row = json::array();
        for (int col = 0; col < r.grid.cols; ++col) {
            const std::size_t i = static_cast<std::size_t>(row) * r.grid.cols + col;
            score_row.push_back(r.grid.scores[i]);
            dist_row.push_back(r.grid.distributions[i].probs());
        }
        scores.push_back(std::move(score_row));
        dists.push_back(std::move(dist_row));
    }
    return {
        {"image", input.filename().string()},
        {"height", r.prior.height()},
        {"width", r.prior.width()},
        {"scorer", scorer_name},
        {"patch_size", r.grid.patch_size},
        {"rows", r.grid.rows},
        {"cols", r.grid.cols},
        {"categories", {"None", "Minor", "Mid", "Major", "Critical"}},
        {"scores", std::move(scores)},
        {"distributions", std::move(dists)},
        {"boxes", boxes_json(r.boxes)},
    };
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
    if (!out) fail(ErrorCode::io_write, "failed writing " + path.string());
}

// Values as persisted in FMAP files, so a gate built in one process matches
// one built from the saved priors.
ScalarMap as_stored(const ScalarMap& map) {
    ScalarMap out = map;
    for (double& v : out.data()) v = static_cast<float>(v);
    return out;
}

struct HfOutputs {
    ScalarMap prior;
    std::vector<fs::path> files;
};

HfOutputs write_hf(const ImageF& img, const std::string& stem, const PipelineConfig& cfg, bool raw) {
    HfOutputs out{hf_prior(img, cfg.hf), {}};
    const fs::path png = cfg.output_dir / (stem + ".hf.png");
    write_map_png(png, out.prior);
    out.files.push_back(png);
    if (raw) {
        const fs::path fmap = cfg.output_dir / (stem + ".hf.fmap");
        write_fmap(fmap, out.prior);
        out.files.push_back(fmap);
    }
    if (cfg.visualize) {
        const fs::path heat = cfg.output_dir / (stem + ".hf.heat.png");
        write_png(heat, heatmap(out.prior));
        out.files.push_back(heat);
    }
    return out;
}

struct IntOutputs {
    ScalarMap prior;
    std::vector<fs::path> files;
};

IntOutputs write_int(const fs::path& input, const ImageF& img, const std::string& stem, const PipelineConfig& cfg,
                     const Scorer& scorer, bool raw) {
    IntensityPriorParams params = cfg.intensity;
    params.jobs = std::max(params.jobs, cfg.jobs);
    IntensityPriorResult r = compute_intensity_prior(img, scorer, params);
    IntOutputs out{r.prior, {}};
    const fs::path png = cfg.output_dir / (stem + ".int.png");
    write_map_png(png, r.prior);
    out.files.push_back(png);
    const fs::path dump = cfg.output_dir / (stem + ".int.json");
    write_text(dump, patch_dump(input, r, scorer.name()).dump(2) + "\n");
    out.files.push_back(dump);
    if (raw) {
        const fs::path fmap = cfg.output_dir / (stem + ".int.fmap");
        write_fmap(fmap, r.prior);
        out.files.push_back(fmap);
    }
    if (cfg.visualize) {
        const fs::path heat = cfg.output_dir / (stem + ".int.heat.png");
        write_png(heat, heatmap(r.prior));
        out.files.push_back(heat);
    }
    return out;
}

std::vector<fs::path> write_gate(const ScalarMap& g, const std::string& stem, const PipelineConfig& cfg) {
    const fs::path fmap = cfg.output_dir / (stem + ".gate.fmap");
    write_fmap(fmap, g);
    const fs::path heat = cfg.output_dir / (stem + ".gate.heat.png");
    write_png(heat, heatmap(g, 1.0, 1.0 + cfg.gate.beta_max));
    return {fmap, heat};
}

}  // namespace

std::vector<fs::path> cmd_hf_prior(const fs::path& input, const PipelineConfig& cfg) {
    const ImageF img = read_png(input);
    ensure_dir(cfg.output_dir);
    return write_hf(img, output_stem(input), cfg, cfg.raw).files;
}

std::vector<fs::path> cmd_int_prior(const fs::path& input, const PipelineConfig& cfg, const Scorer& scorer) {
    const ImageF img = read_png(input);
    ensure_dir(cfg.output_dir);
    return write_int(input, img, output_stem(input), cfg, scorer, cfg.raw).files;
}

std::vector<fs::path> cmd_gate(const fs::path& p_int, const fs::path& p_hf, const PipelineConfig& cfg,
                               const fs::path* stack, const std::string& name) {
    const ScalarMap intensity = read_map(p_int);
    const ScalarMap detail = read_map(p_hf);
    const ScalarMap g = gate_map(intensity, detail, cfg.beta);
    std::optional<FeatureStack> features;
    if (stack != nullptr) features = read_fstk(*stack);
    ensure_dir(cfg.output_dir);
    const std::string stem = name.empty() ? output_stem(p_int) : name;
    auto files = write_gate(g, stem, cfg);
    if (features) {
        const fs::path out = cfg.output_dir / (stem + ".mod.fstk");
        write_fstk(out, modulate_stack(*features, g, cfg.gate.beta_max));
        files.push_back(out);
    }
    return files;
}

std::vector<fs::path> cmd_pipeline(const fs::path& input, const PipelineConfig& cfg, const Scorer& scorer) {
    const ImageF img = read_png(input);
    ensure_dir(cfg.output_dir);
    const std::string stem = output_stem(input);
    IntOutputs intensity = write_int(input, img, stem, cfg, scorer, true);
    HfOutputs detail = write_hf(img, stem, cfg, true);
    const ScalarMap g = gate_map(as_stored(intensity.prior), as_stored(detail.prior), cfg.beta);

    std::vector<fs::path> files = std::move(intensity.files);
    files.insert(files.end(), detail.files.begin(), detail.files.end());
    for (auto& f : write_gate(g, stem, cfg)) files.push_back(std::move(f));

    const fs::path sheet = cfg.output_dir / (stem + ".sheet.png");
    write_png(sheet, hstack({img, heatmap(intensity.prior), heatmap(detail.prior),
                             heatmap(g, 1.0, 1.0 + cfg.gate.beta_max)}));
    files.push_back(sheet);
    return files;
}

std::vector<fs::path> cmd_synth(const fs::path& t_dir, const fs::path& r_dir, int count, const PipelineConfig& cfg) {
    ensure_dir(cfg.output_dir);
    const auto records = synth_batch(t_dir, r_dir, cfg.output_dir, count, cfg.synth, cfg.jobs);
    std::vector<fs::path> files;
    std::size_t skipped = 0;
    for (const auto& r : records) {
        if (r.out_path) {
            files.emplace_back(*r.out_path);
        } else {
            ++skipped;
        }
    }
    files.push_back(cfg.output_dir / "manifest.jsonl");
    if (skipped > 0) {
        fail(ErrorCode::io_read, std::to_string(skipped) + " of " + std::to_string(records.size()) +
                                     " samples were skipped (see manifest)");
    }
    return files;
}

std::vector<std::string> cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir, const PipelineConfig& cfg) {
    std::map<std::string, fs::path> gt;
    for (const auto& f : list_pngs(gt_dir)) gt.emplace(f.stem().string(), f);
    std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> pairs;
    for (const auto& f : list_pngs(pred_dir)) {
        auto it = gt.find(f.stem().string());
        if (it == gt.end()) {
            log_warn("no ground truth for " + f.filename().string());
            continue;
        }
        pairs.push_back({it->first, {f, it->second}});
    }
    require(!pairs.empty(), "no prediction/ground-truth pairs share a file stem");

    std::vector<MetricReport> reports(pairs.size());
    parallel_for(static_cast<int>(pairs.size()), cfg.jobs, [&](int i) {
        const ImageF pred = read_png(pairs[i].second.first);
        const ImageF ref = read_png(pairs[i].second.second);
        if (!pred.same_shape(ref)) {
            fail(ErrorCode::invalid_input, "pair " + pairs[i].first + " differs in shape");
        }
        reports[i] = evaluate_pair(pred, ref);
    });

    std::vector<std::string> lines;
    MetricReport sum;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& r = reports[i];
        lines.push_back(json{{"pair_id", pairs[i].first},
                             {"psnr", psnr_json(r.psnr)},
                             {"ssim", r.ssim},
                             {"l1", r.l1},
                             {"mse", r.mse},
                             {"grad_loss", r.grad_loss}}
                            .dump());
        sum.psnr += r.psnr;
        sum.ssim += r.ssim;
        sum.l1 += r.l1;
        sum.mse += r.mse;
        sum.grad_loss += r.grad_loss;
    }
    const double n = static_cast<double>(pairs.size());
    lines.push_back(json{{"summary", true},
                         {"count", pairs.size()},
                         {"psnr", psnr_json(sum.psnr / n)},
                         {"ssim", sum.ssim / n},
                         {"l1", sum.l1 / n},
                         {"mse", sum.mse / n},
                         {"grad_loss", sum.grad_loss / n}}
                        .dump());
    return lines;
}

namespace {

std::optional<std::string> find_config_arg(const std::vector<std::string>& args) {
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return std::nullopt;
}

struct PathFlags {
    std::string output_dir;
    std::string fixture;
    std::string cache;
    std::string scorer;
};

void add_scorer_flags(CLI::App* cmd, PipelineConfig& cfg, PathFlags& paths) {
    cmd->add_option("--scorer", paths.scorer, "Scorer: mock, remote or fixture");
    cmd->add_option("--fixture", paths.fixture, "Fixture JSON for the fixture scorer");
    cmd->add_option("--endpoint", cfg.scorer.endpoint_url, "Chat-completions endpoint URL");
    cmd->add_option("--model", cfg.scorer.model_name, "Model name sent to the endpoint");
    cmd->add_option("--tau", cfg.scorer.temperature, "Softmax temperature over category logits");
    cmd->add_option("--cache", paths.cache, "JSON-lines response cache");
    cmd->add_option("--max-in-flight", cfg.scorer.max_in_flight, "Concurrent remote requests");
    cmd->add_option("--timeout", cfg.scorer.timeout_seconds, "Remote request timeout in seconds");
    cmd->add_option("--patch-size", cfg.intensity.patch_size, "Patch size in pixels (0 = adaptive)");
    cmd->add_option("--boost", cfg.intensity.boost_factor, "Bounding-box boost factor");
    cmd->add_option("--cap", cfg.intensity.boost_cap, "Boosted severity cap");
    cmd->add_option("--gf-radius", cfg.intensity.gf_radius, "Guided filter radius (0 = patch/2)");
    cmd->add_option("--gf-eps", cfg.intensity.gf_epsilon, "Guided filter epsilon");
    cmd->add_option("--pre-blur", cfg.intensity.pre_blur_sigma, "Guide Gaussian pre-blur sigma");
}

void add_hf_flags(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--levels", cfg.hf.levels, "Decomposition levels");
    cmd->add_option("--clamp-hi", cfg.hf.clamp_hi, "Residual magnitude mapped to 1");
}

void add_gate_flags(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--beta", cfg.beta, "Gate strength");
    cmd->add_option("--beta-max", cfg.gate.beta_max, "Upper gate clip is 1 + beta_max");
}

void add_output_flags(CLI::App* cmd, PipelineConfig& cfg, PathFlags& paths) {
    cmd->add_option("-o,--output", paths.output_dir, "Output directory");
    cmd->add_flag("--raw", cfg.raw, "Also write raw FMAP maps");
    cmd->add_flag("--heatmap", cfg.visualize, "Also write color heatmaps");
}

int report(const Error& e) {
    log_error(std::string(to_string(e.code())) + ": " + e.what());
    return exit_code_for(e.code());
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    PipelineConfig cfg;
    try {
        if (auto path = find_config_arg(args)) cfg = load_config(*path);
    } catch (const Error& e) {
        return report(e);
    }

    CLI::App app{"Reflection priors, gated conditioning and image metrics", "fumo"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    bool quiet = false;
    PathFlags paths;
    app.add_option("--config", config_path, "JSON config file (flags override it)");
    app.add_flag("-q,--quiet", quiet, "Suppress informational logging");
    app.add_option("-j,--jobs", cfg.jobs, "Parallel workers for batch work");

    std::vector<std::string> inputs;

    auto* hf = app.add_subcommand("hf-prior", "High-frequency prior of one or more PNGs");
    hf->add_option("inputs", inputs, "Input PNG files")->required();
    add_hf_flags(hf, cfg);
    add_output_flags(hf, cfg, paths);

    auto* ip = app.add_subcommand("int-prior", "Reflection-intensity prior of one or more PNGs");
    ip->add_option("inputs", inputs, "Input PNG files")->required();
    add_scorer_flags(ip, cfg, paths);
    add_output_flags(ip, cfg, paths);

    std::string p_int, p_hf, stack, name;
    auto* gate = app.add_subcommand("gate", "Gate map from two priors, optionally modulating a feature stack");
    gate->add_option("p_int", p_int, "Intensity prior (FMAP or 16-bit PNG)")->required();
    gate->add_option("p_hf", p_hf, "High-frequency prior (FMAP or 16-bit PNG)")->required();
    gate->add_option("--stack", stack, "FSTK feature stack to modulate");
    gate->add_option("--name", name, "Output stem (default: from p_int)");
    add_gate_flags(gate, cfg);
    gate->add_option("-o,--output", paths.output_dir, "Output directory");

    auto* pipe = app.add_subcommand("pipeline", "Intensity prior, high-frequency prior, gate and sheet");
    pipe->add_option("inputs", inputs, "Input PNG files")->required();
    add_scorer_flags(pipe, cfg, paths);
    add_hf_flags(pipe, cfg);
    add_gate_flags(pipe, cfg);
    pipe->add_option("-o,--output", paths.output_dir, "Output directory");
    pipe->add_flag("--heatmap", cfg.visualize, "Also write per-prior heatmaps");

    std::string t_dir, r_dir;
    int count = 1;
    auto* synth = app.add_subcommand("synth", "Synthesize reflection mixtures");
    synth->add_option("t_dir", t_dir, "Transmission PNG directory")->required();
    synth->add_option("r_dir", r_dir, "Reflection PNG directory")->required();
    synth->add_option("-n,--count", count, "Number of mixtures")->check(CLI::PositiveNumber);
    synth->add_option("--seed", cfg.synth.seed, "RNG seed");
    synth->add_option("--gamma1", cfg.synth.gamma1_range, "gamma1 range lo hi");
    synth->add_option("--gamma2", cfg.synth.gamma2_range, "gamma2 range lo hi");
    synth->add_option("-o,--output", paths.output_dir, "Output directory");

    std::string pred_dir, gt_dir, results;
    auto* eval = app.add_subcommand("eval", "Full-reference metrics between matching PNGs");
    eval->add_option("pred_dir", pred_dir, "Restored images")->required();
    eval->add_option("gt_dir", gt_dir, "Ground-truth images")->required();
    eval->add_option("-o,--output", results, "JSON-lines results file (default: stdout)");

    auto* show = app.add_subcommand("config", "Print the effective configuration as JSON");

    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    set_quiet(quiet);

    try {
        if (!paths.output_dir.empty()) cfg.output_dir = paths.output_dir;
        if (!paths.fixture.empty()) cfg.fixture_path = paths.fixture;
        if (!paths.cache.empty()) cfg.scorer.cache_path = paths.cache;
        if (!paths.scorer.empty()) cfg.scorer_kind = scorer_kind_from_string(paths.scorer);
        cfg.validate();

        if (*show) {
            std::cout << config_to_json(cfg).dump(2) << '\n';
            return kExitOk;
        }
        std::vector<fs::path> written;
        auto run_each = [&](auto&& fn) {
            std::vector<std::vector<fs::path>> per(inputs.size());
            // Patch scoring already fans out inside each image when jobs > 1.
            parallel_for(static_cast<int>(inputs.size()), cfg.jobs, [&](int i) { per[i] = fn(inputs[i]); });
            for (auto& files : per) written.insert(written.end(), files.begin(), files.end());
        };
        if (*hf) {
            run_each([&](const std::string& in) { return cmd_hf_prior(in, cfg); });
        } else if (*ip || *pipe) {
            const auto scorer = make_scorer(cfg);
            if (*ip) {
                run_each([&](const std::string& in) { return cmd_int_prior(in, cfg, *scorer); });
            } else {
                run_each([&](const std::string& in) { return cmd_pipeline(in, cfg, *scorer); });
            }
        } else if (*gate) {
            const fs::path stack_path(stack);
            written = cmd_gate(p_int, p_hf, cfg, stack.empty() ? nullptr : &stack_path, name);
        } else if (*synth) {
            written = cmd_synth(t_dir, r_dir, count, cfg);
        } else if (*eval) {
            const auto lines = cmd_eval(pred_dir, gt_dir, cfg);
            if (results.empty()) {
                for (const auto& l : lines) std::cout << l << '\n';
            } else {
                std::string text;
                for (const auto& l : lines) text += l + '\n';
                write_text(results, text);
                written.emplace_back(results);
            }
        }
        for (const auto& f : written) log_info("wrote " + f.string());
        return kExitOk;
    } catch (const Error& e) {
        return report(e);
    } catch (const std::exception& e) {
        log_error(e.what());
        return kExitFailure;
    }
}

int run_cli(int argc, char** argv) { return run_cli(std::vector<std::string>(argv, argv + argc)); }

}  // namespace fumo
