#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fumo/config.hpp"
#include "fumo/error.hpp"

namespace fumo {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitWriteFailed = 3;
inline constexpr int kExitScorerUnavailable = 4;
inline constexpr int kExitFixtureIncomplete = 5;
inline constexpr int kExitProtocol = 6;

int exit_code_for(ErrorCode code);

// Output file stem: file name minus its extension and a trailing
// ".int"/".hf"/".gate" tag.
std::string output_stem(const std::filesystem::path& input);

// Each command writes into cfg.output_dir and returns the files written.
std::vector<std::filesystem::path> cmd_hf_prior(const std::filesystem::path& input, const PipelineConfig& cfg);
std::vector<std::filesystem::path> cmd_int_prior(const std::filesystem::path& input, const PipelineConfig& cfg,
                                                 const Scorer& scorer);
std::vector<std::filesystem::path> cmd_gate(const std::filesystem::path& p_int, const std::filesystem::path& p_hf,
                                            const PipelineConfig& cfg, const std::filesystem::path* stack,
                                            const std::string& name = {});
std::vector<std::filesystem::path> cmd_pipeline(const std::filesystem::path& input, const PipelineConfig& cfg,
                                                const Scorer& scorer);
std::vector<std::filesystem::path> cmd_synth(const std::filesystem::path& t_dir, const std::filesystem::path& r_dir,
                                             int count, const PipelineConfig& cfg);

// Pairs files by stem; emits one JSON line per pair plus a summary line.
std::vector<std::string> cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                  const PipelineConfig& cfg);

int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace fumo
