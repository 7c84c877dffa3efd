#pragma once

#include <string>
#include <vector>

#include "depsteer/cli/config.hpp"
#include "depsteer/metrics/metrics.hpp"
#include "depsteer/strategy/library.hpp"

namespace depsteer::cli {

// Assembles role backends per config: mocks where specified, HTTP clients
// otherwise. Offline runs refuse HTTP fallbacks.
gateway::Gateway build_gateway(const CampaignConfig& config, bool offline);

struct RunResult {
    metrics::CampaignReport report;
    skill::SkillArtifact best_skill;
    nlohmann::json extras;  // mode-specific report block
    strategy::StrategyLibrary library;
    bool has_library = false;
};

// Validates the config, runs the configured campaign mode, and returns the
// report plus artifacts. Deterministic given (config, seed, mocks).
RunResult run_campaign(const CampaignConfig& config, bool offline);

// Writes report.json, summary.csv, best_skill.md, run.log and, for lifelong
// runs, library.jsonl under out_dir. Every file names the config digest;
// timestamps appear only in run.log.
void write_outputs(const RunResult& result, const CampaignConfig& config,
                   const std::string& out_dir);

// Optimizes per config, then evaluates every best skill against every
// config's target backend on the first config's prompt set.
metrics::TransferMatrix run_transfer(const std::vector<CampaignConfig>& configs,
                                     bool offline);

struct AblationRow {
    std::string knob;
    std::string value;
    metrics::CampaignReport report;
};

// Sweeps one knob over the given values, running a campaign per value.
// Knobs: explicitness, skill_length, n_completions, temperature.
std::vector<AblationRow> run_ablation(const CampaignConfig& base,
                                      const std::string& knob,
                                      const std::vector<std::string>& values,
                                      bool offline);
std::string ablation_csv(const std::vector<AblationRow>& rows,
                         const std::string& digest);

// Appends neutral filler to the instruction section until the rendered skill
// reaches `target_chars`.
skill::SkillArtifact pad_skill(const skill::SkillArtifact& base,
                               std::size_t target_chars);

// Length presets: short ~0.5k, medium ~2k, long ~8k characters; numeric
// strings pass through.
std::size_t skill_length_chars(const std::string& value);

}  // namespace depsteer::cli
