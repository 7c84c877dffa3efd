#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "depsteer/gateway/gateway.hpp"
#include "depsteer/scoring/scorer.hpp"
#include "json.hpp"

namespace depsteer::cli {

enum class CampaignMode { Direct, Bo, Lifelong };

const char* campaign_mode_label(CampaignMode mode);
CampaignMode campaign_mode_from_label(const std::string& label);

// Offline stand-ins per role. A script takes precedence over a rules file for
// the same role.
struct MockSpec {
    std::string target_rules;
    std::string attacker_rules;
    std::vector<std::string> attacker_script;
    std::string scorer_rules;
    std::string summarizer_rules;
    std::vector<std::string> summarizer_script;
    std::size_t embedder_dimension = 256;
    bool deterministic_embedder = false;

    bool has_completion_mock(gateway::ModelRole role) const;
};

struct CampaignConfig {
    CampaignMode mode = CampaignMode::Direct;
    std::string target_package = "awesome_request";
    std::string scoring_mode = "unconstrained";
    scoring::ScoreWeights weights;  // resolved from mode or custom values
    std::uint64_t seed = 0;

    std::string skill_path;
    std::string dataset_path;
    std::string snapshot_path;
    std::string library_path;  // optional starting library

    double train_fraction = 0.9;
    double warmup_fraction = 0.15;
    int n_completions = 1;
    int worker_count = 1;
    bool prose_mentions = false;
    std::optional<double> temperature_override;

    std::string anchor = "tail";
    int explicitness = 0;
    std::string template_id = "preference";
    std::string template_text;  // overrides the built-in text when set

    std::size_t total_budget = 300;
    std::size_t bo_budget = 60;
    std::size_t ga_population = 10;
    std::size_t lifelong_iterations = 10;
    std::size_t retrieval_k = 3;
    double induction_threshold = 8.0;
    bool query_from_failed_response = false;
    std::vector<std::string> feedback_findings;

    bool gp_mle = false;
    double gp_lengthscale = 1.0;
    double gp_signal_variance = 1.0;
    double gp_noise_variance = 1e-4;
    std::string acquisition = "ei";  // or "ucb"

    std::map<gateway::ModelRole, gateway::ModelEndpoint> endpoints;
    MockSpec mocks;

    std::string rubric_dir;
    bool use_judge = false;
    std::string attacker_zero_shot_path;
    std::string attacker_strategy_path;
    std::string summarizer_template_path;

    std::string model_id = "target";
    std::string dataset_id = "custom";

    // Set by the skill-length ablation, not readable from config files: pads
    // the loaded skill to at least this many rendered characters.
    std::size_t pad_to_chars = 0;

    // Filled by parse_config: stable digest of the canonicalized document and
    // the document itself (with CLI overrides folded in).
    std::string config_digest;
    nlohmann::json canonical;
};

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
};

// Stable hex digest of the canonicalized (key-sorted) document.
std::string digest_document(const nlohmann::json& doc);

// Parses the document; relative paths resolve against `base_dir`. Unknown
// top-level keys are rejected so typos cannot silently disable options.
CampaignConfig parse_config(nlohmann::json doc, const std::string& base_dir,
                            const ConfigOverrides& overrides = {});
CampaignConfig load_config(const std::string& path,
                           const ConfigOverrides& overrides = {});

// Checks referenced files exist and that every role the mode needs has a
// backend; with `offline` set, HTTP endpoints may not substitute for mocks.
void validate_config(const CampaignConfig& config, bool offline);

}  // namespace depsteer::cli
