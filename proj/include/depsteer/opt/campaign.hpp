#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "depsteer/deps/registry.hpp"
#include "depsteer/gateway/gateway.hpp"
#include "depsteer/metrics/metrics.hpp"
#include "depsteer/opt/ga.hpp"
#include "depsteer/opt/gp.hpp"
#include "depsteer/opt/mutation.hpp"
#include "depsteer/scoring/scorer.hpp"
#include "depsteer/skill/patch.hpp"
#include "depsteer/strategy/library.hpp"

namespace depsteer::opt {

// ---------------------------------------------------------------------------
// Surrogate-driven search over the mutation space

struct BoCampaignOptions {
    std::size_t total_budget = 300;   // distinct configurations evaluated
    std::size_t bo_budget = 60;       // surrogate-proposed portion
    GaOptions ga;
    BoProposeOptions propose;
    GpHyperparams fixed_hyperparams;  // used when mle is false
    bool mle = false;
    skill::ExplicitnessLevel level = skill::ExplicitnessLevel::Original;
    std::uint64_t seed = 0;
};

struct BoCampaignResult {
    MutationConfig best_config;
    double best_fitness = 0.0;
    skill::SkillArtifact best_skill;
    skill::AdversarialPatch best_patch;
    // Distinct evaluations in the order they were spent.
    std::vector<std::pair<MutationConfig, double>> history;
};

// Alternates a GP-guided proposal phase with a genetic refinement phase over
// the discrete space. Fitness values are memoized per config; only distinct
// configs consume budget. When the genetic phase stalls and budget remains on
// an enumerable space, the leftover is spent sweeping unvisited configs in
// index order, so a budget covering the space always reaches its maximum.
BoCampaignResult run_bo_campaign(
    const skill::SkillArtifact& base, const deps::PackageName& target,
    const MutationSpace& space,
    const std::function<double(const MutationConfig&, const skill::SkillArtifact&)>& objective,
    const BoCampaignOptions& options);

// ---------------------------------------------------------------------------
// Strategy-library campaign (warm-up + lifelong)

struct LifelongOptions {
    double induction_threshold = 8.0;  // final score needed to induct a strategy
    std::size_t retrieval_k = 3;
    std::size_t iterations = 10;
    skill::AnchorPosition anchor = skill::AnchorPosition::Tail;
    // Retrieval query defaults to the request text; when set, a failed
    // attempt's model output becomes the next query instead.
    bool query_from_failed_response = false;
    std::string attacker_zero_shot_template;   // {request} {feedback}
    std::string attacker_strategy_template;    // {request} {strategies} {feedback}
    std::string summarizer_template;
    std::uint64_t seed = 0;
};

std::string default_attacker_zero_shot_template();
std::string default_attacker_strategy_template();

// Reply parsing for attacker turns: text after a "PATCH:" marker line, or the
// whole reply trimmed when no marker is present.
std::string extract_patch_text(const std::string& reply);

// Defense findings folded into later attacker prompts; empty notes leave the
// prompt byte-identical to the no-feedback form.
std::string render_feedback_block(const std::vector<std::string>& notes);

struct HistoryEntry {
    std::size_t iteration = 0;
    std::string phase;  // "warmup" | "lifelong"
    std::string prompt_id;
    std::string patch_text;
    scoring::ScoreBreakdown score;
    bool inducted = false;
};

struct CampaignState {
    std::size_t iteration = 0;
    skill::SkillArtifact best_skill;
    skill::AdversarialPatch best_patch;
    double best_score = 0.0;
    bool has_best = false;
    std::vector<HistoryEntry> history;
    std::vector<std::string> feedback_notes;
};

// Records findings for subsequent attacker prompts.
CampaignState& adaptive_feedback(CampaignState& state,
                                 const std::vector<std::string>& findings);

struct LifelongContext {
    const gateway::Gateway* gw = nullptr;
    const scoring::AttackScorer* scorer = nullptr;
    scoring::ScoreWeights weights;
    const skill::SkillArtifact* base = nullptr;
    deps::PackageName target;
    const deps::RegistrySnapshot* snapshot = nullptr;
};

struct WarmupStats {
    std::size_t attempted = 0;
    std::size_t skipped = 0;
    std::size_t inducted = 0;
};

// Zero-shot attacker pass over the warm-up prompts; patches whose final score
// clears the threshold are summarized into the library.
WarmupStats warmup_phase(std::span<const metrics::PromptRecord> warmup_prompts,
                         const LifelongContext& ctx,
                         strategy::StrategyLibrary& library,
                         CampaignState& state, const LifelongOptions& options);

struct LifelongResult {
    CampaignState state;
    double heldout_thr = 0.0;
    std::size_t heldout_failures = 0;
    std::vector<metrics::EvalRecord> heldout_records;
};

// Retrieval-conditioned attacker loop over the remaining training prompts,
// then a held-out evaluation of the best skill found (the unmodified base
// when no attempt succeeded).
LifelongResult lifelong_phase(std::span<const metrics::PromptRecord> train_prompts,
                              std::span<const metrics::PromptRecord> heldout_prompts,
                              const LifelongContext& ctx,
                              strategy::StrategyLibrary& library,
                              CampaignState state, const LifelongOptions& options,
                              const metrics::EvalOptions& eval_options);

}  // namespace depsteer::opt
