#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "depsteer/deps/extract.hpp"
#include "depsteer/deps/registry.hpp"
#include "depsteer/gateway/gateway.hpp"
#include "depsteer/skill/artifact.hpp"
#include "json.hpp"

namespace depsteer::metrics {

struct PromptRecord {
    std::string id;
    std::string text;
    std::string dataset;         // LLM_AT | LLM_LY | SO_AT | SO_LY | custom
    std::string source_package;  // optional name the prompt is themed on

    bool operator==(const PromptRecord&) const = default;
};

// JSON-lines, one object per prompt: {"id", "text", "dataset",
// "source_package"}. Ids must be unique, texts non-empty.
std::vector<PromptRecord> load_prompts(const std::string& path);
std::vector<PromptRecord> parse_prompts(const std::string& jsonl);

struct SplitResult {
    std::vector<PromptRecord> train;
    std::vector<PromptRecord> test;
};

// Deterministic shuffle under seed, split at floor(n * train_fraction).
// Partitions are disjoint and exhaustive.
SplitResult split_dataset(std::span<const PromptRecord> prompts,
                          double train_fraction, std::uint64_t seed);

struct EvalRecord {
    std::string prompt_id;
    int completion_index = 0;
    std::string output;
    deps::DependencySet deps;
    bool contains_target = false;
    std::vector<std::string> hallucinated;  // sorted normalized names
    bool failed = false;
    std::string error;
};

struct EvalOptions {
    int n_completions = 1;
    gateway::DecodingOverrides decoding;
    int worker_count = 1;
    std::uint64_t seed = 0;
    // When set, the target counts as present when it appears anywhere in the
    // output text, not only in extracted dependencies.
    bool prose_mentions = false;
};

// Runs each prompt against the target backend with the rendered skill as the
// system message, extracts dependencies, and fills records ordered by
// (prompt_id, completion_index). Endpoint failures mark the record failed
// rather than aborting the run.
std::vector<EvalRecord> evaluate_skill(const skill::SkillArtifact& artifact,
                                       std::span<const PromptRecord> prompts,
                                       const gateway::Gateway& gw,
                                       const deps::PackageName& target,
                                       const deps::RegistrySnapshot& snapshot,
                                       const EvalOptions& options);

// Fraction of valid (prompt, completion) pairs whose dependencies contain the
// target; recomputed from the stored records.
double thr(std::span<const EvalRecord> records, const deps::PackageName& target,
           bool prose_mentions = false);

// Per-prompt variant: a prompt counts when any of its completions contains
// the target.
double thr_any_hit(std::span<const EvalRecord> records,
                   const deps::PackageName& target, bool prose_mentions = false);

// Fraction of valid pairs carrying at least one name that exists neither in
// the snapshot nor the standard library, the target excluded.
double ghr(std::span<const EvalRecord> records,
           const deps::RegistrySnapshot& snapshot,
           const deps::PackageName& target);

std::size_t count_failures(std::span<const EvalRecord> records);

// Names from `set` that are absent from snapshot and standard library,
// excluding the target; sorted, unique.
std::vector<std::string> hallucinated_names(const deps::DependencySet& set,
                                            const deps::RegistrySnapshot& snapshot,
                                            const deps::PackageName& target);

struct CampaignReport {
    std::string skill_id;
    std::string model_id;
    std::string dataset;
    std::string config_digest;
    std::uint64_t seed = 0;
    double thr = 0.0;
    double ghr = 0.0;
    std::size_t failures = 0;
    std::vector<EvalRecord> records;
};

nlohmann::json record_to_json(const EvalRecord& record);
EvalRecord record_from_json(const nlohmann::json& value);

nlohmann::json report_to_json(const CampaignReport& report);
CampaignReport report_from_json(const nlohmann::json& value);

void save_report(const CampaignReport& report, const std::string& path);
CampaignReport load_report(const std::string& path);

// summary.csv layout.
std::string csv_header();
std::string csv_row(const CampaignReport& report);

// Concatenates record lists of shards from the same campaign; refuses when
// config digests differ.
CampaignReport merge_reports(std::span<const CampaignReport> parts,
                             const deps::PackageName& target,
                             const deps::RegistrySnapshot& snapshot);

struct TransferCell {
    bool present = false;
    double thr = 0.0;
    std::string error;
};

struct TransferMatrix {
    std::vector<std::string> optimized_on;   // row labels
    std::vector<std::string> evaluated_on;   // column labels
    std::vector<std::vector<TransferCell>> cells;
};

// cell (i, j) = THR of the skill optimized on model i when evaluated on
// model j. Per-cell evaluation errors mark the cell absent.
TransferMatrix transfer_matrix(
    const std::vector<std::pair<std::string, skill::SkillArtifact>>& skills,
    const std::vector<std::pair<std::string, const gateway::Gateway*>>& endpoints,
    std::span<const PromptRecord> prompts, const deps::PackageName& target,
    const deps::RegistrySnapshot& snapshot, const EvalOptions& options);

std::string transfer_matrix_csv(const TransferMatrix& matrix);

}  // namespace depsteer::metrics
