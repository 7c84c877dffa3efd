#pragma once

#include <span>
#include <string>
#include <vector>

#include "depsteer/gateway/gateway.hpp"
#include "depsteer/skill/patch.hpp"

namespace depsteer::strategy {

struct Strategy {
    std::string id;
    std::string name;       // short heuristic title
    std::string heuristic;  // 1-3 sentence description
    std::string exemplar_patch;
    double induction_score = 0.0;
    std::vector<double> embedding;

    bool operator==(const Strategy&) const = default;
};

// Append-only store; single writer, any number of concurrent readers of a
// loaded snapshot.
class StrategyLibrary {
public:
    explicit StrategyLibrary(std::size_t dimension = 256);

    std::size_t dimension() const { return dimension_; }
    const std::vector<Strategy>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    // Validates embedding length, score range, and id uniqueness.
    void append(Strategy strategy);
    // Smallest unused id of the form "s<n>".
    std::string fresh_id() const;

    bool operator==(const StrategyLibrary&) const = default;

private:
    std::size_t dimension_;
    std::vector<Strategy> entries_;
};

double cosine(std::span<const double> a, std::span<const double> b);

// Top-k entries by cosine similarity to the query; ties keep insertion order.
// Returns fewer than k when the library is smaller.
std::vector<Strategy> retrieve(const StrategyLibrary& library,
                               std::span<const double> query, std::size_t k);

// Offline embedder: signed token-hash bag-of-words projected to `dimension`,
// L2-normalized. Equal text always embeds to the same vector.
class DeterministicEmbedder final : public gateway::EmbeddingBackend {
public:
    explicit DeterministicEmbedder(std::size_t dimension = 256);
    std::vector<double> embed(const std::string& text) override;
    std::size_t dimension() const { return dimension_; }

private:
    std::size_t dimension_;
};

// Template for the summarizer request; {score}, {patch}, {context} are
// substituted.
std::string default_summarizer_template();

// Asks the Summarizer role to distill the patch into a named heuristic,
// embeds the heuristic, and appends the strategy to the library. A reply
// without parseable NAME:/HEURISTIC: lines falls back to the patch's first
// sentence; `used_fallback` reports that.
Strategy summarize_strategy(const skill::AdversarialPatch& patch, double score,
                            const std::string& context, const gateway::Gateway& gw,
                            StrategyLibrary& library,
                            const std::string& prompt_template,
                            bool* used_fallback = nullptr, std::uint64_t seed = 0);

// JSON-lines persistence, one strategy per line; embeddings survive
// bit-exactly. Lines starting with '#' are comments and skipped on parse.
// Loading an empty file yields an empty library with `dimension_if_empty`.
std::string serialize_library(const StrategyLibrary& library);
StrategyLibrary parse_library(const std::string& text,
                              std::size_t dimension_if_empty = 256);
void save_library(const StrategyLibrary& library, const std::string& path);
StrategyLibrary load_library(const std::string& path,
                             std::size_t dimension_if_empty = 256);

}  // namespace depsteer::strategy
