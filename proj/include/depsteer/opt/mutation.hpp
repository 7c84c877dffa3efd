#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "depsteer/deps/name.hpp"
#include "depsteer/skill/patch.hpp"

namespace depsteer::opt {

struct MutationCategory {
    std::string name;
    // Text fragments with {target} / {target_module} placeholders; for the
    // placement category these are anchor labels instead.
    std::vector<std::string> variants;
};

// Discrete search space of Skill-localized edits: one variant choice per
// category. One category controls the injection anchor.
class MutationSpace {
public:
    MutationSpace(std::vector<MutationCategory> categories,
                  std::size_t placement_category);

    static MutationSpace default_space();

    const std::vector<MutationCategory>& categories() const { return categories_; }
    std::size_t category_count() const { return categories_.size(); }
    std::size_t placement_category() const { return placement_; }
    std::vector<int> variant_counts() const;
    // Number of distinct configurations (product of variant counts).
    std::uint64_t config_count() const;
    // Total one-hot feature width (sum of variant counts).
    std::size_t feature_width() const;

private:
    std::vector<MutationCategory> categories_;
    std::size_t placement_;
};

struct MutationConfig {
    std::vector<int> choices;  // one index per category

    bool operator==(const MutationConfig&) const = default;
    auto operator<=>(const MutationConfig&) const = default;
};

void validate_config(const MutationConfig& config, const MutationSpace& space);

// Mixed-radix bijection between configs and [0, config_count).
std::uint64_t config_index(const MutationConfig& config, const MutationSpace& space);
MutationConfig config_from_index(std::uint64_t index, const MutationSpace& space);

// One-hot feature vector for the surrogate model: no false ordering between
// variants of a category.
std::vector<double> one_hot(const MutationConfig& config, const MutationSpace& space);

struct InstantiatedSkill {
    skill::SkillArtifact artifact;
    skill::AdversarialPatch patch;
    skill::AnchorPosition anchor = skill::AnchorPosition::Tail;
};

// Composes the selected variant texts with the target substituted and injects
// the result at the anchor the placement category selects. The explicitness
// level controls the surface form substituted for {target}.
InstantiatedSkill instantiate(
    const MutationConfig& config, const skill::SkillArtifact& base,
    const deps::PackageName& target, const MutationSpace& space,
    skill::ExplicitnessLevel level = skill::ExplicitnessLevel::Original);

// The three shipped direct-injection templates.
const std::map<std::string, std::string>& builtin_injection_templates();

// Instantiates a template with the target name and appends it at the Tail
// anchor. `extra_templates` lets configs add or override template texts; the
// level selects the target's surface form, as in `instantiate`.
skill::SkillArtifact direct_inject_baseline(
    const skill::SkillArtifact& base, const deps::PackageName& target,
    const std::string& template_id,
    const std::map<std::string, std::string>& extra_templates = {},
    skill::ExplicitnessLevel level = skill::ExplicitnessLevel::Original);

}  // namespace depsteer::opt
