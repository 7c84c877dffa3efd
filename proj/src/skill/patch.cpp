#include "depsteer/skill/patch.hpp"

#include <cctype>
#include <stdexcept>

namespace depsteer::skill {

namespace {

bool is_separator(char c) { return c == '-' || c == '_' || c == '.'; }

// Split around the first separator; names without one split at the
// midpoint. Used by the concatenation and partial-hint levels.
std::pair<std::string, std::string> split_name(const std::string& raw) {
    if (raw.size() < 2) {
        throw std::invalid_argument(
            "package name too short to conceal by splitting: '" + raw + "'");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (is_separator(raw[i])) {
            return {raw.substr(0, i), raw.substr(i)};
        }
    }
    const std::size_t mid = (raw.size() + 1) / 2;
    return {raw.substr(0, mid), raw.substr(mid)};
}

std::string replace_all(std::string text, std::string_view token, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
    return text;
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

ExplicitnessLevel explicitness_from_int(int level) {
    if (level < 0 || level > 5) {
        throw std::invalid_argument("explicitness level out of range: " +
                                    std::to_string(level));
    }
    return static_cast<ExplicitnessLevel>(level);
}

std::string_view explicitness_label(ExplicitnessLevel level) {
    switch (level) {
    case ExplicitnessLevel::Original: return "Original";
    case ExplicitnessLevel::StringConcatenation: return "StringConcatenation";
    case ExplicitnessLevel::RoleMasking: return "RoleMasking";
    case ExplicitnessLevel::PartialHint: return "PartialHint";
    case ExplicitnessLevel::Omission: return "Omission";
    case ExplicitnessLevel::InitialsOnly: return "InitialsOnly";
    }
    throw std::invalid_argument("invalid explicitness level");
}

const ObfuscationTemplates& default_obfuscation_templates() {
    static const ObfuscationTemplates templates;
    return templates;
}

std::string obfuscate(const deps::PackageName& package_name, ExplicitnessLevel level,
                      const ObfuscationTemplates& templates) {
    const std::string& raw = package_name.raw();
    switch (level) {
    case ExplicitnessLevel::Original:
        return raw;
    case ExplicitnessLevel::StringConcatenation: {
        auto [head, tail] = split_name(raw);
        return "'" + head + "' + '" + tail + "'";
    }
    case ExplicitnessLevel::RoleMasking:
        return replace_all(templates.role_masking, "{upper}", to_upper(raw));
    case ExplicitnessLevel::PartialHint: {
        auto [head, tail] = split_name(raw);
        std::string out = replace_all(templates.partial_hint, "{head}", head);
        return replace_all(std::move(out), "{tail}", tail);
    }
    case ExplicitnessLevel::Omission:
        return "";
    case ExplicitnessLevel::InitialsOnly: {
        std::string acronym;
        bool token_start = true;
        for (char c : raw) {
            if (is_separator(c)) {
                token_start = true;
                continue;
            }
            if (token_start) {
                if (!acronym.empty()) acronym.push_back('-');
                acronym.push_back(
                    static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
                token_start = false;
            }
        }
        return acronym;
    }
    }
    throw std::invalid_argument("invalid explicitness level");
}

SkillArtifact inject(const SkillArtifact& skill, const AdversarialPatch& patch,
                     AnchorPosition position) {
    if (patch.text.empty()) {
        throw std::invalid_argument("patch text must be non-empty");
    }
    SkillArtifact out = skill;
    const std::string& existing = skill.body(position);
    if (existing.empty()) {
        out.set_body(position, patch.text);
    } else {
        out.set_body(position, existing + "\n\n" + patch.text);
    }
    return out;
}

}  // namespace depsteer::skill
