#pragma once
// Skill artifacts: persistent instruction documents with three anchor
// sections. The on-disk format is UTF-8 markdown with optional key:value
// frontmatter and the reserved headings `## SYSTEM`, `## INSTRUCTIONS`,
// `## NOTES`. Files without headings are accepted; their whole content
// lands in the system header section.

#include <array>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace depsteer::skill {

// Rendering order is SystemHeader < ExecutionInstructions < Tail.
enum class AnchorPosition { SystemHeader = 0, ExecutionInstructions = 1, Tail = 2 };

inline constexpr std::size_t kAnchorCount = 3;

std::string_view anchor_heading(AnchorPosition a);   // "## SYSTEM" etc.
std::string_view anchor_label(AnchorPosition a);     // "system" etc.
AnchorPosition anchor_from_label(std::string_view label);  // throws on unknown

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class SkillArtifact {
public:
    std::string name;
    std::string description;
    std::map<std::string, std::string> metadata;

    const std::string& body(AnchorPosition a) const {
        return bodies_[static_cast<std::size_t>(a)];
    }
    // Normalizes the body (strips outer newlines). Rejects bodies that
    // contain a reserved heading line, which would break round-tripping.
    void set_body(AnchorPosition a, std::string body);

    bool operator==(const SkillArtifact&) const = default;

private:
    std::array<std::string, kAnchorCount> bodies_;
};

// Splits on the reserved headings; unheaded leading text becomes the
// system header; missing sections are created empty. Throws ParseError
// with a line number on duplicate headings or malformed frontmatter.
SkillArtifact parse_skill(std::string_view text);

// Canonical serialization. parse_skill(render(s)) == s for well-formed s.
std::string render(const SkillArtifact& skill);

SkillArtifact load_skill(const std::string& path);
void save_skill(const SkillArtifact& skill, const std::string& path);

}  // namespace depsteer::skill
