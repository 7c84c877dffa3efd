#include "depsteer/skill/artifact.hpp"

#include <stdexcept>
#include <vector>

#include "depsteer/common.hpp"

namespace depsteer::skill {

namespace {

constexpr std::string_view kHeadings[kAnchorCount] = {"## SYSTEM", "## INSTRUCTIONS",
                                                      "## NOTES"};
constexpr std::string_view kLabels[kAnchorCount] = {"system", "instructions", "tail"};
constexpr std::string_view kFrontmatterFence = "---";

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool is_heading(std::string_view line, std::size_t* index) {
    for (std::size_t i = 0; i < kAnchorCount; ++i) {
        if (line == kHeadings[i]) {
            *index = i;
            return true;
        }
    }
    return false;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n') {
            lines.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    if (start < text.size()) lines.push_back(text.substr(start));
    return lines;
}

std::string join_trimmed(const std::vector<std::string_view>& lines) {
    std::size_t first = 0;
    std::size_t last = lines.size();
    while (first < last && lines[first].empty()) ++first;
    while (last > first && lines[last - 1].empty()) --last;
    std::string body;
    for (std::size_t i = first; i < last; ++i) {
        if (i > first) body.push_back('\n');
        body.append(lines[i]);
    }
    return body;
}

bool blank(std::string_view s) {
    return s.find_first_not_of(" \t") == std::string_view::npos;
}

void require_single_line(std::string_view value, const char* what) {
    if (value.find('\n') != std::string_view::npos) {
        throw std::invalid_argument(std::string(what) + " must be single-line");
    }
}

}  // namespace

std::string_view anchor_heading(AnchorPosition a) {
    return kHeadings[static_cast<std::size_t>(a)];
}

std::string_view anchor_label(AnchorPosition a) {
    return kLabels[static_cast<std::size_t>(a)];
}

AnchorPosition anchor_from_label(std::string_view label) {
    for (std::size_t i = 0; i < kAnchorCount; ++i) {
        if (label == kLabels[i]) return static_cast<AnchorPosition>(i);
    }
    throw std::invalid_argument("unknown anchor: '" + std::string(label) +
                                "' (expected system|instructions|tail)");
}

void SkillArtifact::set_body(AnchorPosition a, std::string body) {
    auto lines = split_lines(body);
    for (auto line : lines) {
        std::size_t idx;
        if (is_heading(strip_cr(line), &idx)) {
            throw std::invalid_argument(
                "section body may not contain the reserved heading '" +
                std::string(kHeadings[idx]) + "'");
        }
    }
    bodies_[static_cast<std::size_t>(a)] = join_trimmed(lines);
}

SkillArtifact parse_skill(std::string_view text) {
    SkillArtifact skill;
    auto lines = split_lines(text);
    std::size_t pos = 0;

    // Optional frontmatter fence.
    if (!lines.empty() && strip_cr(lines[0]) == kFrontmatterFence) {
        std::size_t end = lines.size();
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (strip_cr(lines[i]) == kFrontmatterFence) {
                end = i;
                break;
            }
        }
        if (end == lines.size()) {
            throw ParseError("unterminated frontmatter", lines.size());
        }
        for (std::size_t i = 1; i < end; ++i) {
            std::string_view line = strip_cr(lines[i]);
            if (blank(line)) continue;
            const std::size_t colon = line.find(':');
            if (colon == std::string_view::npos || colon == 0) {
                throw ParseError("malformed frontmatter entry", i + 1);
            }
            std::string key(line.substr(0, colon));
            std::string_view value = line.substr(colon + 1);
            if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
            if (key == "name") {
                skill.name.assign(value);
            } else if (key == "description") {
                skill.description.assign(value);
            } else if (!skill.metadata.emplace(key, std::string(value)).second) {
                throw ParseError("duplicate frontmatter key '" + key + "'", i + 1);
            }
        }
        pos = end + 1;
    }

    std::array<std::vector<std::string_view>, kAnchorCount> section_lines;
    std::array<bool, kAnchorCount> seen{};
    std::vector<std::string_view> leading;
    bool in_section = false;
    std::size_t current = 0;

    for (; pos < lines.size(); ++pos) {
        std::string_view line = strip_cr(lines[pos]);
        std::size_t idx;
        if (is_heading(line, &idx)) {
            if (seen[idx]) {
                throw ParseError("duplicate heading '" + std::string(kHeadings[idx]) + "'",
                                 pos + 1);
            }
            if (idx == 0) {
                for (auto l : leading) {
                    if (!blank(l)) {
                        throw ParseError(
                            "unheaded leading text conflicts with an explicit '## SYSTEM' "
                            "section",
                            pos + 1);
                    }
                }
                leading.clear();
            }
            seen[idx] = true;
            in_section = true;
            current = idx;
            continue;
        }
        if (in_section) {
            section_lines[current].push_back(line);
        } else {
            leading.push_back(line);
        }
    }

    if (!leading.empty()) {
        section_lines[0] = std::move(leading);
    }
    for (std::size_t i = 0; i < kAnchorCount; ++i) {
        skill.set_body(static_cast<AnchorPosition>(i), join_trimmed(section_lines[i]));
    }
    return skill;
}

std::string render(const SkillArtifact& skill) {
    std::string out;
    const bool has_frontmatter =
        !skill.name.empty() || !skill.description.empty() || !skill.metadata.empty();
    if (has_frontmatter) {
        require_single_line(skill.name, "skill name");
        require_single_line(skill.description, "skill description");
        out.append(kFrontmatterFence).push_back('\n');
        if (!skill.name.empty()) {
            out.append("name: ").append(skill.name).push_back('\n');
        }
        if (!skill.description.empty()) {
            out.append("description: ").append(skill.description).push_back('\n');
        }
        for (const auto& [key, value] : skill.metadata) {
            if (key.empty() || key == "name" || key == "description" ||
                key.find(':') != std::string::npos || key.find('\n') != std::string::npos) {
                throw std::invalid_argument("invalid metadata key: '" + key + "'");
            }
            require_single_line(value, "metadata value");
            out.append(key).append(": ").append(value).push_back('\n');
        }
        out.append(kFrontmatterFence).append("\n\n");
    }
    for (std::size_t i = 0; i < kAnchorCount; ++i) {
        out.append(kHeadings[i]).push_back('\n');
        const std::string& body = skill.body(static_cast<AnchorPosition>(i));
        if (!body.empty()) {
            out.append(body).push_back('\n');
        }
        if (i + 1 < kAnchorCount) out.push_back('\n');
    }
    return out;
}

SkillArtifact load_skill(const std::string& path) {
    return parse_skill(read_file(path));
}

void save_skill(const SkillArtifact& skill, const std::string& path) {
    write_file(path, render(skill));
}

}  // namespace depsteer::skill
