#include "depsteer/deps/name.hpp"

#include <cctype>
#include <stdexcept>
#include <vector>

namespace depsteer::deps {

namespace {

bool is_separator(char c) { return c == '-' || c == '_' || c == '.'; }

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || is_separator(c);
}

char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

}  // namespace

bool is_valid_name_token(std::string_view raw) {
    if (raw.empty()) return false;
    for (char c : raw) {
        if (!is_name_char(c)) return false;
    }
    return !is_separator(raw.front()) && !is_separator(raw.back());
}

std::string normalize_name(std::string_view raw) {
    if (raw.empty()) {
        throw std::invalid_argument("empty package name");
    }
    if (is_separator(raw.front())) {
        throw std::invalid_argument("package name starts with a separator: '" +
                                    std::string(raw) + "'");
    }
    std::string out;
    out.reserve(raw.size());
    bool pending_separator = false;
    for (char c : raw) {
        if (!is_name_char(c)) {
            throw std::invalid_argument("invalid character in package name: '" +
                                        std::string(raw) + "'");
        }
        if (is_separator(c)) {
            pending_separator = true;
            continue;
        }
        if (pending_separator && !out.empty()) {
            out.push_back('-');
        }
        pending_separator = false;
        out.push_back(lower(c));
    }
    // A trailing separator run or an all-separator token leaves the name
    // outside [a-z0-9]([a-z0-9-]*[a-z0-9])?.
    if (out.empty() || pending_separator) {
        throw std::invalid_argument("package name reduces to an invalid form: '" +
                                    std::string(raw) + "'");
    }
    return out;
}

PackageName PackageName::parse(std::string_view raw) {
    PackageName name;
    name.normalized_ = normalize_name(raw);
    name.raw_.assign(raw);
    return name;
}

std::optional<PackageName> PackageName::try_parse(std::string_view raw) {
    if (!is_valid_name_token(raw)) return std::nullopt;
    try {
        return parse(raw);
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

bool contains_normalized_form(std::string_view text, std::string_view normalized_target) {
    if (normalized_target.empty()) return false;
    // Split the normalized target into its alphanumeric segments. A match
    // is segment 0, then >=1 separator chars, then segment 1, and so on.
    std::vector<std::string_view> segments;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= normalized_target.size(); ++i) {
        if (i == normalized_target.size() || normalized_target[i] == '-') {
            segments.push_back(normalized_target.substr(start, i - start));
            start = i + 1;
        }
    }

    auto match_at = [&](std::size_t pos) {
        std::size_t p = pos;
        for (std::size_t s = 0; s < segments.size(); ++s) {
            if (s > 0) {
                std::size_t run = 0;
                while (p < text.size() && is_separator(text[p])) {
                    ++p;
                    ++run;
                }
                if (run == 0) return false;
            }
            for (char c : segments[s]) {
                if (p >= text.size() || lower(text[p]) != c) return false;
                ++p;
            }
        }
        return true;
    };

    for (std::size_t pos = 0; pos < text.size(); ++pos) {
        if (lower(text[pos]) == segments.front().front() && match_at(pos)) {
            return true;
        }
    }
    return false;
}

}  // namespace depsteer::deps
