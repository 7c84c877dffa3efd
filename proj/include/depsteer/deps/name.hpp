#pragma once
// Package name normalization. Registry lookups and set semantics all key
// on the normalized form: lowercase, with runs of '-', '_', '.' collapsed
// to a single '-'.

#include <optional>
#include <string>
#include <string_view>

namespace depsteer::deps {

// Throws std::invalid_argument for tokens with characters outside
// [A-Za-z0-9._-] or whose normalized form is not a valid package name
// (empty, or leading/trailing separator).
std::string normalize_name(std::string_view raw);

bool is_valid_name_token(std::string_view raw);

class PackageName {
public:
    PackageName() = default;
    // Throws std::invalid_argument on invalid tokens.
    static PackageName parse(std::string_view raw);
    static std::optional<PackageName> try_parse(std::string_view raw);

    const std::string& raw() const { return raw_; }
    const std::string& normalized() const { return normalized_; }

    // Equality is registry equality: normalized forms match.
    friend bool operator==(const PackageName& a, const PackageName& b) {
        return a.normalized_ == b.normalized_;
    }
    friend auto operator<=>(const PackageName& a, const PackageName& b) {
        return a.normalized_ <=> b.normalized_;
    }

private:
    std::string raw_;
    std::string normalized_;
};

// True when `text` contains any surface form whose normalization equals
// `normalized_target`: segments matched case-insensitively, separator runs
// of [-_.] matched interchangeably. This is the matcher behind the scorer
// veto and the prose-mention flag.
bool contains_normalized_form(std::string_view text, std::string_view normalized_target);

}  // namespace depsteer::deps
