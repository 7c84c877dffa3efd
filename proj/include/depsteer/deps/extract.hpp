#pragma once
// Dependency extraction from model output: import statements, pip install
// command lines, requirements-style blocks, and manifest dependency
// arrays. Unparseable fragments are skipped, never fatal.

#include <cstddef>
#include <string_view>
#include <vector>

#include "depsteer/deps/name.hpp"

namespace depsteer::deps {

enum class ExtractionSource {
    ImportStatement = 0,
    InstallCommand = 1,
    RequirementsEntry = 2,
    ProjectManifestEntry = 3,
};

std::string_view source_label(ExtractionSource source);
ExtractionSource source_from_label(std::string_view label);  // throws on unknown

struct DependencyEntry {
    PackageName name;
    ExtractionSource source;
    std::size_t line = 0;  // 1-based line in the scanned text
};

// Set semantics on (normalized name, source); the first occurrence wins
// the recorded line. Iteration order is sorted by (normalized, source).
class DependencySet {
public:
    void add(PackageName name, ExtractionSource source, std::size_t line);

    const std::vector<DependencyEntry>& entries() const;
    bool contains(const PackageName& name) const;
    bool contains(const PackageName& name, ExtractionSource source) const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::vector<DependencyEntry> entries_;  // kept sorted
};

DependencySet extract_dependencies(std::string_view text);

}  // namespace depsteer::deps
