#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "depsteer/deps/extract.hpp"
#include "doctest.h"
#include "extract_cases.hpp"

using namespace depsteer::deps;
using depsteer::testing::extraction_corpus;

namespace {

std::vector<std::pair<std::string, std::string>> flatten(const DependencySet& set) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& entry : set.entries()) {
        out.emplace_back(entry.name.normalized(), std::string(source_label(entry.source)));
    }
    return out;
}

}  // namespace

TEST_CASE("source labels round trip") {
    for (const auto source :
         {ExtractionSource::ImportStatement, ExtractionSource::InstallCommand,
          ExtractionSource::RequirementsEntry, ExtractionSource::ProjectManifestEntry}) {
        CHECK(source_from_label(source_label(source)) == source);
    }
    CHECK_THROWS_AS(source_from_label("bogus"), std::invalid_argument);
}

TEST_CASE("hand-labeled corpus matches exactly per case") {
    for (const auto& c : extraction_corpus()) {
        CAPTURE(c.title);
        auto got = flatten(extract_dependencies(c.text));
        auto want = c.expected;
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        CHECK(got == want);
    }
}

TEST_CASE("corpus-wide precision and recall are both 1.0") {
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
    for (const auto& c : extraction_corpus()) {
        auto got = flatten(extract_dependencies(c.text));
        auto want = c.expected;
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        for (const auto& g : got) {
            if (std::binary_search(want.begin(), want.end(), g)) {
                ++true_positive;
            } else {
                ++false_positive;
            }
        }
        for (const auto& w : want) {
            if (!std::binary_search(got.begin(), got.end(), w)) ++false_negative;
        }
    }
    REQUIRE(true_positive > 0);
    const double precision =
        static_cast<double>(true_positive) / static_cast<double>(true_positive + false_positive);
    const double recall =
        static_cast<double>(true_positive) / static_cast<double>(true_positive + false_negative);
    CHECK(precision == 1.0);
    CHECK(recall == 1.0);
}

TEST_CASE("corpus covers every source and at least 40 cases") {
    CHECK(extraction_corpus().size() >= 40);
    bool seen[4] = {false, false, false, false};
    for (const auto& c : extraction_corpus()) {
        for (const auto& [name, label] : c.expected) {
            seen[static_cast<int>(source_from_label(label))] = true;
        }
    }
    for (const bool s : seen) CHECK(s);
}

TEST_CASE("entries carry 1-based line numbers, first occurrence wins") {
    const auto set = extract_dependencies("import requests\n\nimport requests\n");
    REQUIRE(set.size() == 1);
    CHECK(set.entries()[0].line == 1);

    const auto multi = extract_dependencies("x = 1\npip install flask\n");
    REQUIRE(multi.size() == 1);
    CHECK(multi.entries()[0].line == 2);
}

TEST_CASE("DependencySet lookups respect normalization and source") {
    const auto set = extract_dependencies("import Foo_Bar\npip install foo-bar\n");
    // Same normalized name under two sources stays two entries.
    CHECK(set.size() == 2);
    const auto name = PackageName::parse("FOO.BAR");
    CHECK(set.contains(name));
    CHECK(set.contains(name, ExtractionSource::ImportStatement));
    CHECK(set.contains(name, ExtractionSource::InstallCommand));
    CHECK_FALSE(set.contains(name, ExtractionSource::RequirementsEntry));
    CHECK_FALSE(set.contains(PackageName::parse("other")));
}

TEST_CASE("iteration order is sorted by normalized name then source") {
    const auto set = extract_dependencies(
        "pip install zeta alpha\nimport zeta\n");
    REQUIRE(set.size() == 3);
    CHECK(set.entries()[0].name.normalized() == "alpha");
    CHECK(set.entries()[0].source == ExtractionSource::InstallCommand);
    CHECK(set.entries()[1].name.normalized() == "zeta");
    CHECK(set.entries()[1].source == ExtractionSource::ImportStatement);
    CHECK(set.entries()[2].name.normalized() == "zeta");
    CHECK(set.entries()[2].source == ExtractionSource::InstallCommand);
}

// The install scanner treats every bare token after `pip install` as a
// requirement until a separator, closing backtick, or line end. Plain prose
// continuing the sentence is therefore picked up as package names. Fixture
// texts put commands in code spans, which is how model output writes them;
// this case documents the behavior on unfenced prose.
TEST_CASE("unfenced prose after an install command is read as packages") {
    const auto set = extract_dependencies("pip install requests to get set up\n");
    CHECK(set.contains(PackageName::parse("requests")));
    CHECK(set.contains(PackageName::parse("to")));
    CHECK(set.size() == 5);
}
