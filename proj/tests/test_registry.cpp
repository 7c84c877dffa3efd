#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>

#include "depsteer/common.hpp"
#include "depsteer/deps/registry.hpp"
#include "doctest.h"

using namespace depsteer;
using namespace depsteer::deps;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, std::string_view content)
        : path((std::filesystem::temp_directory_path() / name).string()) {
        write_file(path, content);
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_snapshot reads names, comments, and headers") {
    TempFile file("depsteer_snap1.txt",
                  "# captured-at: 2026-08-01\n"
                  "# source: test fixture\n"
                  "\n"
                  "requests\n"
                  "  Flask  \n"
                  "# a stray comment\n"
                  "NumPy\n");
    const auto snapshot = load_snapshot(file.path);
    CHECK(snapshot.captured_at == "2026-08-01");
    CHECK(snapshot.source == "test fixture");
    CHECK(snapshot.names.size() == 3);
    CHECK(snapshot.contains(PackageName::parse("requests")));
    CHECK(snapshot.contains(PackageName::parse("FLASK")));
    CHECK(snapshot.contains(PackageName::parse("numpy")));
    CHECK_FALSE(snapshot.contains(PackageName::parse("django")));
}

TEST_CASE("snapshot membership uses normalized names") {
    TempFile file("depsteer_snap2.txt", "Foo_Bar\n");
    const auto snapshot = load_snapshot(file.path);
    CHECK(snapshot.contains(PackageName::parse("foo-bar")));
    CHECK(snapshot.contains(PackageName::parse("FOO.BAR")));
    CHECK(snapshot.contains("foo__bar"));
    CHECK_FALSE(snapshot.contains("other"));
    CHECK_FALSE(snapshot.contains("not a name"));
}

TEST_CASE("load_snapshot rejects malformed entries and missing files") {
    TempFile file("depsteer_snap3.txt", "ok-name\nbad name here\n");
    CHECK_THROWS_AS(load_snapshot(file.path), ConfigError);
    CHECK_THROWS_AS(load_snapshot("/nonexistent/snapshot.txt"), ConfigError);
}

TEST_CASE("check_existence and SnapshotChecker agree with the snapshot") {
    TempFile file("depsteer_snap4.txt", "requests\n");
    const auto snapshot = load_snapshot(file.path);
    CHECK(check_existence(PackageName::parse("requests"), snapshot));
    CHECK_FALSE(check_existence(PackageName::parse("ghost-pkg"), snapshot));

    SnapshotChecker checker(snapshot);
    CHECK(checker.exists(PackageName::parse("Requests")));
    CHECK_FALSE(checker.exists(PackageName::parse("ghost-pkg")));
}

TEST_CASE("stdlib module list is sorted, unique, and plausible") {
    const auto names = stdlib_module_names();
    CHECK(names.size() > 100);
    CHECK(std::is_sorted(names.begin(), names.end(),
                         [](const char* a, const char* b) {
                             return std::string_view(a) < std::string_view(b);
                         }));
    CHECK(is_stdlib_module("os"));
    CHECK(is_stdlib_module("json"));
    CHECK(is_stdlib_module("pathlib"));
    CHECK(is_stdlib_module("asyncio"));
    CHECK_FALSE(is_stdlib_module("requests"));
    CHECK_FALSE(is_stdlib_module("numpy"));
    CHECK_FALSE(is_stdlib_module("awesome-request"));
}

TEST_CASE("HttpRegistryClient validates its url template") {
    CHECK_THROWS_AS(HttpRegistryClient("http://127.0.0.1:1", "/simple/pkg/"),
                    ConfigError);
    // A well-formed template constructs without touching the network.
    HttpRegistryClient client("http://127.0.0.1:1", "/simple/{name}/", 1);
    (void)client;
}
