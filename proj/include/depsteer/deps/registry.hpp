#pragma once

#include <set>
#include <span>
#include <string>

#include "depsteer/deps/name.hpp"

namespace depsteer::deps {

// Offline stand-in for a package index: the set of names that exist.
struct RegistrySnapshot {
    std::set<std::string> names;  // normalized
    std::string captured_at;
    std::string source;

    bool contains(const PackageName& name) const {
        return names.count(name.normalized()) != 0;
    }
    bool contains(const std::string& raw) const {
        auto parsed = PackageName::try_parse(raw);
        return parsed && names.count(parsed->normalized()) != 0;
    }
};

// File format: one name per line, '#' starts a comment, blank lines ignored.
// Optional "# captured-at: ..." / "# source: ..." comment headers are picked up.
RegistrySnapshot load_snapshot(const std::string& path);

bool check_existence(const PackageName& name, const RegistrySnapshot& snapshot);

// Shared existence interface so campaigns can swap the offline snapshot for a
// live index lookup.
class ExistenceChecker {
public:
    virtual ~ExistenceChecker() = default;
    virtual bool exists(const PackageName& name) = 0;
};

class SnapshotChecker final : public ExistenceChecker {
public:
    explicit SnapshotChecker(RegistrySnapshot snapshot)
        : snapshot_(std::move(snapshot)) {}
    bool exists(const PackageName& name) override {
        return snapshot_.contains(name);
    }
    const RegistrySnapshot& snapshot() const { return snapshot_; }

private:
    RegistrySnapshot snapshot_;
};

// Queries package metadata over HTTP: 200 means the package exists, 404 means
// it does not. `url_template` must contain "{name}", e.g.
// "http://127.0.0.1:9200/simple/{name}/". Any other status or a transport
// failure raises TransportError. Disabled by default in campaign configs.
class HttpRegistryClient final : public ExistenceChecker {
public:
    HttpRegistryClient(std::string base_url, std::string url_template,
                       int timeout_seconds = 10);
    bool exists(const PackageName& name) override;

private:
    std::string base_url_;
    std::string url_template_;
    int timeout_seconds_;
};

// Normalized names of CPython standard-library top-level modules, sorted.
std::span<const char* const> stdlib_module_names();
bool is_stdlib_module(const std::string& normalized);

}  // namespace depsteer::deps
