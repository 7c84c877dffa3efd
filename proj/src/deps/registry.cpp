#include "depsteer/deps/registry.hpp"

#include <fstream>
#include <sstream>

#include "depsteer/common.hpp"
#include "httplib.h"

namespace depsteer::deps {
namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

RegistrySnapshot load_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open snapshot file: " + path);
    RegistrySnapshot snapshot;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string text = trim(line);
        if (text.empty()) continue;
        if (text.front() == '#') {
            std::string comment = trim(text.substr(1));
            if (comment.rfind("captured-at:", 0) == 0) {
                snapshot.captured_at = trim(comment.substr(12));
            } else if (comment.rfind("source:", 0) == 0) {
                snapshot.source = trim(comment.substr(7));
            }
            continue;
        }
        auto name = PackageName::try_parse(text);
        if (!name) {
            std::ostringstream msg;
            msg << "invalid package name in " << path << " line " << line_no
                << ": '" << text << "'";
            throw ConfigError(msg.str());
        }
        snapshot.names.insert(name->normalized());
    }
    return snapshot;
}

bool check_existence(const PackageName& name, const RegistrySnapshot& snapshot) {
    return snapshot.contains(name);
}

HttpRegistryClient::HttpRegistryClient(std::string base_url,
                                       std::string url_template,
                                       int timeout_seconds)
    : base_url_(std::move(base_url)),
      url_template_(std::move(url_template)),
      timeout_seconds_(timeout_seconds) {
    if (url_template_.find("{name}") == std::string::npos) {
        throw ConfigError("registry url template must contain {name}");
    }
}

bool HttpRegistryClient::exists(const PackageName& name) {
    std::string path = url_template_;
    auto pos = path.find("{name}");
    path.replace(pos, 6, name.normalized());

    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    auto res = client.Get(path);
    if (!res) {
        throw TransportError("registry lookup failed for " + name.normalized() +
                             ": " + httplib::to_string(res.error()));
    }
    if (res->status == 200) return true;
    if (res->status == 404) return false;
    throw TransportError("registry lookup for " + name.normalized() +
                         " returned status " + std::to_string(res->status));
}

}  // namespace depsteer::deps
