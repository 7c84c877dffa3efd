#include "depsteer/deps/extract.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace depsteer::deps {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && (is_space(s.front()) || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (is_space(s.back()) || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string lower_copy(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string_view> tokenize(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (is_space(line[i]) || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && !is_space(line[i]) && line[i] != '\r') ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

std::string_view strip_quotes(std::string_view token) {
    while (token.size() >= 2 &&
           ((token.front() == '"' && token.back() == '"') ||
            (token.front() == '\'' && token.back() == '\''))) {
        token = token.substr(1, token.size() - 2);
    }
    return token;
}

bool is_identifier_path(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') {
            return false;
        }
    }
    return true;
}

std::string_view top_level_module(std::string_view path) {
    if (path.empty() || path.front() == '.') return {};  // relative import
    const std::size_t dot = path.find('.');
    return dot == std::string_view::npos ? path : path.substr(0, dot);
}

// Requirement-style token: name up to the first extras bracket, version
// specifier, environment marker, or direct reference.
std::string_view requirement_name(std::string_view token) {
    const std::size_t cut = token.find_first_of("[=<>!~;@(");
    return cut == std::string_view::npos ? token : token.substr(0, cut);
}

// pip options that consume the following token.
bool flag_takes_value(std::string_view flag) {
    static constexpr std::string_view kValueFlags[] = {
        "-i", "--index-url",  "--extra-index-url", "-r", "--requirement",
        "-c", "--constraint", "-f", "--find-links", "-t", "--target",
        "-e", "--editable",   "--platform", "--python-version", "--proxy",
        "--cache-dir", "--src", "--prefix", "--root", "-b", "--build",
    };
    for (auto f : kValueFlags) {
        if (flag == f) return true;
    }
    return false;
}

bool is_command_separator(std::string_view token) {
    return token == "&&" || token == "||" || token == ";" || token == "|";
}

class Extractor {
public:
    explicit Extractor(std::string_view text) : text_(text) {}

    DependencySet run() {
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= text_.size()) {
            const std::size_t end = text_.find('\n', start);
            std::string_view line = text_.substr(
                start, end == std::string_view::npos ? text_.size() - start : end - start);
            ++line_no;
            scan_line(line, line_no);
            if (end == std::string_view::npos) break;
            start = end + 1;
        }
        return std::move(out_);
    }

private:
    void scan_line(std::string_view raw_line, std::size_t line_no) {
        std::string_view line = trim(raw_line);

        if (line.starts_with("```")) {
            if (in_fence_) {
                in_fence_ = false;
                in_requirements_fence_ = false;
                in_manifest_array_ = false;
            } else {
                in_fence_ = true;
                const std::string info = lower_copy(trim(line.substr(3)));
                in_requirements_fence_ = info.find("requirements") != std::string::npos;
            }
            return;
        }

        if (in_manifest_array_) {
            scan_quoted_requirements(line, line_no);
            if (line.find(']') != std::string_view::npos) in_manifest_array_ = false;
            return;
        }

        if (in_requirements_fence_) {
            scan_requirements_line(line, line_no);
            return;
        }

        scan_imports(line, line_no);
        scan_pip_install(line, line_no);
        scan_manifest_start(line, line_no);
    }

    void scan_imports(std::string_view line, std::size_t line_no) {
        auto tokens = tokenize(line);
        if (tokens.empty()) return;
        if (tokens[0] == "import") {
            // import a.b, c as d -- items split on commas; malformed items
            // (prose such as "import the library") are dropped.
            std::string_view rest = trim(line.substr(line.find("import") + 6));
            std::size_t item_start = 0;
            for (std::size_t i = 0; i <= rest.size(); ++i) {
                if (i == rest.size() || rest[i] == ',') {
                    add_import_item(trim(rest.substr(item_start, i - item_start)), line_no);
                    item_start = i + 1;
                }
            }
        } else if (tokens[0] == "from" && tokens.size() >= 3 && tokens[2] == "import") {
            if (is_identifier_path(tokens[1])) {
                add_module(top_level_module(tokens[1]), ExtractionSource::ImportStatement,
                           line_no);
            }
        }
    }

    void add_import_item(std::string_view item, std::size_t line_no) {
        auto words = tokenize(item);
        if (words.empty()) return;
        // Accept exactly `path` or `path as alias`.
        if (words.size() != 1 && (words.size() != 3 || words[1] != "as")) return;
        if (!is_identifier_path(words[0])) return;
        add_module(top_level_module(words[0]), ExtractionSource::ImportStatement, line_no);
    }

    void scan_pip_install(std::string_view line, std::size_t line_no) {
        // Inline code spans are common in model output; a closing backtick
        // ends the command.
        auto raw_tokens = tokenize(line);
        std::vector<std::string_view> tokens;
        std::vector<bool> closes_span;
        tokens.reserve(raw_tokens.size());
        for (auto t : raw_tokens) {
            while (!t.empty() && t.front() == '`') t.remove_prefix(1);
            bool closing = false;
            while (!t.empty() && t.back() == '`') {
                t.remove_suffix(1);
                closing = true;
            }
            tokens.push_back(t);
            closes_span.push_back(closing);
        }
        std::size_t i = 0;
        while (i < tokens.size()) {
            std::size_t after = 0;
            if ((tokens[i] == "pip" || tokens[i] == "pip3") && i + 1 < tokens.size() &&
                tokens[i + 1] == "install") {
                after = i + 2;
            } else if ((tokens[i] == "python" || tokens[i] == "python3") &&
                       i + 3 < tokens.size() && tokens[i + 1] == "-m" &&
                       tokens[i + 2] == "pip" && tokens[i + 3] == "install") {
                after = i + 4;
            } else {
                ++i;
                continue;
            }
            i = after;
            while (i < tokens.size()) {
                std::string_view token = tokens[i];
                if (is_command_separator(token)) break;
                if (!token.empty() && token.front() == '-') {
                    if (flag_takes_value(token)) ++i;  // swallow the value
                    ++i;
                    continue;
                }
                add_requirement(strip_quotes(token), ExtractionSource::InstallCommand,
                                line_no);
                if (closes_span[i]) {
                    ++i;
                    break;
                }
                ++i;
            }
        }
    }

    void scan_requirements_line(std::string_view line, std::size_t line_no) {
        if (line.empty() || line.front() == '#' || line.front() == '-') return;
        add_requirement(strip_quotes(tokenize(line).empty() ? line : tokenize(line)[0]),
                        ExtractionSource::RequirementsEntry, line_no);
    }

    void scan_manifest_start(std::string_view line, std::size_t line_no) {
        // `dependencies = [` / `"dependencies": [` openers, TOML or JSON.
        std::string_view key = line;
        if (key.starts_with("\"") || key.starts_with("'")) key.remove_prefix(1);
        if (!key.starts_with("dependencies")) return;
        key.remove_prefix(12);
        if (key.starts_with("\"") || key.starts_with("'")) key.remove_prefix(1);
        key = trim(key);
        if (key.empty() || (key.front() != '=' && key.front() != ':')) return;
        const std::size_t open = key.find('[');
        if (open == std::string_view::npos) return;
        scan_quoted_requirements(key.substr(open), line_no);
        if (key.find(']', open) == std::string_view::npos) in_manifest_array_ = true;
    }

    void scan_quoted_requirements(std::string_view line, std::size_t line_no) {
        std::size_t i = 0;
        while (i < line.size()) {
            const char quote = line[i];
            if (quote != '"' && quote != '\'') {
                ++i;
                continue;
            }
            const std::size_t close = line.find(quote, i + 1);
            if (close == std::string_view::npos) return;
            add_requirement(line.substr(i + 1, close - i - 1),
                            ExtractionSource::ProjectManifestEntry, line_no);
            i = close + 1;
        }
    }

    void add_requirement(std::string_view token, ExtractionSource source,
                         std::size_t line_no) {
        add_name(requirement_name(trim(token)), source, line_no);
    }

    void add_module(std::string_view token, ExtractionSource source, std::size_t line_no) {
        add_name(token, source, line_no);
    }

    void add_name(std::string_view token, ExtractionSource source, std::size_t line_no) {
        if (auto name = PackageName::try_parse(token)) {
            out_.add(std::move(*name), source, line_no);
        }
    }

    std::string_view text_;
    DependencySet out_;
    bool in_fence_ = false;
    bool in_requirements_fence_ = false;
    bool in_manifest_array_ = false;
};

}  // namespace

std::string_view source_label(ExtractionSource source) {
    switch (source) {
    case ExtractionSource::ImportStatement: return "import";
    case ExtractionSource::InstallCommand: return "install";
    case ExtractionSource::RequirementsEntry: return "requirements";
    case ExtractionSource::ProjectManifestEntry: return "manifest";
    }
    return "?";
}

ExtractionSource source_from_label(std::string_view label) {
    if (label == "import") return ExtractionSource::ImportStatement;
    if (label == "install") return ExtractionSource::InstallCommand;
    if (label == "requirements") return ExtractionSource::RequirementsEntry;
    if (label == "manifest") return ExtractionSource::ProjectManifestEntry;
    throw std::invalid_argument("unknown extraction source: " + std::string(label));
}

void DependencySet::add(PackageName name, ExtractionSource source, std::size_t line) {
    auto key_less = [](const DependencyEntry& e, const std::pair<const std::string&, int>& k) {
        if (e.name.normalized() != k.first) return e.name.normalized() < k.first;
        return static_cast<int>(e.source) < k.second;
    };
    const std::pair<const std::string&, int> key{name.normalized(),
                                                 static_cast<int>(source)};
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key, key_less);
    if (it != entries_.end() && it->name.normalized() == name.normalized() &&
        it->source == source) {
        it->line = std::min(it->line, line);
        return;
    }
    entries_.insert(it, DependencyEntry{std::move(name), source, line});
}

const std::vector<DependencyEntry>& DependencySet::entries() const { return entries_; }

bool DependencySet::contains(const PackageName& name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const DependencyEntry& e) { return e.name == name; });
}

bool DependencySet::contains(const PackageName& name, ExtractionSource source) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const DependencyEntry& e) {
        return e.source == source && e.name == name;
    });
}

DependencySet extract_dependencies(std::string_view text) {
    return Extractor(text).run();
}

}  // namespace depsteer::deps
