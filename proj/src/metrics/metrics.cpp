#include "depsteer/metrics/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "depsteer/common.hpp"

namespace depsteer::metrics {

using nlohmann::json;

namespace {

bool record_order(const EvalRecord& a, const EvalRecord& b) {
    if (a.prompt_id != b.prompt_id) return a.prompt_id < b.prompt_id;
    return a.completion_index < b.completion_index;
}

bool indicator(const EvalRecord& record, const deps::PackageName& target,
               bool prose_mentions) {
    if (record.deps.contains(target)) return true;
    return prose_mentions &&
           deps::contains_normalized_form(record.output, target.normalized());
}

std::size_t count_valid(std::span<const EvalRecord> records) {
    std::size_t valid = 0;
    for (const auto& r : records) {
        if (!r.failed) ++valid;
    }
    return valid;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_rate(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(6) << value;
    return out.str();
}

}  // namespace

std::vector<PromptRecord> parse_prompts(const std::string& jsonl) {
    std::vector<PromptRecord> prompts;
    std::istringstream in(jsonl);
    std::string line;
    std::size_t line_no = 0;
    for (; std::getline(in, line);) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json value = json::parse(line, nullptr, false);
        if (value.is_discarded() || !value.is_object()) {
            throw ConfigError("prompt line " + std::to_string(line_no) +
                              " is not a JSON object");
        }
        PromptRecord record;
        record.id = value.value("id", std::string());
        record.text = value.value("text", std::string());
        record.dataset = value.value("dataset", std::string("custom"));
        record.source_package = value.value("source_package", std::string());
        if (record.id.empty()) {
            throw ConfigError("prompt line " + std::to_string(line_no) +
                              " has no id");
        }
        if (record.text.empty()) {
            throw ConfigError("prompt line " + std::to_string(line_no) +
                              " has empty text");
        }
        for (const auto& existing : prompts) {
            if (existing.id == record.id && existing.dataset == record.dataset) {
                throw ConfigError("duplicate prompt id '" + record.id +
                                  "' in dataset '" + record.dataset + "'");
            }
        }
        prompts.push_back(std::move(record));
    }
    return prompts;
}

std::vector<PromptRecord> load_prompts(const std::string& path) {
    return parse_prompts(read_file(path));
}

SplitResult split_dataset(std::span<const PromptRecord> prompts,
                          double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train fraction must lie in (0, 1)");
    }
    if (prompts.size() < 2) {
        throw ConfigError("dataset too small to split");
    }
    std::vector<std::size_t> order(prompts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Hand-rolled Fisher-Yates: std::shuffle output is implementation-defined,
    // mt19937_64 itself is pinned by the standard.
    std::mt19937_64 gen(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(gen() % (i + 1));
        std::swap(order[i], order[j]);
    }
    auto cut = static_cast<std::size_t>(
        static_cast<double>(prompts.size()) * train_fraction + 1e-9);
    SplitResult result;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < cut ? result.train : result.test).push_back(prompts[order[i]]);
    }
    return result;
}

std::vector<std::string> hallucinated_names(const deps::DependencySet& set,
                                            const deps::RegistrySnapshot& snapshot,
                                            const deps::PackageName& target) {
    std::vector<std::string> out;
    for (const auto& entry : set.entries()) {
        const std::string& name = entry.name.normalized();
        if (name == target.normalized()) continue;
        if (snapshot.names.count(name) != 0) continue;
        if (deps::is_stdlib_module(name)) continue;
        if (!out.empty() && out.back() == name) continue;  // entries are sorted
        out.push_back(name);
    }
    return out;
}

std::vector<EvalRecord> evaluate_skill(const skill::SkillArtifact& artifact,
                                       std::span<const PromptRecord> prompts,
                                       const gateway::Gateway& gw,
                                       const deps::PackageName& target,
                                       const deps::RegistrySnapshot& snapshot,
                                       const EvalOptions& options) {
    if (options.n_completions < 1) {
        throw ConfigError("n_completions must be >= 1");
    }
    std::string system_text = skill::render(artifact);
    std::size_t total = prompts.size() * static_cast<std::size_t>(options.n_completions);
    std::vector<EvalRecord> records(total);

    auto run_one = [&](std::size_t task) {
        std::size_t p = task / static_cast<std::size_t>(options.n_completions);
        int c = static_cast<int>(task % static_cast<std::size_t>(options.n_completions));
        const PromptRecord& prompt = prompts[p];
        EvalRecord& record = records[task];
        record.prompt_id = prompt.id;
        record.completion_index = c;
        std::vector<gateway::ChatMessage> messages{
            {"system", system_text},
            {"user", prompt.text},
        };
        std::uint64_t call_seed =
            mix_seed(options.seed, prompt.id, static_cast<std::uint64_t>(c));
        try {
            record.output = gw.complete(gateway::ModelRole::Target, messages,
                                        options.decoding, call_seed);
        } catch (const TransportError& e) {
            record.failed = true;
            record.error = e.what();
            return;
        }
        record.deps = deps::extract_dependencies(record.output);
        record.contains_target = indicator(record, target, options.prose_mentions);
        record.hallucinated = hallucinated_names(record.deps, snapshot, target);
    };

    int workers = std::max(1, options.worker_count);
    if (workers == 1 || total <= 1) {
        for (std::size_t task = 0; task < total; ++task) run_one(task);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            while (true) {
                std::size_t task = next.fetch_add(1);
                if (task >= total) return;
                run_one(task);
            }
        };
        std::vector<std::thread> pool;
        std::size_t spawn = std::min(static_cast<std::size_t>(workers), total);
        for (std::size_t i = 0; i < spawn; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::sort(records.begin(), records.end(), record_order);
    return records;
}

double thr(std::span<const EvalRecord> records, const deps::PackageName& target,
           bool prose_mentions) {
    if (records.empty()) throw EvaluationError("thr over empty records");
    std::size_t valid = count_valid(records);
    if (valid == 0) throw EvaluationError("thr: all records failed");
    std::size_t hits = 0;
    for (const auto& r : records) {
        if (r.failed) continue;
        if (indicator(r, target, prose_mentions)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(valid);
}

double thr_any_hit(std::span<const EvalRecord> records,
                   const deps::PackageName& target, bool prose_mentions) {
    if (records.empty()) throw EvaluationError("thr over empty records");
    std::map<std::string, bool> per_prompt;
    for (const auto& r : records) {
        if (r.failed) continue;
        bool hit = indicator(r, target, prose_mentions);
        auto [it, inserted] = per_prompt.emplace(r.prompt_id, hit);
        if (!inserted) it->second = it->second || hit;
    }
    if (per_prompt.empty()) throw EvaluationError("thr: all records failed");
    std::size_t hits = 0;
    for (const auto& [id, hit] : per_prompt) {
        if (hit) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(per_prompt.size());
}

double ghr(std::span<const EvalRecord> records,
           const deps::RegistrySnapshot& snapshot,
           const deps::PackageName& target) {
    if (records.empty()) throw EvaluationError("ghr over empty records");
    std::size_t valid = count_valid(records);
    if (valid == 0) throw EvaluationError("ghr: all records failed");
    std::size_t hits = 0;
    for (const auto& r : records) {
        if (r.failed) continue;
        if (!hallucinated_names(r.deps, snapshot, target).empty()) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(valid);
}

std::size_t count_failures(std::span<const EvalRecord> records) {
    return records.size() - count_valid(records);
}

json record_to_json(const EvalRecord& record) {
    json deps_json = json::array();
    for (const auto& entry : record.deps.entries()) {
        deps_json.push_back({
            {"name", entry.name.raw()},
            {"source", std::string(deps::source_label(entry.source))},
            {"line", entry.line},
        });
    }
    return json{
        {"prompt_id", record.prompt_id},
        {"completion_index", record.completion_index},
        {"output", record.output},
        {"deps", deps_json},
        {"contains_target", record.contains_target},
        {"hallucinated", record.hallucinated},
        {"failed", record.failed},
        {"error", record.error},
    };
}

EvalRecord record_from_json(const json& value) {
    EvalRecord record;
    try {
        record.prompt_id = value.at("prompt_id").get<std::string>();
        record.completion_index = value.at("completion_index").get<int>();
        record.output = value.at("output").get<std::string>();
        for (const auto& entry : value.at("deps")) {
            record.deps.add(
                deps::PackageName::parse(entry.at("name").get<std::string>()),
                deps::source_from_label(entry.at("source").get<std::string>()),
                entry.at("line").get<std::size_t>());
        }
        record.contains_target = value.at("contains_target").get<bool>();
        record.hallucinated =
            value.at("hallucinated").get<std::vector<std::string>>();
        record.failed = value.at("failed").get<bool>();
        record.error = value.at("error").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed eval record: ") + e.what());
    }
    return record;
}

json report_to_json(const CampaignReport& report) {
    json records = json::array();
    for (const auto& r : report.records) records.push_back(record_to_json(r));
    return json{
        {"skill_id", report.skill_id},
        {"model_id", report.model_id},
        {"dataset", report.dataset},
        {"config_digest", report.config_digest},
        {"seed", report.seed},
        {"thr", report.thr},
        {"ghr", report.ghr},
        {"failures", report.failures},
        {"records", records},
    };
}

CampaignReport report_from_json(const json& value) {
    CampaignReport report;
    try {
        report.skill_id = value.at("skill_id").get<std::string>();
        report.model_id = value.at("model_id").get<std::string>();
        report.dataset = value.at("dataset").get<std::string>();
        report.config_digest = value.at("config_digest").get<std::string>();
        report.seed = value.at("seed").get<std::uint64_t>();
        report.thr = value.at("thr").get<double>();
        report.ghr = value.at("ghr").get<double>();
        report.failures = value.at("failures").get<std::size_t>();
        for (const auto& r : value.at("records")) {
            report.records.push_back(record_from_json(r));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed campaign report: ") + e.what());
    }
    return report;
}

void save_report(const CampaignReport& report, const std::string& path) {
    write_file(path, report_to_json(report).dump(2) + "\n");
}

CampaignReport load_report(const std::string& path) {
    json value = json::parse(read_file(path), nullptr, false);
    if (value.is_discarded()) {
        throw ConfigError("report file is not valid JSON: " + path);
    }
    return report_from_json(value);
}

std::string csv_header() {
    return "skill_id,model_id,dataset,n,thr,ghr,failures,seed";
}

std::string csv_row(const CampaignReport& report) {
    std::ostringstream out;
    out << csv_escape(report.skill_id) << ',' << csv_escape(report.model_id)
        << ',' << csv_escape(report.dataset) << ',' << report.records.size()
        << ',' << format_rate(report.thr) << ',' << format_rate(report.ghr)
        << ',' << report.failures << ',' << report.seed;
    return out.str();
}

CampaignReport merge_reports(std::span<const CampaignReport> parts,
                             const deps::PackageName& target,
                             const deps::RegistrySnapshot& snapshot) {
    if (parts.empty()) throw ConfigError("no reports to merge");
    CampaignReport merged = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (parts[i].config_digest != merged.config_digest) {
            throw ConfigError("refusing to merge reports with different config "
                              "digests: " +
                              merged.config_digest + " vs " +
                              parts[i].config_digest);
        }
        merged.records.insert(merged.records.end(), parts[i].records.begin(),
                              parts[i].records.end());
    }
    std::sort(merged.records.begin(), merged.records.end(), record_order);
    merged.failures = count_failures(merged.records);
    merged.thr = thr(merged.records, target);
    merged.ghr = ghr(merged.records, snapshot, target);
    return merged;
}

TransferMatrix transfer_matrix(
    const std::vector<std::pair<std::string, skill::SkillArtifact>>& skills,
    const std::vector<std::pair<std::string, const gateway::Gateway*>>& endpoints,
    std::span<const PromptRecord> prompts, const deps::PackageName& target,
    const deps::RegistrySnapshot& snapshot, const EvalOptions& options) {
    if (skills.empty() || endpoints.empty()) {
        throw ConfigError("transfer matrix needs at least one skill and one endpoint");
    }
    TransferMatrix matrix;
    for (const auto& [id, _] : skills) matrix.optimized_on.push_back(id);
    for (const auto& [id, _] : endpoints) matrix.evaluated_on.push_back(id);
    for (const auto& [skill_id, artifact] : skills) {
        std::vector<TransferCell> row;
        for (const auto& [model_id, gw] : endpoints) {
            TransferCell cell;
            try {
                auto records =
                    evaluate_skill(artifact, prompts, *gw, target, snapshot, options);
                cell.thr = thr(records, target, options.prose_mentions);
                cell.present = true;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            row.push_back(std::move(cell));
        }
        matrix.cells.push_back(std::move(row));
    }
    return matrix;
}

std::string transfer_matrix_csv(const TransferMatrix& matrix) {
    std::ostringstream out;
    out << "optimized_on/evaluated_on";
    for (const auto& id : matrix.evaluated_on) out << ',' << csv_escape(id);
    out << '\n';
    for (std::size_t i = 0; i < matrix.cells.size(); ++i) {
        out << csv_escape(matrix.optimized_on[i]);
        for (const auto& cell : matrix.cells[i]) {
            out << ',';
            if (cell.present) out << format_rate(cell.thr);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace depsteer::metrics
