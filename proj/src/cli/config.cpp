#include "depsteer/cli/config.hpp"

#include <filesystem>
#include <set>

#include "depsteer/common.hpp"
#include "depsteer/deps/name.hpp"
#include "depsteer/skill/artifact.hpp"

namespace depsteer::cli {

using gateway::ModelRole;
using nlohmann::json;

const char* campaign_mode_label(CampaignMode mode) {
    switch (mode) {
        case CampaignMode::Direct: return "direct";
        case CampaignMode::Bo: return "bo";
        case CampaignMode::Lifelong: return "lifelong";
    }
    throw std::invalid_argument("unknown campaign mode");
}

CampaignMode campaign_mode_from_label(const std::string& label) {
    if (label == "direct") return CampaignMode::Direct;
    if (label == "bo") return CampaignMode::Bo;
    if (label == "lifelong") return CampaignMode::Lifelong;
    throw ConfigError("unknown campaign mode '" + label + "'");
}

bool MockSpec::has_completion_mock(ModelRole role) const {
    switch (role) {
        case ModelRole::Target: return !target_rules.empty();
        case ModelRole::Attacker:
            return !attacker_script.empty() || !attacker_rules.empty();
        case ModelRole::Scorer: return !scorer_rules.empty();
        case ModelRole::Summarizer:
            return !summarizer_script.empty() || !summarizer_rules.empty();
        case ModelRole::Embedder: return deterministic_embedder;
    }
    return false;
}

std::string digest_document(const json& doc) {
    return to_hex(fnv1a64(doc.dump()));
}

namespace {

std::string resolve_path(const std::string& base_dir, const std::string& path) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
    if (const auto it = doc.find(key); it != doc.end()) {
        try {
            return it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("config field '") + key +
                              "' has the wrong type");
        }
    }
    return fallback;
}

gateway::ModelEndpoint parse_endpoint(const json& doc, ModelRole role) {
    if (!doc.is_object()) {
        throw ConfigError("endpoint entry must be an object");
    }
    gateway::ModelEndpoint ep;
    ep.role = role;
    ep.base_url = get_or<std::string>(doc, "base_url", "");
    ep.model_name = get_or<std::string>(doc, "model", "");
    ep.decoding.temperature = get_or<double>(doc, "temperature", ep.decoding.temperature);
    ep.decoding.top_p = get_or<double>(doc, "top_p", ep.decoding.top_p);
    ep.decoding.max_tokens = get_or<int>(doc, "max_tokens", ep.decoding.max_tokens);
    ep.timeout_seconds = get_or<int>(doc, "timeout_seconds", ep.timeout_seconds);
    ep.retry.attempts = get_or<int>(doc, "retry_attempts", ep.retry.attempts);
    ep.retry.backoff_ms = get_or<int>(doc, "retry_backoff_ms", ep.retry.backoff_ms);
    ep.api_key_env = get_or<std::string>(doc, "api_key_env", "");
    ep.validate();
    return ep;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "mode", "target_package", "scoring", "seed", "skill_path", "dataset_path",
        "snapshot_path", "library_path", "train_fraction", "warmup_fraction",
        "n_completions", "worker_count", "prose_mentions", "temperature",
        "anchor", "explicitness", "template_id", "template_text", "budgets",
        "retrieval_k", "induction_threshold", "query_from_failed_response",
        "feedback_findings", "gp", "endpoints", "mocks", "rubric_dir",
        "use_judge", "attacker_zero_shot_path", "attacker_strategy_path",
        "summarizer_template_path", "model_id", "dataset_id"};
    return keys;
}

}  // namespace

CampaignConfig parse_config(json doc, const std::string& base_dir,
                            const ConfigOverrides& overrides) {
    if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (known_keys().count(key) == 0) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    if (overrides.seed) doc["seed"] = *overrides.seed;
    if (overrides.mode) doc["mode"] = *overrides.mode;

    CampaignConfig config;
    config.canonical = doc;
    config.config_digest = digest_document(doc);

    config.mode = campaign_mode_from_label(get_or<std::string>(doc, "mode", "direct"));
    config.target_package =
        get_or<std::string>(doc, "target_package", config.target_package);
    config.seed = get_or<std::uint64_t>(doc, "seed", 0);

    if (const auto it = doc.find("scoring"); it != doc.end()) {
        if (!it->is_object()) throw ConfigError("'scoring' must be an object");
        config.scoring_mode = get_or<std::string>(*it, "mode", "unconstrained");
        if (config.scoring_mode == "custom") {
            config.weights.alpha = get_or<double>(*it, "alpha", 1.0);
            config.weights.beta = get_or<double>(*it, "beta", 0.0);
            config.weights.gamma = get_or<double>(*it, "gamma", 0.0);
            config.weights.veto_enabled = get_or<bool>(*it, "veto", false);
        } else {
            config.weights = scoring::weights_for_mode(
                scoring::scoring_mode_from_label(config.scoring_mode));
            if (it->contains("veto")) {
                config.weights.veto_enabled = (*it)["veto"].get<bool>();
            }
        }
    } else {
        config.weights = scoring::weights_for_mode(scoring::ScoringMode::Unconstrained);
    }
    config.weights.validate();

    config.skill_path = resolve_path(base_dir, get_or<std::string>(doc, "skill_path", ""));
    config.dataset_path =
        resolve_path(base_dir, get_or<std::string>(doc, "dataset_path", ""));
    config.snapshot_path =
        resolve_path(base_dir, get_or<std::string>(doc, "snapshot_path", ""));
    config.library_path =
        resolve_path(base_dir, get_or<std::string>(doc, "library_path", ""));

    config.train_fraction = get_or<double>(doc, "train_fraction", 0.9);
    config.warmup_fraction = get_or<double>(doc, "warmup_fraction", 0.15);
    config.n_completions = get_or<int>(doc, "n_completions", 1);
    config.worker_count = get_or<int>(doc, "worker_count", 1);
    config.prose_mentions = get_or<bool>(doc, "prose_mentions", false);
    if (doc.contains("temperature")) {
        config.temperature_override = doc["temperature"].get<double>();
    }

    config.anchor = get_or<std::string>(doc, "anchor", "tail");
    config.explicitness = get_or<int>(doc, "explicitness", 0);
    config.template_id = get_or<std::string>(doc, "template_id", "preference");
    config.template_text = get_or<std::string>(doc, "template_text", "");

    if (const auto it = doc.find("budgets"); it != doc.end()) {
        if (!it->is_object()) throw ConfigError("'budgets' must be an object");
        config.total_budget = get_or<std::size_t>(*it, "total", config.total_budget);
        config.bo_budget = get_or<std::size_t>(*it, "bo", config.bo_budget);
        config.ga_population =
            get_or<std::size_t>(*it, "ga_population", config.ga_population);
        config.lifelong_iterations = get_or<std::size_t>(
            *it, "lifelong_iterations", config.lifelong_iterations);
    }
    config.retrieval_k = get_or<std::size_t>(doc, "retrieval_k", 3);
    config.induction_threshold = get_or<double>(doc, "induction_threshold", 8.0);
    config.query_from_failed_response =
        get_or<bool>(doc, "query_from_failed_response", false);
    config.feedback_findings =
        get_or<std::vector<std::string>>(doc, "feedback_findings", {});

    if (const auto it = doc.find("gp"); it != doc.end()) {
        if (!it->is_object()) throw ConfigError("'gp' must be an object");
        config.gp_mle = get_or<bool>(*it, "mle", false);
        config.gp_lengthscale = get_or<double>(*it, "lengthscale", 1.0);
        config.gp_signal_variance = get_or<double>(*it, "signal_variance", 1.0);
        config.gp_noise_variance = get_or<double>(*it, "noise_variance", 1e-4);
        config.acquisition = get_or<std::string>(*it, "acquisition", "ei");
        if (config.acquisition != "ei" && config.acquisition != "ucb") {
            throw ConfigError("acquisition must be 'ei' or 'ucb'");
        }
    }

    if (const auto it = doc.find("endpoints"); it != doc.end()) {
        if (!it->is_object()) throw ConfigError("'endpoints' must be an object");
        for (const auto& [role_label, entry] : it->items()) {
            const ModelRole role = gateway::role_from_label(role_label);
            config.endpoints.emplace(role, parse_endpoint(entry, role));
        }
    }

    if (const auto it = doc.find("mocks"); it != doc.end()) {
        if (!it->is_object()) throw ConfigError("'mocks' must be an object");
        config.mocks.target_rules =
            resolve_path(base_dir, get_or<std::string>(*it, "target_rules", ""));
        config.mocks.attacker_rules =
            resolve_path(base_dir, get_or<std::string>(*it, "attacker_rules", ""));
        config.mocks.attacker_script =
            get_or<std::vector<std::string>>(*it, "attacker_script", {});
        config.mocks.scorer_rules =
            resolve_path(base_dir, get_or<std::string>(*it, "scorer_rules", ""));
        config.mocks.summarizer_rules =
            resolve_path(base_dir, get_or<std::string>(*it, "summarizer_rules", ""));
        config.mocks.summarizer_script =
            get_or<std::vector<std::string>>(*it, "summarizer_script", {});
        config.mocks.embedder_dimension =
            get_or<std::size_t>(*it, "embedder_dimension", 256);
        config.mocks.deterministic_embedder =
            get_or<bool>(*it, "deterministic_embedder", false);
    }

    config.rubric_dir = resolve_path(base_dir, get_or<std::string>(doc, "rubric_dir", ""));
    config.use_judge = get_or<bool>(doc, "use_judge", false);
    config.attacker_zero_shot_path = resolve_path(
        base_dir, get_or<std::string>(doc, "attacker_zero_shot_path", ""));
    config.attacker_strategy_path = resolve_path(
        base_dir, get_or<std::string>(doc, "attacker_strategy_path", ""));
    config.summarizer_template_path = resolve_path(
        base_dir, get_or<std::string>(doc, "summarizer_template_path", ""));

    config.model_id = get_or<std::string>(doc, "model_id", "target");
    config.dataset_id = get_or<std::string>(doc, "dataset_id", "custom");
    return config;
}

CampaignConfig load_config(const std::string& path, const ConfigOverrides& overrides) {
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded()) {
        throw ConfigError("config file is not valid JSON: " + path);
    }
    const std::string base_dir = std::filesystem::path(path).parent_path().string();
    return parse_config(std::move(doc), base_dir, overrides);
}

void validate_config(const CampaignConfig& config, bool offline) {
    try {
        deps::PackageName::parse(config.target_package);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid target package: ") + e.what());
    }
    if (config.train_fraction <= 0.0 || config.train_fraction >= 1.0) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    if (config.warmup_fraction < 0.0 || config.warmup_fraction >= 1.0) {
        throw ConfigError("warmup_fraction must lie in [0, 1)");
    }
    if (config.n_completions < 1) throw ConfigError("n_completions must be >= 1");
    if (config.worker_count < 1) throw ConfigError("worker_count must be >= 1");
    if (config.explicitness < 0 || config.explicitness > 5) {
        throw ConfigError("explicitness must lie in [0, 5]");
    }
    if (config.total_budget == 0) throw ConfigError("total budget must be positive");
    if (config.ga_population < 2) throw ConfigError("ga_population must be >= 2");
    skill::anchor_from_label(config.anchor);

    const auto require_file = [](const std::string& path, const char* what) {
        if (path.empty()) {
            throw ConfigError(std::string(what) + " path missing from config");
        }
        if (!std::filesystem::exists(path)) {
            throw ConfigError(std::string(what) + " file not found: " + path);
        }
    };
    require_file(config.skill_path, "skill");
    require_file(config.dataset_path, "dataset");
    require_file(config.snapshot_path, "registry snapshot");
    for (const std::string* optional :
         {&config.library_path, &config.mocks.target_rules,
          &config.mocks.attacker_rules, &config.mocks.scorer_rules,
          &config.mocks.summarizer_rules, &config.attacker_zero_shot_path,
          &config.attacker_strategy_path, &config.summarizer_template_path}) {
        if (!optional->empty() && !std::filesystem::exists(*optional)) {
            throw ConfigError("referenced file not found: " + *optional);
        }
    }
    if (!config.rubric_dir.empty() && !std::filesystem::is_directory(config.rubric_dir)) {
        throw ConfigError("rubric_dir is not a directory: " + config.rubric_dir);
    }

    std::vector<ModelRole> needed = {ModelRole::Target};
    if (config.mode == CampaignMode::Lifelong) {
        needed.push_back(ModelRole::Attacker);
        needed.push_back(ModelRole::Summarizer);
    }
    if (config.use_judge) needed.push_back(ModelRole::Scorer);
    for (const ModelRole role : needed) {
        const bool mocked = config.mocks.has_completion_mock(role);
        const bool remote = config.endpoints.count(role) > 0;
        if (!mocked && !remote) {
            throw ConfigError(std::string("no backend configured for role '") +
                              gateway::role_label(role) + "'");
        }
        if (offline && !mocked) {
            throw ConfigError(std::string("offline run requires a mock for role '") +
                              gateway::role_label(role) + "'");
        }
    }
    if (config.mode == CampaignMode::Lifelong) {
        const bool mock_embedder = config.mocks.deterministic_embedder;
        const bool remote_embedder = config.endpoints.count(ModelRole::Embedder) > 0;
        if (!mock_embedder && !remote_embedder) {
            throw ConfigError("lifelong mode needs an embedder backend");
        }
        if (offline && !mock_embedder) {
            throw ConfigError("offline run requires the deterministic embedder");
        }
    }
}

}  // namespace depsteer::cli
