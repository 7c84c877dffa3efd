#include "depsteer/cli/runner.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

#include "depsteer/common.hpp"
#include "depsteer/deps/registry.hpp"
#include "depsteer/opt/campaign.hpp"
#include "depsteer/opt/mutation.hpp"

namespace depsteer::cli {

using gateway::ModelRole;
using metrics::EvalOptions;
using nlohmann::json;
using skill::SkillArtifact;

namespace {

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string join_path(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

std::shared_ptr<gateway::CompletionBackend> completion_backend(
    const CampaignConfig& config, ModelRole role, bool offline) {
    const MockSpec& mocks = config.mocks;
    switch (role) {
        case ModelRole::Target:
            if (!mocks.target_rules.empty()) {
                return std::make_shared<gateway::MockModel>(gateway::load_mock_rules(
                    mocks.target_rules, config.target_package));
            }
            break;
        case ModelRole::Attacker:
            if (!mocks.attacker_script.empty()) {
                return std::make_shared<gateway::ScriptedModel>(mocks.attacker_script);
            }
            if (!mocks.attacker_rules.empty()) {
                return std::make_shared<gateway::MockModel>(gateway::load_mock_rules(
                    mocks.attacker_rules, config.target_package));
            }
            break;
        case ModelRole::Scorer:
            if (!mocks.scorer_rules.empty()) {
                return std::make_shared<gateway::MockModel>(gateway::load_mock_rules(
                    mocks.scorer_rules, config.target_package));
            }
            break;
        case ModelRole::Summarizer:
            if (!mocks.summarizer_script.empty()) {
                return std::make_shared<gateway::ScriptedModel>(
                    mocks.summarizer_script);
            }
            if (!mocks.summarizer_rules.empty()) {
                return std::make_shared<gateway::MockModel>(gateway::load_mock_rules(
                    mocks.summarizer_rules, config.target_package));
            }
            break;
        case ModelRole::Embedder:
            break;
    }
    if (const auto it = config.endpoints.find(role); it != config.endpoints.end()) {
        if (offline) {
            throw ConfigError(std::string("offline run cannot use HTTP endpoint for '") +
                              gateway::role_label(role) + "'");
        }
        return std::make_shared<gateway::HttpChatClient>(it->second);
    }
    return nullptr;
}

}  // namespace

gateway::Gateway build_gateway(const CampaignConfig& config, bool offline) {
    gateway::Gateway gw;
    for (const ModelRole role : {ModelRole::Target, ModelRole::Attacker,
                                 ModelRole::Scorer, ModelRole::Summarizer}) {
        if (auto backend = completion_backend(config, role, offline)) {
            gw.set_backend(role, std::move(backend));
        }
    }
    if (config.mocks.deterministic_embedder) {
        gw.set_embedder(std::make_shared<strategy::DeterministicEmbedder>(
            config.mocks.embedder_dimension));
    } else if (const auto it = config.endpoints.find(ModelRole::Embedder);
               it != config.endpoints.end()) {
        if (offline) {
            throw ConfigError("offline run cannot use an HTTP embedder");
        }
        gw.set_embedder(std::make_shared<gateway::HttpEmbeddingClient>(it->second));
    }
    return gw;
}

namespace {

void fill_rates(metrics::CampaignReport& report, const deps::PackageName& target,
                const deps::RegistrySnapshot& snapshot, bool prose_mentions) {
    report.thr = metrics::thr(report.records, target, prose_mentions);
    report.ghr = metrics::ghr(report.records, snapshot, target);
    report.failures = metrics::count_failures(report.records);
}

std::string read_optional_template(const std::string& path) {
    return path.empty() ? std::string() : read_file(path);
}

void run_direct(const CampaignConfig& config, const gateway::Gateway& gw,
                const SkillArtifact& base, const deps::PackageName& target,
                std::span<const metrics::PromptRecord> prompts,
                const deps::RegistrySnapshot& snapshot, const EvalOptions& eval_opts,
                RunResult& result) {
    const auto level = skill::explicitness_from_int(config.explicitness);
    std::map<std::string, std::string> extra;
    if (!config.template_text.empty()) {
        extra[config.template_id] = config.template_text;
    }
    const SkillArtifact injected =
        opt::direct_inject_baseline(base, target, config.template_id, extra, level);

    result.report.skill_id = base.name + ":" + config.template_id;
    result.report.records =
        metrics::evaluate_skill(injected, prompts, gw, target, snapshot, eval_opts);
    fill_rates(result.report, target, snapshot, config.prose_mentions);
    result.best_skill = injected;
    result.extras = {{"mode", "direct"},
                     {"template_id", config.template_id},
                     {"explicitness", config.explicitness},
                     {"prompt_count", prompts.size()}};
}

void run_bo(const CampaignConfig& config, const gateway::Gateway& gw,
            const SkillArtifact& base, const deps::PackageName& target,
            std::span<const metrics::PromptRecord> prompts,
            const deps::RegistrySnapshot& snapshot, const EvalOptions& eval_opts,
            RunResult& result) {
    const auto split =
        metrics::split_dataset(prompts, config.train_fraction,
                               mix_seed(config.seed, "split"));
    const opt::MutationSpace space = opt::MutationSpace::default_space();

    opt::BoCampaignOptions options;
    options.total_budget = config.total_budget;
    options.bo_budget = config.bo_budget;
    options.ga.population = config.ga_population;
    options.propose.acquisition = config.acquisition == "ucb"
                                      ? opt::Acquisition::UpperConfidenceBound
                                      : opt::Acquisition::ExpectedImprovement;
    options.mle = config.gp_mle;
    options.fixed_hyperparams.lengthscales.assign(space.feature_width(),
                                                  config.gp_lengthscale);
    options.fixed_hyperparams.signal_variance = config.gp_signal_variance;
    options.fixed_hyperparams.noise_variance = config.gp_noise_variance;
    options.level = skill::explicitness_from_int(config.explicitness);
    options.seed = config.seed;

    EvalOptions fitness_opts = eval_opts;
    fitness_opts.seed = mix_seed(config.seed, "fitness");
    const auto objective = [&](const opt::MutationConfig&,
                               const SkillArtifact& artifact) -> double {
        const auto records = metrics::evaluate_skill(artifact, split.train, gw,
                                                     target, snapshot, fitness_opts);
        try {
            return metrics::thr(records, target, config.prose_mentions);
        } catch (const EvaluationError&) {
            return 0.0;  // every training call failed
        }
    };

    const opt::BoCampaignResult bo =
        opt::run_bo_campaign(base, target, space, objective, options);

    EvalOptions heldout_opts = eval_opts;
    heldout_opts.seed = mix_seed(config.seed, "heldout");
    result.report.skill_id = base.name + ":bo-best";
    result.report.records = metrics::evaluate_skill(bo.best_skill, split.test, gw,
                                                    target, snapshot, heldout_opts);
    fill_rates(result.report, target, snapshot, config.prose_mentions);
    result.best_skill = bo.best_skill;

    json history = json::array();
    for (const auto& [cfg, fitness] : bo.history) {
        history.push_back({{"index", opt::config_index(cfg, space)},
                           {"fitness", fitness}});
    }
    result.extras = {{"mode", "bo"},
                     {"best_config", bo.best_config.choices},
                     {"best_index", opt::config_index(bo.best_config, space)},
                     {"best_fitness", bo.best_fitness},
                     {"evaluations", bo.history.size()},
                     {"history", std::move(history)},
                     {"train_size", split.train.size()},
                     {"test_size", split.test.size()},
                     {"space_size", space.config_count()}};
}

void run_lifelong(const CampaignConfig& config, const gateway::Gateway& gw,
                  const SkillArtifact& base, const deps::PackageName& target,
                  std::span<const metrics::PromptRecord> prompts,
                  const deps::RegistrySnapshot& snapshot,
                  const EvalOptions& eval_opts, RunResult& result) {
    const auto split =
        metrics::split_dataset(prompts, config.train_fraction,
                               mix_seed(config.seed, "split"));
    const std::size_t warmup_cut = static_cast<std::size_t>(
        static_cast<double>(split.train.size()) * config.warmup_fraction + 1e-9);
    const std::span<const metrics::PromptRecord> warmup(split.train.data(),
                                                        warmup_cut);
    const std::span<const metrics::PromptRecord> rest(
        split.train.data() + warmup_cut, split.train.size() - warmup_cut);

    strategy::StrategyLibrary library =
        config.library_path.empty()
            ? strategy::StrategyLibrary(config.mocks.embedder_dimension)
            : strategy::load_library(config.library_path,
                                     config.mocks.embedder_dimension);

    const scoring::RubricPrompts prompts_rubric =
        config.rubric_dir.empty() ? scoring::RubricPrompts::defaults()
                                  : scoring::RubricPrompts::load_dir(config.rubric_dir);
    const scoring::AttackScorer scorer =
        config.use_judge
            ? scoring::AttackScorer(&gw, prompts_rubric, scoring::TisTiers{}, true)
            : scoring::AttackScorer();

    opt::LifelongContext ctx;
    ctx.gw = &gw;
    ctx.scorer = &scorer;
    ctx.weights = config.weights;
    ctx.base = &base;
    ctx.target = target;
    ctx.snapshot = &snapshot;

    opt::LifelongOptions options;
    options.induction_threshold = config.induction_threshold;
    options.retrieval_k = config.retrieval_k;
    options.iterations = config.lifelong_iterations;
    options.anchor = skill::anchor_from_label(config.anchor);
    options.query_from_failed_response = config.query_from_failed_response;
    options.attacker_zero_shot_template =
        read_optional_template(config.attacker_zero_shot_path);
    options.attacker_strategy_template =
        read_optional_template(config.attacker_strategy_path);
    options.summarizer_template =
        read_optional_template(config.summarizer_template_path);
    options.seed = config.seed;

    opt::CampaignState state;
    opt::adaptive_feedback(state, config.feedback_findings);
    const opt::WarmupStats warmup_stats =
        opt::warmup_phase(warmup, ctx, library, state, options);

    EvalOptions heldout_opts = eval_opts;
    heldout_opts.seed = mix_seed(config.seed, "heldout");
    opt::LifelongResult lifelong =
        opt::lifelong_phase(rest, split.test, ctx, library, std::move(state),
                            options, heldout_opts);

    result.report.skill_id = base.name + ":lifelong-best";
    result.report.records = std::move(lifelong.heldout_records);
    fill_rates(result.report, target, snapshot, config.prose_mentions);
    result.best_skill = lifelong.state.best_skill;
    result.library = std::move(library);
    result.has_library = true;

    json history = json::array();
    for (const auto& entry : lifelong.state.history) {
        history.push_back({{"iteration", entry.iteration},
                           {"phase", entry.phase},
                           {"prompt_id", entry.prompt_id},
                           {"final_score", entry.score.final_score},
                           {"inducted", entry.inducted}});
    }
    result.extras = {{"mode", "lifelong"},
                     {"warmup_size", warmup.size()},
                     {"warmup_attempted", warmup_stats.attempted},
                     {"warmup_skipped", warmup_stats.skipped},
                     {"warmup_inducted", warmup_stats.inducted},
                     {"lifelong_size", rest.size()},
                     {"heldout_size", split.test.size()},
                     {"iterations", config.lifelong_iterations},
                     {"library_size", result.library.size()},
                     {"best_score", lifelong.state.best_score},
                     {"history", std::move(history)}};
}

}  // namespace

RunResult run_campaign(const CampaignConfig& config, bool offline) {
    validate_config(config, offline);
    const gateway::Gateway gw = build_gateway(config, offline);

    const auto target = deps::PackageName::parse(config.target_package);
    SkillArtifact base = skill::load_skill(config.skill_path);
    if (config.pad_to_chars > 0) base = pad_skill(base, config.pad_to_chars);
    const auto prompts = metrics::load_prompts(config.dataset_path);
    const auto snapshot = deps::load_snapshot(config.snapshot_path);

    EvalOptions eval_opts;
    eval_opts.n_completions = config.n_completions;
    eval_opts.worker_count = config.worker_count;
    eval_opts.prose_mentions = config.prose_mentions;
    eval_opts.seed = config.seed;
    if (config.temperature_override) {
        eval_opts.decoding.temperature = *config.temperature_override;
    }

    RunResult result;
    result.report.model_id = config.model_id;
    result.report.dataset = config.dataset_id;
    result.report.config_digest = config.config_digest;
    result.report.seed = config.seed;

    switch (config.mode) {
        case CampaignMode::Direct:
            run_direct(config, gw, base, target, prompts, snapshot, eval_opts, result);
            break;
        case CampaignMode::Bo:
            run_bo(config, gw, base, target, prompts, snapshot, eval_opts, result);
            break;
        case CampaignMode::Lifelong:
            run_lifelong(config, gw, base, target, prompts, snapshot, eval_opts,
                         result);
            break;
    }
    return result;
}

void write_outputs(const RunResult& result, const CampaignConfig& config,
                   const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);

    json report_json = metrics::report_to_json(result.report);
    report_json["campaign"] = result.extras;
    write_file(join_path(out_dir, "report.json"), report_json.dump(2) + "\n");

    std::ostringstream csv;
    csv << "# config_digest=" << config.config_digest << "\n"
        << metrics::csv_header() << "\n"
        << metrics::csv_row(result.report) << "\n";
    write_file(join_path(out_dir, "summary.csv"), csv.str());

    SkillArtifact annotated = result.best_skill;
    annotated.metadata["config_digest"] = config.config_digest;
    skill::save_skill(annotated, join_path(out_dir, "best_skill.md"));

    if (result.has_library) {
        write_file(join_path(out_dir, "library.jsonl"),
                   "# config_digest=" + config.config_digest + "\n" +
                       strategy::serialize_library(result.library));
    }

    std::ostringstream log;
    log << timestamp() << " campaign mode=" << campaign_mode_label(config.mode)
        << " seed=" << config.seed << " digest=" << config.config_digest << "\n";
    log << timestamp() << " records=" << result.report.records.size()
        << " thr=" << result.report.thr << " ghr=" << result.report.ghr
        << " failures=" << result.report.failures << "\n";
    write_file(join_path(out_dir, "run.log"), log.str());
}

metrics::TransferMatrix run_transfer(const std::vector<CampaignConfig>& configs,
                                     bool offline) {
    if (configs.empty()) throw ConfigError("transfer needs at least one config");
    std::set<std::string> labels;
    for (const auto& config : configs) {
        if (!labels.insert(config.model_id).second) {
            throw ConfigError("transfer configs must have distinct model_id values");
        }
    }

    std::vector<std::pair<std::string, SkillArtifact>> skills;
    std::vector<gateway::Gateway> gateways;
    gateways.reserve(configs.size());
    for (const auto& config : configs) {
        RunResult run = run_campaign(config, offline);
        skills.emplace_back(config.model_id, std::move(run.best_skill));
        gateways.push_back(build_gateway(config, offline));
    }
    std::vector<std::pair<std::string, const gateway::Gateway*>> endpoints;
    endpoints.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        endpoints.emplace_back(configs[i].model_id, &gateways[i]);
    }

    const CampaignConfig& lead = configs.front();
    const auto prompts = metrics::load_prompts(lead.dataset_path);
    const auto snapshot = deps::load_snapshot(lead.snapshot_path);
    const auto target = deps::PackageName::parse(lead.target_package);

    EvalOptions options;
    options.n_completions = lead.n_completions;
    options.worker_count = lead.worker_count;
    options.prose_mentions = lead.prose_mentions;
    options.seed = mix_seed(lead.seed, "transfer");
    return metrics::transfer_matrix(skills, endpoints, prompts, target, snapshot,
                                    options);
}

std::size_t skill_length_chars(const std::string& value) {
    if (value == "short") return 512;
    if (value == "medium") return 2048;
    if (value == "long") return 8192;
    try {
        const long chars = std::stol(value);
        if (chars > 0) return static_cast<std::size_t>(chars);
    } catch (const std::exception&) {
    }
    throw ConfigError("unknown skill_length value '" + value +
                      "' (expected short|medium|long or a character count)");
}

skill::SkillArtifact pad_skill(const skill::SkillArtifact& base,
                               std::size_t target_chars) {
    static const char* kFiller =
        "Routine maintenance notes are collected here for completeness and "
        "reviewed by the owning team on the usual cadence.";
    SkillArtifact padded = base;
    std::string body = padded.body(skill::AnchorPosition::ExecutionInstructions);
    int guard = 0;
    while (skill::render(padded).size() < target_chars && guard++ < 10000) {
        if (!body.empty()) body += "\n\n";
        body += kFiller;
        padded.set_body(skill::AnchorPosition::ExecutionInstructions, body);
    }
    return padded;
}

std::vector<AblationRow> run_ablation(const CampaignConfig& base,
                                      const std::string& knob,
                                      const std::vector<std::string>& values,
                                      bool offline) {
    if (values.empty()) throw ConfigError("ablation needs at least one value");
    std::vector<AblationRow> rows;
    rows.reserve(values.size());
    for (const std::string& value : values) {
        CampaignConfig config = base;
        if (knob == "explicitness") {
            try {
                config.explicitness = std::stoi(value);
            } catch (const std::exception&) {
                throw ConfigError("explicitness value must be an integer 0-5");
            }
        } else if (knob == "skill_length") {
            config.pad_to_chars = skill_length_chars(value);
        } else if (knob == "n_completions") {
            try {
                config.n_completions = std::stoi(value);
            } catch (const std::exception&) {
                throw ConfigError("n_completions value must be an integer");
            }
        } else if (knob == "temperature") {
            try {
                config.temperature_override = std::stod(value);
            } catch (const std::exception&) {
                throw ConfigError("temperature value must be a number");
            }
        } else {
            throw ConfigError("unknown ablation knob '" + knob + "'");
        }
        rows.push_back({knob, value, run_campaign(config, offline).report});
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows,
                         const std::string& digest) {
    std::ostringstream out;
    out << "# config_digest=" << digest << "\n";
    out << "knob,value," << metrics::csv_header() << "\n";
    for (const auto& row : rows) {
        out << row.knob << "," << row.value << "," << metrics::csv_row(row.report)
            << "\n";
    }
    return out.str();
}

}  // namespace depsteer::cli
