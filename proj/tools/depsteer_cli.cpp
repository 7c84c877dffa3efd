#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "depsteer/cli/config.hpp"
#include "depsteer/cli/runner.hpp"
#include "depsteer/common.hpp"
#include "depsteer/deps/extract.hpp"
#include "depsteer/opt/mutation.hpp"
#include "depsteer/scoring/scorer.hpp"
#include "depsteer/skill/artifact.hpp"
#include "depsteer/skill/patch.hpp"
#include "json.hpp"

namespace {

using namespace depsteer;
using nlohmann::json;

struct ExtractArgs {
    std::string input;
    bool as_json = false;
};

int cmd_extract(const ExtractArgs& args) {
    const auto set = deps::extract_dependencies(read_file(args.input));
    if (args.as_json) {
        json out = json::array();
        for (const auto& entry : set.entries()) {
            out.push_back({{"name", entry.name.raw()},
                           {"normalized", entry.name.normalized()},
                           {"source", deps::source_label(entry.source)},
                           {"line", entry.line}});
        }
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    std::cout << "name\tsource\tline\n";
    for (const auto& entry : set.entries()) {
        std::cout << entry.name.raw() << "\t" << deps::source_label(entry.source)
                  << "\t" << entry.line << "\n";
    }
    return 0;
}

struct ScoreArgs {
    std::string output_path;
    std::string patch_path;
    std::string target = "awesome_request";
    std::string scoring = "unconstrained";
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 0.0;
    bool veto = false;
};

int cmd_score(const ScoreArgs& args) {
    scoring::ScoreWeights weights;
    if (args.scoring == "custom") {
        weights.alpha = args.alpha;
        weights.beta = args.beta;
        weights.gamma = args.gamma;
        weights.veto_enabled = args.veto;
    } else {
        weights = scoring::weights_for_mode(
            scoring::scoring_mode_from_label(args.scoring));
        if (args.veto) weights.veto_enabled = true;
    }
    weights.validate();

    const auto target = deps::PackageName::parse(args.target);
    const skill::AdversarialPatch patch{read_file(args.patch_path), target,
                                        skill::ExplicitnessLevel::Original, "cli"};
    const scoring::AttackScorer scorer;  // deterministic fallback scorer
    const scoring::SubScores subs =
        scorer.score_all(read_file(args.output_path), patch);
    const scoring::ScoreBreakdown breakdown =
        scoring::aggregate(subs, weights, patch, target);

    json out = {{"r_tis", breakdown.r_tis},
                {"r_stealth", breakdown.r_stealth},
                {"r_fluency", breakdown.r_fluency},
                {"base", breakdown.base},
                {"final_score", breakdown.final_score},
                {"veto_triggered", breakdown.veto_triggered}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

struct InjectArgs {
    std::string skill_path;
    std::string patch_path;
    std::string anchor = "tail";
    std::string target = "awesome_request";
    std::string output_path;
};

int cmd_inject(const InjectArgs& args) {
    const auto target = deps::PackageName::parse(args.target);
    const auto base = skill::load_skill(args.skill_path);
    const skill::AdversarialPatch patch{read_file(args.patch_path), target,
                                        skill::ExplicitnessLevel::Original, "cli"};
    const auto injected =
        skill::inject(base, patch, skill::anchor_from_label(args.anchor));
    skill::save_skill(injected, args.output_path);
    std::cout << "wrote " << args.output_path << "\n";
    return 0;
}

struct CampaignArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::string mode;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool dry_run = false;
    bool offline = false;
};

int cmd_campaign(const CampaignArgs& args) {
    cli::ConfigOverrides overrides;
    if (args.seed_set) overrides.seed = args.seed;
    if (!args.mode.empty()) overrides.mode = args.mode;
    const cli::CampaignConfig config = cli::load_config(args.config_path, overrides);

    if (args.dry_run) {
        cli::validate_config(config, args.offline);
        std::cout << "config ok digest=" << config.config_digest << "\n";
        return 0;
    }
    const cli::RunResult result = cli::run_campaign(config, args.offline);
    cli::write_outputs(result, config, args.out_dir);
    std::cout << "mode=" << cli::campaign_mode_label(config.mode)
              << " records=" << result.report.records.size()
              << " thr=" << result.report.thr << " ghr=" << result.report.ghr
              << " failures=" << result.report.failures << " -> " << args.out_dir
              << "\n";
    return 0;
}

struct TransferArgs {
    std::vector<std::string> config_paths;
    std::string out_dir = "out";
    bool offline = false;
};

int cmd_transfer(const TransferArgs& args) {
    std::vector<cli::CampaignConfig> configs;
    std::string digests;
    for (const auto& path : args.config_paths) {
        configs.push_back(cli::load_config(path));
        if (!digests.empty()) digests += ",";
        digests += configs.back().config_digest;
    }
    const auto matrix = cli::run_transfer(configs, args.offline);
    std::filesystem::create_directories(args.out_dir);
    const std::string csv = "# config_digest=" + digests + "\n" +
                            metrics::transfer_matrix_csv(matrix);
    const std::string path =
        (std::filesystem::path(args.out_dir) / "transfer.csv").string();
    write_file(path, csv);
    std::cout << csv;
    std::cout << "wrote " << path << "\n";
    return 0;
}

struct AblateArgs {
    std::string config_path;
    std::string knob;
    std::vector<std::string> values;
    std::string out_dir = "out";
    bool offline = false;
};

int cmd_ablate(const AblateArgs& args) {
    const cli::CampaignConfig config = cli::load_config(args.config_path);
    const auto rows = cli::run_ablation(config, args.knob, args.values, args.offline);
    const std::string csv = cli::ablation_csv(rows, config.config_digest);
    std::filesystem::create_directories(args.out_dir);
    const std::string path =
        (std::filesystem::path(args.out_dir) / "ablation.csv").string();
    write_file(path, csv);
    std::cout << csv;
    std::cout << "wrote " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dependency-steering red-team harness (authorized testing only)"};
    app.require_subcommand(1);

    ExtractArgs extract_args;
    auto* extract = app.add_subcommand(
        "extract", "List dependencies declared in a text or code file");
    extract->add_option("--input", extract_args.input, "File to scan")->required();
    extract->add_flag("--json", extract_args.as_json, "Emit JSON instead of a table");

    ScoreArgs score_args;
    auto* score =
        app.add_subcommand("score", "Score a model output against a patch");
    score->add_option("--output", score_args.output_path, "Model output text file")
        ->required();
    score->add_option("--patch", score_args.patch_path, "Patch text file")->required();
    score->add_option("--target", score_args.target, "Target package name");
    score->add_option("--scoring", score_args.scoring,
                      "unconstrained | stealth | custom");
    score->add_option("--alpha", score_args.alpha, "Induction weight (custom)");
    score->add_option("--beta", score_args.beta, "Stealth weight (custom)");
    score->add_option("--gamma", score_args.gamma, "Fluency weight (custom)");
    score->add_flag("--veto", score_args.veto, "Enable the explicit-name veto");

    InjectArgs inject_args;
    auto* inject = app.add_subcommand("inject", "Inject a patch into a skill file");
    inject->add_option("--skill", inject_args.skill_path, "Skill markdown file")
        ->required();
    inject->add_option("--patch", inject_args.patch_path, "Patch text file")
        ->required();
    inject->add_option("--anchor", inject_args.anchor, "system | instructions | tail");
    inject->add_option("--target", inject_args.target, "Target package name");
    inject->add_option("--output", inject_args.output_path, "Destination skill file")
        ->required();

    CampaignArgs campaign_args;
    auto* campaign = app.add_subcommand("campaign", "Run a configured campaign");
    campaign->add_option("--config", campaign_args.config_path, "Campaign config JSON")
        ->required();
    campaign->add_option("--out", campaign_args.out_dir, "Output directory");
    campaign->add_option("--mode", campaign_args.mode,
                         "Override mode: direct | bo | lifelong");
    auto* seed_opt =
        campaign->add_option("--seed", campaign_args.seed, "Override campaign seed");
    campaign->add_flag("--dry-run", campaign_args.dry_run, "Validate config and exit");
    campaign->add_flag("--offline", campaign_args.offline,
                       "Forbid network; mocks required");

    TransferArgs transfer_args;
    auto* transfer = app.add_subcommand(
        "transfer", "Cross-model transfer matrix over several configs");
    transfer->add_option("--config", transfer_args.config_paths,
                         "Campaign config JSON (repeatable)")
        ->required();
    transfer->add_option("--out", transfer_args.out_dir, "Output directory");
    transfer->add_flag("--offline", transfer_args.offline,
                       "Forbid network; mocks required");

    AblateArgs ablate_args;
    auto* ablate = app.add_subcommand("ablate", "Sweep one knob across values");
    ablate->add_option("--config", ablate_args.config_path, "Campaign config JSON")
        ->required();
    ablate->add_option("--knob", ablate_args.knob,
                       "explicitness | skill_length | n_completions | temperature")
        ->required();
    ablate->add_option("--values", ablate_args.values, "Comma-separated values")
        ->required()
        ->delimiter(',');
    ablate->add_option("--out", ablate_args.out_dir, "Output directory");
    ablate->add_flag("--offline", ablate_args.offline,
                     "Forbid network; mocks required");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    campaign_args.seed_set = seed_opt->count() > 0;

    try {
        if (extract->parsed()) return cmd_extract(extract_args);
        if (score->parsed()) return cmd_score(score_args);
        if (inject->parsed()) return cmd_inject(inject_args);
        if (campaign->parsed()) return cmd_campaign(campaign_args);
        if (transfer->parsed()) return cmd_transfer(transfer_args);
        if (ablate->parsed()) return cmd_ablate(ablate_args);
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const depsteer::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const depsteer::TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 3;
    } catch (const depsteer::EvaluationError& e) {
        std::cerr << "evaluation error: " << e.what() << "\n";
        return 4;
    } catch (const depsteer::skill::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
