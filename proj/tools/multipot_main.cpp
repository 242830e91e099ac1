// Command-line front end: run experiments, replay transcripts, validate
// demonstrations and datasets, probe toolchains, re-vote stored candidates.

#include <iostream>

#include <CLI11.hpp>

#include "multipot/cli.hpp"
#include "multipot/util.hpp"

namespace {

using namespace multipot;

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> tasks;
    std::vector<std::string> languages;
    std::string method;
    int k = -1;
    double temperature = -1.0;
    double top_p = -1.0;
    std::string tie_order;
    std::string tie_stat;
    std::string mode;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string transcript, taskset_dir, manifest, demo_dir, template_path, toolchains, patterns,
        out, checkpoint, workdir, curve_csv, endpoint, model, api_key_env;
    int gen_jobs = -1, exec_jobs = -1, timeout_ms = -1, exec_timeout_ms = -1;
    double tolerance = -1.0;
    bool keep_workdirs = false, strict = false, allow_empty = false, length_normalized = false;
};

void add_common_options(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "declarative run config (JSON)");
    cmd->add_option("--tasks", f.tasks, "tasks to run (appl math date tabular spatial)");
    cmd->add_option("--languages", f.languages, "languages (python r cpp java javascript)");
    cmd->add_option("--method", f.method, "greedy | sc | multipot");
    cmd->add_option("--k", f.k, "samples per question for self-consistency");
    cmd->add_option("--temperature", f.temperature, "sampling temperature");
    cmd->add_option("--top-p", f.top_p, "nucleus sampling mass");
    cmd->add_option("--tie-order", f.tie_order,
                    "cumprob | length_asc | length_desc | random | data_amount_asc | data_amount_desc");
    cmd->add_option("--tie-stat", f.tie_stat, "max | sum (group statistic for cumprob ties)");
    cmd->add_option("--mode", f.mode, "live | record | replay");
    cmd->add_option("--seed", f.seed, "run seed (required for sampling / random tie order)")
        ->each([&f](const std::string&) { f.seed_given = true; });
    cmd->add_option("--transcript", f.transcript, "transcript file for record/replay");
    cmd->add_option("--taskset-dir", f.taskset_dir, "directory with <task>.jsonl files");
    cmd->add_option("--manifest", f.manifest, "manifest with expected record counts");
    cmd->add_option("--demo-dir", f.demo_dir, "demonstration library directory");
    cmd->add_option("--template", f.template_path, "prompt template JSON");
    cmd->add_option("--toolchains", f.toolchains, "toolchain config JSON");
    cmd->add_option("--patterns", f.patterns, "error pattern table");
    cmd->add_option("--out", f.out, "report output path");
    cmd->add_option("--checkpoint", f.checkpoint, "checkpoint file (enables resume)");
    cmd->add_option("--workdir-base", f.workdir, "base directory for execution sandboxes");
    cmd->add_option("--curve-csv", f.curve_csv, "emit language-count curve CSV");
    cmd->add_option("--endpoint", f.endpoint, "OpenAI-compatible base URL");
    cmd->add_option("--model", f.model, "model name sent to the endpoint");
    cmd->add_option("--api-key-env", f.api_key_env, "env var holding the API key");
    cmd->add_option("--gen-jobs", f.gen_jobs, "generation worker pool size");
    cmd->add_option("--timeout", f.exec_timeout_ms, "execution timeout in ms (all languages)");
    cmd->add_flag("--length-normalized", f.length_normalized,
                  "divide cumulative logprobs by token count");
    cmd->add_option("--exec-jobs", f.exec_jobs, "execution worker pool size");
    cmd->add_option("--tolerance", f.tolerance, "numeric grading tolerance");
    cmd->add_flag("--keep-workdirs", f.keep_workdirs, "keep execution sandboxes");
    cmd->add_flag("--strict", f.strict, "absent toolchains fail instead of skip");
    cmd->add_flag("--allow-empty", f.allow_empty, "accept empty task sets");
}

RunConfig build_config(const CommonFlags& f) {
    RunConfig config;
    if (!f.config_path.empty()) config = load_run_config(f.config_path);

    for (const auto& t : f.tasks) {
        auto task = task_from_name(t);
        if (!task) throw ConfigError("unknown task: " + t);
        if (f.tasks.front() == t) config.tasks.clear();
        config.tasks.push_back(*task);
    }
    if (!f.languages.empty()) {
        config.languages.clear();
        for (const auto& l : f.languages) {
            auto lang = lang_from_name(l);
            if (!lang) throw ConfigError("unknown language: " + l);
            config.languages.push_back(*lang);
        }
    }
    if (!f.method.empty()) {
        auto m = method_from_name(f.method);
        if (!m) throw ConfigError("unknown method: " + f.method);
        config.method = *m;
    }
    if (f.k >= 0) config.k = f.k;
    if (f.temperature >= 0) config.sampling.temperature = f.temperature;
    if (f.top_p >= 0) config.sampling.top_p = f.top_p;
    if (!f.tie_order.empty()) {
        auto order = tie_order_from_name(f.tie_order);
        if (!order) throw ConfigError("unknown tie order: " + f.tie_order);
        config.policy.tie_order = *order;
    }
    if (!f.tie_stat.empty()) {
        auto stat = tie_stat_from_name(f.tie_stat);
        if (!stat) throw ConfigError("unknown tie stat: " + f.tie_stat);
        config.policy.tie_stat = *stat;
    }
    if (!f.mode.empty()) {
        if (f.mode == "live")
            config.mode = GenMode::Live;
        else if (f.mode == "record")
            config.mode = GenMode::Record;
        else if (f.mode == "replay")
            config.mode = GenMode::Replay;
        else
            throw ConfigError("unknown mode: " + f.mode);
    }
    if (f.seed_given) config.seed = f.seed;
    if (!f.transcript.empty()) config.transcript_path = f.transcript;
    if (!f.taskset_dir.empty()) config.taskset_dir = f.taskset_dir;
    if (!f.manifest.empty()) config.manifest_path = f.manifest;
    if (!f.demo_dir.empty()) config.demo_dir = f.demo_dir;
    if (!f.template_path.empty()) config.template_path = f.template_path;
    if (!f.toolchains.empty()) config.toolchain_config = f.toolchains;
    if (!f.patterns.empty()) config.pattern_path = f.patterns;
    if (!f.out.empty()) config.out_path = f.out;
    if (!f.checkpoint.empty()) config.checkpoint_path = f.checkpoint;
    if (!f.workdir.empty()) config.workdir_base = f.workdir;
    if (!f.curve_csv.empty()) config.curve_csv_path = f.curve_csv;
    if (!f.endpoint.empty()) config.endpoint.base_url = f.endpoint;
    if (!f.model.empty()) config.endpoint.model = f.model;
    if (!f.api_key_env.empty()) config.api_key_env = f.api_key_env;
    if (f.gen_jobs >= 0) config.gen_jobs = f.gen_jobs;
    if (f.exec_jobs >= 0) config.exec_jobs = f.exec_jobs;
    if (f.exec_timeout_ms >= 0) config.exec_timeout_ms = f.exec_timeout_ms;
    if (f.length_normalized) config.length_normalize_logprobs = true;
    if (f.timeout_ms >= 0) config.endpoint.request_timeout_ms = f.timeout_ms;
    if (f.tolerance > 0) config.tol = f.tolerance;
    if (f.keep_workdirs) config.keep_workdirs = true;
    if (f.strict) config.strict = true;
    if (f.allow_empty) config.allow_empty = true;
    if (config.policy.tie_order == TieOrder::Random && config.seed)
        config.policy.seed = *config.seed;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multilingual program-of-thoughts harness"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "run an experiment end to end");
    add_common_options(run_cmd, run_flags);

    std::vector<std::string> report_paths;
    CLI::App* report_cmd = app.add_subcommand("report", "render stored reports");
    report_cmd->add_option("reports", report_paths, "report JSON paths")->required();

    CommonFlags validate_flags;
    CLI::App* validate_cmd =
        app.add_subcommand("validate", "check datasets, demonstrations, toolchains");
    add_common_options(validate_cmd, validate_flags);

    CommonFlags probe_flags;
    CLI::App* probe_cmd = app.add_subcommand("probe", "report toolchain availability");
    add_common_options(probe_cmd, probe_flags);

    std::string vote_report_path, vote_out_path;
    CommonFlags vote_flags;
    CLI::App* vote_cmd = app.add_subcommand("vote", "re-vote stored candidates under a new policy");
    vote_cmd->add_option("report", vote_report_path, "stored report JSON")->required();
    vote_cmd->add_option("--out", vote_out_path, "write the re-voted report here");
    vote_cmd->add_option("--tie-order", vote_flags.tie_order, "tie order");
    vote_cmd->add_option("--tie-stat", vote_flags.tie_stat, "tie statistic");
    vote_cmd->add_option("--seed", vote_flags.seed, "seed for the random tie order")
        ->each([&vote_flags](const std::string&) { vote_flags.seed_given = true; });
    vote_cmd->add_option("--tolerance", vote_flags.tolerance, "numeric grading tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            RunConfig config = build_config(run_flags);
            RunReport report = cmd_run(config, std::cerr);
            std::cout << report.render_text();
            return kExitOk;
        }
        if (report_cmd->parsed()) {
            std::vector<std::filesystem::path> paths(report_paths.begin(), report_paths.end());
            return cmd_report(paths, std::cout);
        }
        if (validate_cmd->parsed()) {
            RunConfig config = build_config(validate_flags);
            return cmd_validate(config, std::cout);
        }
        if (probe_cmd->parsed()) {
            RunConfig config = build_config(probe_flags);
            return cmd_probe(config, std::cout);
        }
        if (vote_cmd->parsed()) {
            RunReport report = RunReport::load(vote_report_path);
            VotePolicy policy;
            if (!vote_flags.tie_order.empty()) {
                auto order = tie_order_from_name(vote_flags.tie_order);
                if (!order) throw ConfigError("unknown tie order: " + vote_flags.tie_order);
                policy.tie_order = *order;
            }
            if (!vote_flags.tie_stat.empty()) {
                auto stat = tie_stat_from_name(vote_flags.tie_stat);
                if (!stat) throw ConfigError("unknown tie stat: " + vote_flags.tie_stat);
                policy.tie_stat = *stat;
            }
            if (vote_flags.seed_given) policy.seed = vote_flags.seed;
            if (policy.tie_order == TieOrder::Random && !vote_flags.seed_given)
                throw ConfigError("a seed is required for the random tie order");
            double tol = vote_flags.tolerance > 0 ? vote_flags.tolerance : kDefaultTolerance;
            RunReport revoted = cmd_revote(report, policy, tol, std::cout);
            if (!vote_out_path.empty()) revoted.save(vote_out_path);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitValidationFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeFailure;
    }
    return kExitOk;
}
