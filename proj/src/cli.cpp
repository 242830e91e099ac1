#include "multipot/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "multipot/taskset.hpp"
#include "multipot/util.hpp"

namespace multipot {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<Lang> default_language_order() {
    std::vector<Lang> langs;
    for (const auto& info : all_langs()) langs.push_back(info.id);
    return langs;
}

std::string method_label(const RunConfig& config) {
    switch (config.method) {
        case Method::Greedy: return "greedy";
        case Method::SelfConsistency: return "sc(k=" + std::to_string(config.k) + ")";
        case Method::MultiPoT: return "multipot";
    }
    return "?";
}

struct RowPlan {
    Task task;
    std::vector<Lang> langs;
    std::string key;
};

}  // namespace

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Greedy: return "greedy";
        case Method::SelfConsistency: return "sc";
        case Method::MultiPoT: return "multipot";
    }
    return "?";
}

std::optional<Method> method_from_name(std::string_view name) {
    if (name == "greedy") return Method::Greedy;
    if (name == "sc" || name == "self-consistency") return Method::SelfConsistency;
    if (name == "multipot") return Method::MultiPoT;
    return std::nullopt;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig config;
    if (j.contains("tasks"))
        for (const auto& t : j["tasks"]) {
            auto task = task_from_name(t.get<std::string>());
            if (!task) throw ConfigError("unknown task: " + t.get<std::string>());
            config.tasks.push_back(*task);
        }
    if (j.contains("languages"))
        for (const auto& l : j["languages"]) {
            auto lang = lang_from_name(l.get<std::string>());
            if (!lang) throw ConfigError("unknown language: " + l.get<std::string>());
            config.languages.push_back(*lang);
        }
    if (j.contains("method")) {
        auto m = method_from_name(j["method"].get<std::string>());
        if (!m) throw ConfigError("unknown method: " + j["method"].get<std::string>());
        config.method = *m;
    }
    if (j.contains("k")) config.k = j["k"].get<int>();
    if (j.contains("temperature")) config.sampling.temperature = j["temperature"].get<double>();
    if (j.contains("top_p")) config.sampling.top_p = j["top_p"].get<double>();
    if (j.contains("max_tokens")) config.sampling.max_tokens = j["max_tokens"].get<int>();
    if (j.contains("tie_order")) {
        auto order = tie_order_from_name(j["tie_order"].get<std::string>());
        if (!order) throw ConfigError("unknown tie order: " + j["tie_order"].get<std::string>());
        config.policy.tie_order = *order;
    }
    if (j.contains("tie_stat")) {
        auto stat = tie_stat_from_name(j["tie_stat"].get<std::string>());
        if (!stat) throw ConfigError("unknown tie stat: " + j["tie_stat"].get<std::string>());
        config.policy.tie_stat = *stat;
    }
    if (j.contains("data_amount_ranks")) {
        for (auto it = j["data_amount_ranks"].begin(); it != j["data_amount_ranks"].end(); ++it) {
            auto lang = lang_from_name(it.key());
            if (!lang) throw ConfigError("data_amount_ranks names unknown language: " + it.key());
            config.policy.data_ranks[static_cast<int>(*lang)] = it.value().get<int>();
        }
    }
    if (j.contains("endpoint")) config.endpoint.base_url = j["endpoint"].get<std::string>();
    if (j.contains("model")) config.endpoint.model = j["model"].get<std::string>();
    if (j.contains("api_style"))
        config.endpoint.style = j["api_style"].get<std::string>() == "chat"
                                    ? EndpointConfig::Style::Chat
                                    : EndpointConfig::Style::Completion;
    if (j.contains("api_key_env")) config.api_key_env = j["api_key_env"].get<std::string>();
    if (j.contains("mode")) {
        const std::string mode = j["mode"].get<std::string>();
        if (mode == "live")
            config.mode = GenMode::Live;
        else if (mode == "record")
            config.mode = GenMode::Record;
        else if (mode == "replay")
            config.mode = GenMode::Replay;
        else
            throw ConfigError("unknown mode: " + mode);
    }
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("transcript")) config.transcript_path = j["transcript"].get<std::string>();
    if (j.contains("taskset_dir")) config.taskset_dir = j["taskset_dir"].get<std::string>();
    if (j.contains("manifest")) config.manifest_path = j["manifest"].get<std::string>();
    if (j.contains("demo_dir")) config.demo_dir = j["demo_dir"].get<std::string>();
    if (j.contains("template")) config.template_path = j["template"].get<std::string>();
    if (j.contains("toolchains")) config.toolchain_config = j["toolchains"].get<std::string>();
    if (j.contains("patterns")) config.pattern_path = j["patterns"].get<std::string>();
    if (j.contains("out")) config.out_path = j["out"].get<std::string>();
    if (j.contains("checkpoint")) config.checkpoint_path = j["checkpoint"].get<std::string>();
    if (j.contains("workdir_base")) config.workdir_base = j["workdir_base"].get<std::string>();
    if (j.contains("curve_csv")) config.curve_csv_path = j["curve_csv"].get<std::string>();
    if (j.contains("keep_workdirs")) config.keep_workdirs = j["keep_workdirs"].get<bool>();
    if (j.contains("strict")) config.strict = j["strict"].get<bool>();
    if (j.contains("allow_empty")) config.allow_empty = j["allow_empty"].get<bool>();
    if (j.contains("length_normalize_logprobs"))
        config.length_normalize_logprobs = j["length_normalize_logprobs"].get<bool>();
    if (j.contains("exec_timeout_ms")) config.exec_timeout_ms = j["exec_timeout_ms"].get<int>();
    if (j.contains("gen_jobs")) config.gen_jobs = j["gen_jobs"].get<int>();
    if (j.contains("exec_jobs")) config.exec_jobs = j["exec_jobs"].get<int>();
    if (j.contains("tolerance")) config.tol = j["tolerance"].get<double>();
    if (j.contains("timeout_ms") || j.contains("request_timeout_ms")) {
        if (j.contains("request_timeout_ms"))
            config.endpoint.request_timeout_ms = j["request_timeout_ms"].get<int>();
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_json(json::parse(util::read_file(path)));
}

ordered_json run_config_snapshot(const RunConfig& config) {
    ordered_json j;
    ordered_json tasks = ordered_json::array();
    for (Task t : config.tasks) tasks.push_back(std::string(task_name(t)));
    j["tasks"] = std::move(tasks);
    ordered_json langs = ordered_json::array();
    for (Lang l : config.languages) langs.push_back(std::string(lang_name(l)));
    j["languages"] = std::move(langs);
    j["method"] = std::string(method_name(config.method));
    j["k"] = config.k;
    j["temperature"] = config.sampling.temperature;
    j["top_p"] = config.sampling.top_p;
    j["max_tokens"] = config.sampling.max_tokens;
    j["tie_order"] = std::string(tie_order_name(config.policy.tie_order));
    j["tie_stat"] = std::string(tie_stat_name(config.policy.tie_stat));
    j["mode"] = config.mode == GenMode::Live     ? "live"
                : config.mode == GenMode::Record ? "record"
                                                 : "replay";
    if (config.seed) j["seed"] = *config.seed;
    j["length_normalized_logprobs"] = config.length_normalize_logprobs;
    j["model"] = config.endpoint.model;
    j["tolerance"] = config.tol;
    j["transcript"] = config.transcript_path.generic_string();
    return j;
}

void validate_run_config(const RunConfig& config) {
    if (config.tasks.empty()) throw ConfigError("no tasks selected");
    if (config.mode == GenMode::Replay && config.transcript_path.empty())
        throw ConfigError("replay mode requires a transcript path");
    if ((config.mode == GenMode::Record || config.mode == GenMode::Replay) &&
        config.transcript_path.empty())
        throw ConfigError("record/replay mode requires a transcript path");
    if (config.method == Method::SelfConsistency) {
        if (config.languages.size() != 1)
            throw ConfigError("self-consistency requires exactly one language");
        if (config.k < 1) throw ConfigError("self-consistency requires k >= 1");
    }
    const bool samples = config.method != Method::Greedy && config.sampling.temperature > 0.0;
    if (samples && !config.seed)
        throw ConfigError("a seed is required for sampled runs (reproducibility)");
    if (config.policy.tie_order == TieOrder::Random && !config.seed)
        throw ConfigError("a seed is required for the random tie order");
    if (config.taskset_dir.empty()) throw ConfigError("taskset_dir is required");
    if (config.demo_dir.empty()) throw ConfigError("demo_dir is required");
    if (config.sampling.top_p <= 0.0 || config.sampling.top_p > 1.0)
        throw ConfigError("top_p must be in (0, 1]");
    if (config.tol <= 0.0) throw ConfigError("tolerance must be positive");
}

namespace {

struct LoadedEnvironment {
    ToolchainSet toolchains;
    std::set<Lang> available;
    std::vector<ToolchainProbe> probes;
    DemoLibrary demos;
    PromptTemplate prompt_template;
    PatternTable patterns;
};

LoadedEnvironment load_environment(const RunConfig& config) {
    LoadedEnvironment env;
    env.toolchains = config.toolchain_config.empty() ? default_toolchains()
                                                     : load_toolchains(config.toolchain_config);
    env.probes = probe_toolchains(env.toolchains);
    for (const auto& probe : env.probes)
        if (probe.present) env.available.insert(probe.lang);
    if (!config.demo_dir.empty()) env.demos = DemoLibrary::load_dir(config.demo_dir);
    env.prompt_template = config.template_path.empty() ? PromptTemplate{}
                                                       : load_prompt_template(config.template_path);
    env.patterns =
        config.pattern_path.empty() ? PatternTable::builtin() : PatternTable::load(config.pattern_path);
    if (config.exec_timeout_ms)
        for (auto& [lang, spec] : env.toolchains) spec.timeout_ms = *config.exec_timeout_ms;
    return env;
}

std::map<Task, TaskSetFile> load_tasksets(const RunConfig& config) {
    std::map<Task, int> manifest;
    if (!config.manifest_path.empty()) manifest = load_manifest(config.manifest_path);
    std::map<Task, TaskSetFile> sets;
    for (Task task : config.tasks) {
        LoadOptions opts;
        opts.allow_empty = config.allow_empty;
        if (auto it = manifest.find(task); it != manifest.end()) opts.expected_count = it->second;
        auto path = config.taskset_dir / (std::string(task_name(task)) + ".jsonl");
        sets.emplace(task, load_taskset(path, task, opts));
    }
    return sets;
}

}  // namespace

RunReport cmd_run(const RunConfig& config, std::ostream& log) {
    validate_run_config(config);
    LoadedEnvironment env = load_environment(config);

    std::vector<Lang> requested =
        config.languages.empty() ? default_language_order() : config.languages;
    std::vector<Lang> usable;
    for (Lang lang : requested) {
        if (env.available.count(lang)) {
            usable.push_back(lang);
        } else if (config.strict) {
            throw ToolchainMissingError(lang, "required in strict mode");
        } else {
            log << "warning: excluding " << lang_name(lang) << " (toolchain absent)\n";
        }
    }
    if (usable.empty()) throw ConfigError("no usable languages after toolchain probe");

    Transcript transcript;
    if (!config.transcript_path.empty())
        transcript = Transcript::open(config.transcript_path, config.mode != GenMode::Replay);
    EndpointConfig endpoint = config.endpoint;
    if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key)
        endpoint.api_key = key;
    GenClient client(endpoint, config.mode, &transcript);
    client.set_length_normalized(config.length_normalize_logprobs);

    ThreadPool gen_pool(static_cast<size_t>(std::max(1, config.gen_jobs)));
    ThreadPool exec_pool(static_cast<size_t>(std::max(1, config.exec_jobs)));

    std::vector<std::string> warnings;
    PipelineContext ctx;
    ctx.client = &client;
    ctx.demos = &env.demos;
    ctx.prompt_template = env.prompt_template;
    ctx.toolchains = &env.toolchains;
    ctx.available_langs = env.available;
    ctx.patterns = &env.patterns;
    ctx.policy = config.policy;
    if (config.seed) ctx.policy.seed = *config.seed;
    ctx.sampling = config.sampling;
    ctx.request_seed = config.seed;
    ctx.tol = config.tol;
    ctx.workdir_base = config.workdir_base;
    ctx.keep_workdirs = config.keep_workdirs;
    ctx.gen_pool = &gen_pool;
    ctx.exec_pool = &exec_pool;
    ctx.warnings = &warnings;

    // Resume state: (row key, qid) -> stored result.
    std::map<std::pair<std::string, std::string>, QuestionResult> done;
    if (!config.checkpoint_path.empty() && std::filesystem::exists(config.checkpoint_path)) {
        for (const auto& line : util::split_lines(util::read_file(config.checkpoint_path))) {
            if (util::trim(line).empty()) continue;
            json rec = json::parse(line);
            done.emplace(std::make_pair(rec.at("row").get<std::string>(),
                                        rec.at("question").at("qid").get<std::string>()),
                         question_result_from_json(rec.at("question")));
        }
        if (!done.empty())
            log << "resuming from checkpoint with " << done.size() << " stored question(s)\n";
    }

    const std::string method_str = method_label(config);
    std::vector<RowPlan> plans;
    for (Task task : config.tasks) {
        if (config.method == Method::MultiPoT) {
            RowPlan plan{task, usable, ""};
            plan.key = std::string(task_name(task)) + "|" + method_str + "|" + langset_name(usable);
            plans.push_back(std::move(plan));
        } else {
            for (Lang lang : usable) {
                RowPlan plan{task, {lang}, ""};
                plan.key = std::string(task_name(task)) + "|" + method_str + "|" +
                           langset_name({lang});
                plans.push_back(std::move(plan));
            }
        }
    }

    auto tasksets = load_tasksets(config);

    RunReport report;
    report.config_snapshot = run_config_snapshot(config);
    report.transcript_hash = transcript.file_hash();

    for (const auto& plan : plans) {
        ReportRow row;
        row.task = std::string(task_name(plan.task));
        row.method = method_str;
        row.langset = langset_name(plan.langs);

        for (const QuestionRecord& q : tasksets.at(plan.task).records) {
            auto done_it = done.find({plan.key, q.qid});
            if (done_it != done.end()) {
                row.questions.push_back(done_it->second);
                continue;
            }

            QuestionRun run;
            switch (config.method) {
                case Method::Greedy: run = run_greedy(q, plan.langs.front(), ctx); break;
                case Method::SelfConsistency:
                    run = run_self_consistency(q, plan.langs.front(), config.k, ctx);
                    break;
                case Method::MultiPoT: run = run_multipot(q, plan.langs, ctx); break;
            }

            QuestionResult result;
            result.task = plan.task;
            result.qid = q.qid;
            result.ground_truth = q.ground_truth;
            result.candidates = std::move(run.candidates);
            result.elected = run.vote.elected;
            result.correct =
                result.elected && answer_equiv(*result.elected, q.ground_truth, config.tol);
            result.vote_trace = run.vote.trace;

            if (!config.checkpoint_path.empty()) {
                ordered_json rec;
                rec["row"] = plan.key;
                rec["question"] = question_result_to_json(result);
                util::append_line(config.checkpoint_path, rec.dump());
            }
            row.questions.push_back(std::move(result));
        }

        row.accuracy = accuracy_pct(row.questions, config.tol);
        row.coverage = coverage_pct(row.questions, config.tol);
        row.bd = breakdown(row.questions);
        report.rows.push_back(std::move(row));
    }

    for (const auto& warning : warnings) log << "warning: " << warning << "\n";
    if (!config.out_path.empty()) report.save(config.out_path);
    if (!config.curve_csv_path.empty()) util::write_file(config.curve_csv_path, report.to_curve_csv());
    return report;
}

int cmd_report(const std::vector<std::filesystem::path>& report_paths, std::ostream& out) {
    std::vector<RunReport> reports;
    for (const auto& path : report_paths) reports.push_back(RunReport::load(path));
    if (reports.empty()) {
        out << "no reports given\n";
        return kExitValidationFailure;
    }
    if (reports.size() == 1)
        out << reports.front().render_text();
    else
        out << render_comparison(reports);
    return kExitOk;
}

int cmd_validate(const RunConfig& config, std::ostream& out) {
    int violations = 0;

    LoadedEnvironment env = load_environment(config);
    for (const auto& probe : env.probes) {
        if (probe.present) {
            out << "toolchain " << lang_name(probe.lang) << ": " << probe.version << "\n";
        } else {
            out << "toolchain " << lang_name(probe.lang) << ": absent\n";
            if (config.strict) ++violations;
        }
    }

    if (!config.manifest_path.empty()) {
        auto manifest = load_manifest(config.manifest_path);
        for (const auto& [task, expected] : manifest) {
            auto path = config.taskset_dir / (std::string(task_name(task)) + ".jsonl");
            try {
                LoadOptions opts;
                opts.allow_empty = config.allow_empty;
                opts.expected_count = expected;
                auto set = load_taskset(path, task, opts);
                out << "taskset " << task_name(task) << ": " << set.records.size()
                    << " records\n";
            } catch (const std::exception& e) {
                out << "taskset " << task_name(task) << ": VIOLATION " << e.what() << "\n";
                ++violations;
            }
        }
    }

    DemoValidationReport demo_report = validate_demo_library(
        env.demos, env.toolchains, env.available, config.workdir_base / "validate");
    for (const auto& warning : demo_report.warnings) out << "warning: " << warning << "\n";
    for (const auto& violation : demo_report.violations) {
        out << "VIOLATION " << violation << "\n";
        ++violations;
    }

    out << (violations == 0 ? "validation OK\n"
                            : "validation failed with " + std::to_string(violations) +
                                  " violation(s)\n");
    return violations == 0 ? kExitOk : kExitValidationFailure;
}

int cmd_probe(const RunConfig& config, std::ostream& out) {
    ToolchainSet toolchains = config.toolchain_config.empty()
                                  ? default_toolchains()
                                  : load_toolchains(config.toolchain_config);
    for (const auto& probe : probe_toolchains(toolchains)) {
        out << lang_name(probe.lang) << ": "
            << (probe.present ? "present (" + probe.version + ")" : "absent") << "\n";
    }
    return kExitOk;
}

RunReport cmd_revote(const RunReport& report, const VotePolicy& policy, double tol,
                     std::ostream& out) {
    RunReport revoted = report;
    for (auto& row : revoted.rows) {
        for (auto& q : row.questions) {
            VoteResult result = vote(q.candidates, policy);
            q.elected = result.elected;
            q.correct = q.elected && answer_equiv(*q.elected, q.ground_truth, tol);
            q.vote_trace = result.trace;
        }
        const double before = row.accuracy;
        row.accuracy = accuracy_pct(row.questions, tol);
        row.coverage = coverage_pct(row.questions, tol);
        out << row.task << " | " << row.method << " | " << row.langset << ": accuracy "
            << util::format_pct(before) << " -> " << util::format_pct(row.accuracy)
            << " under tie order " << tie_order_name(policy.tie_order) << "("
            << tie_stat_name(policy.tie_stat) << ")\n";
    }
    revoted.config_snapshot["tie_order"] = std::string(tie_order_name(policy.tie_order));
    revoted.config_snapshot["tie_stat"] = std::string(tie_stat_name(policy.tie_stat));
    return revoted;
}

}  // namespace multipot
