#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "multipot/ensemble.hpp"
#include "multipot/metrics.hpp"

namespace multipot {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Method { Greedy, SelfConsistency, MultiPoT };

std::string_view method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);

struct RunConfig {
    std::vector<Task> tasks;
    std::vector<Lang> languages;  // sc: exactly one; multipot default all five
    Method method = Method::MultiPoT;
    int k = 5;
    SamplingParams sampling;
    VotePolicy policy;
    EndpointConfig endpoint;
    std::string api_key_env = "MULTIPOT_API_KEY";
    GenMode mode = GenMode::Replay;
    std::optional<std::uint64_t> seed;

    std::filesystem::path transcript_path;
    std::filesystem::path taskset_dir;
    std::filesystem::path manifest_path;     // optional
    std::filesystem::path demo_dir;
    std::filesystem::path template_path;     // optional; built-in defaults otherwise
    std::filesystem::path toolchain_config;  // optional
    std::filesystem::path pattern_path;      // optional; built-in table otherwise
    std::filesystem::path out_path;
    std::filesystem::path checkpoint_path;   // optional; enables resume
    std::filesystem::path workdir_base = "work";
    std::filesystem::path curve_csv_path;    // optional plot-data emission

    bool keep_workdirs = false;
    bool strict = false;
    bool allow_empty = false;
    bool length_normalize_logprobs = false;
    int gen_jobs = 2;
    int exec_jobs = 4;
    std::optional<int> exec_timeout_ms;  // overrides every toolchain's timeout
    double tol = kDefaultTolerance;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json run_config_snapshot(const RunConfig& config);

// Throws ConfigError: replay requires a transcript path, sc requires a
// single language, sampling and Random tie order require a seed.
void validate_run_config(const RunConfig& config);

// Full pipeline per question: prompt -> generate -> execute -> extract ->
// vote -> score. Resumable through the checkpoint file.
RunReport cmd_run(const RunConfig& config, std::ostream& log);

int cmd_report(const std::vector<std::filesystem::path>& report_paths, std::ostream& out);

// Task manifests + demonstration library + toolchain probe. Returns the
// number of violations (0 = clean).
int cmd_validate(const RunConfig& config, std::ostream& out);

int cmd_probe(const RunConfig& config, std::ostream& out);

// Offline re-vote of a stored report's candidates under a new policy.
RunReport cmd_revote(const RunReport& report, const VotePolicy& policy, double tol,
                     std::ostream& out);

constexpr int kExitOk = 0;
constexpr int kExitValidationFailure = 1;
constexpr int kExitRuntimeFailure = 2;

}  // namespace multipot
