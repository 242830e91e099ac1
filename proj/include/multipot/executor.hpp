#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "multipot/domain.hpp"

namespace multipot {

// Command templates use {src}, {bin}, {dir} and {stem} placeholders; {stem}
// is the source filename without extension (the Java main class).
struct ToolchainSpec {
    Lang lang = Lang::Python;
    std::optional<std::string> compile_cmd;  // static languages only
    std::string run_cmd;
    std::string source_filename;
    std::string probe_cmd;
    int timeout_ms = 10000;
    int compile_timeout_ms = 30000;
    std::size_t output_cap = 64 * 1024;
};

using ToolchainSet = std::map<Lang, ToolchainSpec>;

ToolchainSet default_toolchains();
ToolchainSet load_toolchains(const std::filesystem::path& config_path);

enum class ExecStatus { Completed, CompileError, RuntimeError, Timeout };

std::string_view exec_status_name(ExecStatus status);

struct ExecOutcome {
    ExecStatus status = ExecStatus::RuntimeError;
    std::string stdout_text;   // capped, with explicit truncation marker
    std::string stderr_text;   // run stderr, or compiler stderr for CompileError
    int exit_code = -1;
    int term_signal = 0;       // nonzero when the process died on a signal
    long wall_ms = 0;
    bool stdout_truncated = false;
    bool stderr_truncated = false;
};

struct ToolchainMissingError : std::runtime_error {
    ToolchainMissingError(Lang lang, const std::string& detail)
        : std::runtime_error("toolchain missing for " + std::string(lang_name(lang)) + ": " +
                             detail),
          lang(lang) {}
    Lang lang;
};

struct UnwrappableSourceError : std::runtime_error {
    explicit UnwrappableSourceError(Lang lang)
        : std::runtime_error("source cannot be turned into a compilable unit for " +
                             std::string(lang_name(lang))),
          lang(lang) {}
    Lang lang;
};

struct WrappedSource {
    std::string filename;
    std::string text;
};

// Java: picks the file name from the public class, or wraps class-less
// statements in a Main class. C++: prepends common standard headers when the
// code has no includes of its own. Dynamic languages pass through.
WrappedSource wrap_source(const std::string& code, Lang lang, const ToolchainSpec& spec);

// Writes the (wrapped) sample into workdir, compiles it if the language is
// static, and runs it under the spec's timeout and output cap. The workdir
// is removed afterwards unless keep_workdir is set.
ExecOutcome execute(const GenSample& sample, const ToolchainSpec& spec,
                    const std::filesystem::path& workdir, bool keep_workdir = false);

struct ToolchainProbe {
    Lang lang;
    bool present = false;
    std::string version;
};

std::vector<ToolchainProbe> probe_toolchains(const ToolchainSet& specs);

// Creates a unique empty directory under base; removes it on destruction
// unless released (for --keep-workdirs).
class WorkdirGuard {
public:
    explicit WorkdirGuard(const std::filesystem::path& base, bool keep = false);
    ~WorkdirGuard();
    WorkdirGuard(const WorkdirGuard&) = delete;
    WorkdirGuard& operator=(const WorkdirGuard&) = delete;

    const std::filesystem::path& path() const { return dir_; }

private:
    std::filesystem::path dir_;
    bool keep_;
};

namespace detail {
// Low-level runner shared by execute/probe: argv exec, wall-clock deadline,
// capped capture. Kills the whole process group on timeout.
struct RunResult {
    bool timed_out = false;
    bool launch_failed = false;  // the binary itself could not be exec'd
    std::string launch_error;
    int exit_code = -1;
    int term_signal = 0;
    long wall_ms = 0;
    std::string out;
    std::string err;
    bool out_truncated = false;
    bool err_truncated = false;
};

RunResult run_command(const std::vector<std::string>& argv,
                      const std::filesystem::path& cwd, int timeout_ms,
                      std::size_t output_cap);

std::vector<std::string> split_command(const std::string& command);
}  // namespace detail

}  // namespace multipot
