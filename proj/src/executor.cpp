#include "multipot/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <regex>

#include <json.hpp>

#include "multipot/util.hpp"

namespace multipot {

namespace {

constexpr const char* kLaunchSentinel = "[launcher] exec failed: ";
constexpr const char* kTruncationMarker = "\n[output truncated]";

std::string substitute(std::string tmpl, const WrappedSource& src) {
    const std::string stem = std::filesystem::path(src.filename).stem().string();
    tmpl = util::replace_all(std::move(tmpl), "{src}", src.filename);
    tmpl = util::replace_all(std::move(tmpl), "{bin}", "prog");
    tmpl = util::replace_all(std::move(tmpl), "{dir}", ".");
    tmpl = util::replace_all(std::move(tmpl), "{stem}", stem);
    return tmpl;
}

ToolchainSpec make_spec(Lang lang, std::optional<std::string> compile, std::string run,
                        std::string source, std::string probe) {
    ToolchainSpec spec;
    spec.lang = lang;
    spec.compile_cmd = std::move(compile);
    spec.run_cmd = std::move(run);
    spec.source_filename = std::move(source);
    spec.probe_cmd = std::move(probe);
    return spec;
}

}  // namespace

ToolchainSet default_toolchains() {
    ToolchainSet set;
    set[Lang::Python] =
        make_spec(Lang::Python, std::nullopt, "python3 {src}", "main.py", "python3 --version");
    set[Lang::R] = make_spec(Lang::R, std::nullopt, "Rscript --vanilla {src}", "main.R",
                             "Rscript --version");
    set[Lang::Cpp] = make_spec(Lang::Cpp, "g++ -std=c++20 -O1 -o {bin} {src}", "./{bin}",
                               "main.cpp", "g++ --version");
    set[Lang::Java] = make_spec(Lang::Java, "javac {src}",
                                "java -XX:-UsePerfData -cp {dir} {stem}", "Main.java",
                                "javac -version");
    set[Lang::JavaScript] =
        make_spec(Lang::JavaScript, std::nullopt, "node {src}", "main.js", "node --version");
    return set;
}

ToolchainSet load_toolchains(const std::filesystem::path& config_path) {
    ToolchainSet set = default_toolchains();
    nlohmann::json cfg = nlohmann::json::parse(util::read_file(config_path));
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        auto lang = lang_from_name(it.key());
        if (!lang) throw std::runtime_error("toolchain config names unknown language: " + it.key());
        ToolchainSpec& spec = set[*lang];
        const auto& entry = it.value();
        if (entry.contains("compile")) spec.compile_cmd = entry["compile"].get<std::string>();
        if (entry.contains("run")) spec.run_cmd = entry["run"].get<std::string>();
        if (entry.contains("source")) spec.source_filename = entry["source"].get<std::string>();
        if (entry.contains("probe")) spec.probe_cmd = entry["probe"].get<std::string>();
        if (entry.contains("timeout_ms")) spec.timeout_ms = entry["timeout_ms"].get<int>();
        if (entry.contains("compile_timeout_ms"))
            spec.compile_timeout_ms = entry["compile_timeout_ms"].get<int>();
        if (entry.contains("output_cap")) spec.output_cap = entry["output_cap"].get<std::size_t>();
        // Invariant: static languages compile, dynamic ones do not.
        if (lang_kind(*lang) == LangKind::Static && !spec.compile_cmd)
            throw std::runtime_error("static language without compile command: " + it.key());
        if (lang_kind(*lang) == LangKind::Dynamic && spec.compile_cmd)
            throw std::runtime_error("dynamic language with compile command: " + it.key());
        if (spec.timeout_ms <= 0) throw std::runtime_error("timeout must be positive: " + it.key());
    }
    return set;
}

std::string_view exec_status_name(ExecStatus status) {
    switch (status) {
        case ExecStatus::Completed: return "completed";
        case ExecStatus::CompileError: return "compile_error";
        case ExecStatus::RuntimeError: return "runtime_error";
        case ExecStatus::Timeout: return "timeout";
    }
    return "unknown";
}

WrappedSource wrap_source(const std::string& code, Lang lang, const ToolchainSpec& spec) {
    if (util::trim(code).empty()) throw UnwrappableSourceError(lang);

    WrappedSource out;
    out.filename = spec.source_filename;
    out.text = code;
    if (!out.text.empty() && out.text.back() != '\n') out.text += '\n';

    switch (lang) {
        case Lang::Java: {
            static const std::regex public_class(R"(public\s+class\s+([A-Za-z_$][A-Za-z0-9_$]*))");
            static const std::regex any_class(R"(\bclass\s+([A-Za-z_$][A-Za-z0-9_$]*))");
            std::smatch m;
            if (std::regex_search(code, m, public_class)) {
                out.filename = m[1].str() + ".java";
            } else if (std::regex_search(code, m, any_class)) {
                out.filename = m[1].str() + ".java";
            } else {
                // Bare statements: hoist imports, put the rest into main().
                std::string imports, body;
                for (const auto& line : util::split_lines(code)) {
                    if (util::starts_with(util::trim(line), "import "))
                        imports += line + "\n";
                    else
                        body += "        " + line + "\n";
                }
                out.filename = "Main.java";
                out.text = imports +
                           "public class Main {\n"
                           "    public static void main(String[] args) {\n" +
                           body +
                           "    }\n"
                           "}\n";
            }
            break;
        }
        case Lang::Cpp: {
            if (code.find("#include") == std::string::npos) {
                out.text =
                    "#include <algorithm>\n#include <cmath>\n#include <cstdio>\n"
                    "#include <iomanip>\n#include <iostream>\n#include <map>\n"
                    "#include <numeric>\n#include <set>\n#include <sstream>\n"
                    "#include <string>\n#include <vector>\n"
                    "using namespace std;\n" +
                    out.text;
            }
            break;
        }
        default:
            break;  // dynamic languages run as-is
    }
    return out;
}

namespace detail {

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> argv;
    std::string current;
    bool in_quotes = false;
    for (char c : command) {
        if (c == '"') {
            in_quotes = !in_quotes;
        } else if (!in_quotes && std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) argv.push_back(std::move(current)), current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) argv.push_back(std::move(current));
    return argv;
}

namespace {

// Reads whatever is available from fd into dest, honoring the cap but
// draining beyond it so the child never blocks on a full pipe.
// Returns false once the fd reaches EOF.
bool drain_fd(int fd, std::string& dest, std::size_t cap, bool& truncated) {
    char buf[4096];
    for (;;) {
        ssize_t n = ::read(fd, buf, sizeof(buf));
        if (n > 0) {
            if (dest.size() < cap) {
                std::size_t take = std::min(static_cast<std::size_t>(n), cap - dest.size());
                dest.append(buf, take);
                if (take < static_cast<std::size_t>(n)) truncated = true;
            } else {
                truncated = true;
            }
            continue;
        }
        if (n == 0) return false;
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) return true;
        return false;
    }
}

void set_nonblocking(int fd) {
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

RunResult run_command(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                      int timeout_ms, std::size_t output_cap) {
    RunResult result;
    if (argv.empty()) {
        result.launch_failed = true;
        result.launch_error = "empty command";
        return result;
    }

    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw std::runtime_error("pipe() failed");

    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("fork() failed");

    if (pid == 0) {
        // Child: own process group so a timeout kill reaps grandchildren too.
        setpgid(0, 0);
        int devnull = open("/dev/null", O_RDONLY);
        if (devnull >= 0) dup2(devnull, STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        if (chdir(cwd.c_str()) != 0) {
            dprintf(STDERR_FILENO, "%schdir %s: %s\n", kLaunchSentinel, cwd.c_str(),
                    strerror(errno));
            _exit(126);
        }
        struct rlimit no_core = {0, 0};
        setrlimit(RLIMIT_CORE, &no_core);

        std::vector<char*> raw;
        raw.reserve(argv.size() + 1);
        for (const auto& arg : argv) raw.push_back(const_cast<char*>(arg.c_str()));
        raw.push_back(nullptr);
        execvp(raw[0], raw.data());
        dprintf(STDERR_FILENO, "%s%s: %s\n", kLaunchSentinel, raw[0], strerror(errno));
        _exit(126);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);
    set_nonblocking(out_pipe[0]);
    set_nonblocking(err_pipe[0]);

    bool out_open = true, err_open = true;
    bool child_exited = false;
    int wait_status = 0;

    const auto deadline = start + std::chrono::milliseconds(timeout_ms);
    while (true) {
        if (!child_exited) {
            pid_t r = waitpid(pid, &wait_status, WNOHANG);
            if (r == pid) child_exited = true;
        }

        struct pollfd fds[2];
        nfds_t nfds = 0;
        if (out_open) fds[nfds++] = {out_pipe[0], POLLIN, 0};
        if (err_open) fds[nfds++] = {err_pipe[0], POLLIN, 0};

        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline && !child_exited) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            waitpid(pid, &wait_status, 0);
            child_exited = true;
            // Grab whatever made it into the pipes before the kill.
            if (out_open) drain_fd(out_pipe[0], result.out, output_cap, result.out_truncated);
            if (err_open) drain_fd(err_pipe[0], result.err, output_cap, result.err_truncated);
            break;
        }

        if (nfds == 0) {
            if (child_exited) break;
            // Pipes closed but child alive (it closed stdout/stderr itself);
            // sleep briefly and re-check the deadline.
            usleep(2000);
            continue;
        }

        int wait_chunk = 50;
        if (!child_exited) {
            auto remaining =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
            wait_chunk = static_cast<int>(std::min<long long>(wait_chunk, remaining + 1));
        }
        poll(fds, nfds, wait_chunk);

        if (out_open) out_open = drain_fd(out_pipe[0], result.out, output_cap, result.out_truncated);
        if (err_open) err_open = drain_fd(err_pipe[0], result.err, output_cap, result.err_truncated);
        if (child_exited && !out_open && !err_open) break;
    }

    close(out_pipe[0]);
    close(err_pipe[0]);

    result.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    if (WIFEXITED(wait_status)) result.exit_code = WEXITSTATUS(wait_status);
    if (WIFSIGNALED(wait_status)) {
        result.term_signal = WTERMSIG(wait_status);
        result.exit_code = 128 + result.term_signal;
    }

    if (result.out_truncated) result.out += kTruncationMarker;
    if (result.err_truncated) result.err += kTruncationMarker;

    if (!result.timed_out && result.exit_code == 126 &&
        result.err.find(kLaunchSentinel) != std::string::npos) {
        result.launch_failed = true;
        result.launch_error = util::trim(result.err);
    }
    return result;
}

}  // namespace detail

ExecOutcome execute(const GenSample& sample, const ToolchainSpec& spec,
                    const std::filesystem::path& workdir, bool keep_workdir) {
    const WrappedSource src = wrap_source(sample.code, sample.lang, spec);
    util::write_file(workdir / src.filename, src.text);

    ExecOutcome outcome;
    struct Cleanup {
        const std::filesystem::path& dir;
        bool keep;
        ~Cleanup() {
            if (!keep) {
                std::error_code ec;
                std::filesystem::remove_all(dir, ec);
            }
        }
    } cleanup{workdir, keep_workdir};

    if (spec.compile_cmd) {
        auto compile = detail::run_command(detail::split_command(substitute(*spec.compile_cmd, src)),
                                           workdir, spec.compile_timeout_ms, spec.output_cap);
        if (compile.launch_failed) throw ToolchainMissingError(spec.lang, compile.launch_error);
        outcome.wall_ms += compile.wall_ms;
        if (compile.timed_out || compile.exit_code != 0) {
            outcome.status = ExecStatus::CompileError;
            std::error_code cec;
            auto canon = std::filesystem::weakly_canonical(workdir, cec);
            outcome.stderr_text = util::replace_all(
                compile.err, (cec ? workdir : canon).string() + "/", "");
            outcome.stderr_truncated = compile.err_truncated;
            outcome.exit_code = compile.exit_code;
            outcome.term_signal = compile.term_signal;
            return outcome;
        }
    }

    auto run = detail::run_command(detail::split_command(substitute(spec.run_cmd, src)), workdir,
                                   spec.timeout_ms, spec.output_cap);
    if (run.launch_failed) throw ToolchainMissingError(spec.lang, run.launch_error);

    // Interpreters like node print absolute script paths in stack traces;
    // scrub the per-run workdir so captured output is stable across runs.
    std::error_code ec;
    auto canon = std::filesystem::weakly_canonical(workdir, ec);
    const std::string prefix = (ec ? workdir : canon).string();
    auto scrub = [&prefix](std::string text) {
        text = util::replace_all(std::move(text), prefix + "/", "");
        return util::replace_all(std::move(text), prefix, ".");
    };
    outcome.stdout_text = scrub(run.out);
    outcome.stderr_text = scrub(run.err);
    outcome.stdout_truncated = run.out_truncated;
    outcome.stderr_truncated = run.err_truncated;
    outcome.exit_code = run.exit_code;
    outcome.term_signal = run.term_signal;
    outcome.wall_ms += run.wall_ms;
    if (run.timed_out)
        outcome.status = ExecStatus::Timeout;
    else if (run.exit_code == 0)
        outcome.status = ExecStatus::Completed;
    else
        outcome.status = ExecStatus::RuntimeError;
    return outcome;
}

std::vector<ToolchainProbe> probe_toolchains(const ToolchainSet& specs) {
    std::vector<ToolchainProbe> report;
    for (const auto& [lang, spec] : specs) {
        ToolchainProbe probe;
        probe.lang = lang;
        auto tmp = std::filesystem::temp_directory_path();
        auto run = detail::run_command(detail::split_command(spec.probe_cmd), tmp, 10000, 4096);
        probe.present = !run.launch_failed && !run.timed_out && run.exit_code == 0;
        if (probe.present) {
            for (const auto& line : util::split_lines(run.out + run.err)) {
                if (!util::trim(line).empty()) {
                    probe.version = util::trim(line);
                    break;
                }
            }
        }
        report.push_back(std::move(probe));
    }
    return report;
}

WorkdirGuard::WorkdirGuard(const std::filesystem::path& base, bool keep) : keep_(keep) {
    static std::atomic<uint64_t> counter{0};
    std::filesystem::create_directories(base);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        auto candidate = base / ("job-" + std::to_string(::getpid()) + "-" +
                                 std::to_string(counter.fetch_add(1)));
        std::error_code ec;
        if (std::filesystem::create_directory(candidate, ec)) {
            dir_ = candidate;
            return;
        }
    }
    throw std::runtime_error("cannot create unique workdir under " + base.string());
}

WorkdirGuard::~WorkdirGuard() {
    if (!keep_ && !dir_.empty()) {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
}

}  // namespace multipot
