#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "multipot/domain.hpp"
#include "multipot/executor.hpp"

namespace multipot {

struct DemoShot {
    std::string question;
    std::string answer_text;  // expected output of the example PoT
    std::string code;
};

struct Demonstration {
    Task task = Task::Appl;
    Lang lang = Lang::Python;
    std::vector<DemoShot> shots;
};

struct MissingDemonstrationError : std::runtime_error {
    MissingDemonstrationError(Task task, Lang lang)
        : std::runtime_error("no demonstration for (" + std::string(task_name(task)) + ", " +
                             std::string(lang_name(lang)) + ")"),
          task(task),
          lang(lang) {}
    Task task;
    Lang lang;
};

// Read-only after load; safe for concurrent reads.
class DemoLibrary {
public:
    static DemoLibrary load_dir(const std::filesystem::path& dir);
    static Demonstration parse_file(const std::filesystem::path& path);

    void add(Demonstration demo);
    const Demonstration* find(Task task, Lang lang) const;
    std::vector<const Demonstration*> all() const;

private:
    std::map<std::pair<Task, Lang>, Demonstration> demos_;
};

struct PromptTemplate {
    std::string preamble;
    std::string shot_separator = "\n\n";
    std::string question_header = "Q: ";
    std::vector<std::string> stop_sequences = {"\nQ:", "\n\n\n"};
};

PromptTemplate load_prompt_template(const std::filesystem::path& path);

// preamble + shots joined by the separator + question header + question.
// Pure function of its arguments.
std::string build_prompt(Task task, Lang lang, const QuestionRecord& q,
                         const DemoLibrary& demos, const PromptTemplate& tmpl);

struct DemoValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;  // e.g. execution skipped, toolchain absent
    bool ok() const { return violations.empty(); }
};

// Checks shot counts, cross-language question identity, and that every
// example PoT executes to its expected answer. Languages whose toolchain is
// absent are skipped with a warning, never failed.
DemoValidationReport validate_demo_library(const DemoLibrary& demos, const ToolchainSet& toolchains,
                                           const std::set<Lang>& available_langs,
                                           const std::filesystem::path& workdir_base);

}  // namespace multipot
