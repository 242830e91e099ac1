#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "multipot/domain.hpp"

namespace multipot {

struct TaskSetFile {
    Task task = Task::Appl;
    std::vector<QuestionRecord> records;
    std::string source_note;
};

struct MalformedRecordError : std::runtime_error {
    MalformedRecordError(const std::string& what, int line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    int line;
};

struct AnswerKindMismatchError : std::runtime_error {
    explicit AnswerKindMismatchError(const std::string& qid)
        : std::runtime_error("answer kind mismatch for qid " + qid), qid(qid) {}
    std::string qid;
};

struct LoadOptions {
    bool allow_empty = false;
    // Expected record count from the manifest; checked after load when set.
    std::optional<int> expected_count;
};

// Line-delimited JSON records with fields qid / question / answer /
// answer_kind. Numeric tasks get numeric ground truths, string tasks get
// canonical strings.
TaskSetFile load_taskset(const std::filesystem::path& path, Task task,
                         const LoadOptions& opts = {});

void save_taskset(const TaskSetFile& set, const std::filesystem::path& path);

// Manifest: task name -> declared record count.
std::map<Task, int> load_manifest(const std::filesystem::path& path);

// A record whose answer is still raw text (MATH-style LaTeX).
struct RawRecord {
    std::string qid;
    std::string question;
    std::string answer;
};

std::vector<RawRecord> load_raw_records(const std::filesystem::path& path);

// Parses a LaTeX answer into a single real number. Supports integers,
// decimals, \frac (and \dfrac/\tfrac), unary minus and a trailing percent
// sign; anything else is rejected.
std::optional<double> parse_latex_number(std::string_view answer);

struct MathFilterResult {
    // Kept records have their answer rewritten as a canonical decimal, so
    // the output is loadable as a numeric taskset and the filter is
    // idempotent.
    std::vector<RawRecord> kept;
    std::vector<std::pair<std::string, std::string>> dropped;  // (qid, reason)
};

MathFilterResult filter_math(const std::vector<RawRecord>& records);

}  // namespace multipot
