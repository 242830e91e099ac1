#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace multipot {

// The five target languages. Python, R and JavaScript are dynamic;
// C++ and Java are static.
enum class Lang { Python, R, Cpp, Java, JavaScript };

enum class LangKind { Dynamic, Static };

struct LangInfo {
    Lang id;
    std::string_view name;       // canonical lowercase name used in files/CLI
    LangKind kind;
    int data_amount_rank;        // 1 = least pretraining data ... 5 = most; overridable per config
};

const std::array<LangInfo, 5>& all_langs();
const LangInfo& lang_info(Lang lang);
std::string_view lang_name(Lang lang);
LangKind lang_kind(Lang lang);
std::optional<Lang> lang_from_name(std::string_view name);

// Reasoning tasks. Shot counts and answer kinds are fixed per task.
enum class Task { Appl, Math, Date, Tabular, Spatial };

enum class AnswerKind { Numeric, String };

struct TaskInfo {
    Task id;
    std::string_view name;
    int shots;
    AnswerKind answer_kind;
    int paper_question_count;    // declared size of the original dataset
};

const std::array<TaskInfo, 5>& all_tasks();
const TaskInfo& task_info(Task task);
std::string_view task_name(Task task);
int task_shots(Task task);
AnswerKind task_answer_kind(Task task);
std::optional<Task> task_from_name(std::string_view name);

// A graded answer. Exactly one payload is meaningful per kind; Error means
// "no gradable answer" and never compares equal to anything.
struct Answer {
    enum class Kind { Numeric, String, Error };

    Kind kind = Kind::Error;
    double num = 0.0;            // Numeric only; always finite
    std::string str;             // String only; already canonical

    static Answer number(double value);
    static Answer text(std::string_view raw);  // canonicalizes
    static Answer error();

    bool is_error() const { return kind == Kind::Error; }
    bool operator==(const Answer&) const = default;
};

// Trims surrounding whitespace and quotes, lowercases, collapses internal
// whitespace runs. Idempotent.
std::string canonicalize_string(std::string_view raw);

// Numeric answers match when |a-b| < tol (strictly); string answers match
// exactly on the canonical form. Mixed kinds or any Error never match.
bool answer_equiv(const Answer& a, const Answer& b, double tol = 1e-3);

constexpr double kDefaultTolerance = 1e-3;

struct QuestionRecord {
    Task task;
    std::string qid;
    std::string text;
    Answer ground_truth;
};

enum class SampleOrigin { Live, Replay };

// One generated PoT. cum_logprob is the sum of token log-probabilities.
struct GenSample {
    Lang lang;
    std::string code;
    double cum_logprob = 0.0;
    int n_tokens = 0;
    SampleOrigin origin = SampleOrigin::Live;
};

}  // namespace multipot
