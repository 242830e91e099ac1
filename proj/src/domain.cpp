#include "multipot/domain.hpp"

#include <cmath>
#include <stdexcept>

#include "multipot/util.hpp"

namespace multipot {

namespace {

constexpr std::array<LangInfo, 5> kLangTable = {{
    {Lang::Python, "python", LangKind::Dynamic, 2},
    {Lang::R, "r", LangKind::Dynamic, 1},
    {Lang::Cpp, "cpp", LangKind::Static, 3},
    {Lang::Java, "java", LangKind::Static, 4},
    {Lang::JavaScript, "javascript", LangKind::Dynamic, 5},
}};

constexpr std::array<TaskInfo, 5> kTaskTable = {{
    {Task::Appl, "appl", 3, AnswerKind::Numeric, 4415},
    {Task::Math, "math", 3, AnswerKind::Numeric, 4469},
    {Task::Date, "date", 6, AnswerKind::String, 369},
    {Task::Tabular, "tabular", 3, AnswerKind::String, 149},
    {Task::Spatial, "spatial", 3, AnswerKind::String, 2000},
}};

}  // namespace

const std::array<LangInfo, 5>& all_langs() { return kLangTable; }

const LangInfo& lang_info(Lang lang) {
    for (const auto& info : kLangTable)
        if (info.id == lang) return info;
    throw std::logic_error("unknown language");
}

std::string_view lang_name(Lang lang) { return lang_info(lang).name; }

LangKind lang_kind(Lang lang) { return lang_info(lang).kind; }

std::optional<Lang> lang_from_name(std::string_view name) {
    std::string lowered = util::to_lower(util::trim(name));
    if (lowered == "c++") lowered = "cpp";
    if (lowered == "js") lowered = "javascript";
    for (const auto& info : kLangTable)
        if (info.name == lowered) return info.id;
    return std::nullopt;
}

const std::array<TaskInfo, 5>& all_tasks() { return kTaskTable; }

const TaskInfo& task_info(Task task) {
    for (const auto& info : kTaskTable)
        if (info.id == task) return info;
    throw std::logic_error("unknown task");
}

std::string_view task_name(Task task) { return task_info(task).name; }

int task_shots(Task task) { return task_info(task).shots; }

AnswerKind task_answer_kind(Task task) { return task_info(task).answer_kind; }

std::optional<Task> task_from_name(std::string_view name) {
    std::string lowered = util::to_lower(util::trim(name));
    if (lowered == "appl.") lowered = "appl";
    if (lowered == "table") lowered = "tabular";
    for (const auto& info : kTaskTable)
        if (info.name == lowered) return info.id;
    return std::nullopt;
}

Answer Answer::number(double value) {
    if (!std::isfinite(value)) return Answer::error();
    Answer a;
    a.kind = Kind::Numeric;
    a.num = value;
    return a;
}

Answer Answer::text(std::string_view raw) {
    Answer a;
    a.kind = Kind::String;
    a.str = canonicalize_string(raw);
    return a;
}

Answer Answer::error() {
    Answer a;
    a.kind = Kind::Error;
    return a;
}

std::string canonicalize_string(std::string_view raw) {
    // Lowercase and collapse internal whitespace runs first; collapsing can
    // expose quotes at the edges, so edge stripping runs to a fixpoint.
    std::string s;
    s.reserve(raw.size());
    bool in_ws = false;
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_ws = true;
            continue;
        }
        if (in_ws && !s.empty()) s.push_back(' ');
        in_ws = false;
        s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }

    auto is_quote = [](char c) { return c == '"' || c == '\''; };
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        std::string trimmed = util::trim(s);
        if (trimmed != s) {
            s = std::move(trimmed);
            changed = true;
            continue;
        }
        if (s.size() >= 2 && is_quote(s.front()) && s.back() == s.front()) {
            s = s.substr(1, s.size() - 2);
            changed = true;
            continue;
        }
        if (!s.empty() && is_quote(s.front())) {
            s.erase(s.begin());
            changed = true;
            continue;
        }
        if (!s.empty() && is_quote(s.back())) {
            s.pop_back();
            changed = true;
        }
    }
    return s;
}

bool answer_equiv(const Answer& a, const Answer& b, double tol) {
    if (a.kind == Answer::Kind::Error || b.kind == Answer::Kind::Error) return false;
    if (a.kind != b.kind) return false;
    if (a.kind == Answer::Kind::Numeric) return std::fabs(a.num - b.num) < tol;
    return a.str == b.str;
}

}  // namespace multipot
