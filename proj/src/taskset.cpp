#include "multipot/taskset.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "multipot/util.hpp"

namespace multipot {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Strict real-number grammar for ground truths: sign, digits, optional
// decimal point and exponent. The whole string must be consumed.
std::optional<double> parse_strict_real(std::string_view text) {
    std::string s = util::trim(text);
    if (s.empty()) return std::nullopt;
    size_t i = 0;
    if (s[i] == '+' || s[i] == '-') ++i;
    size_t int_digits = 0, frac_digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++int_digits;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++frac_digits;
    }
    if (int_digits + frac_digits == 0) return std::nullopt;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        size_t exp_digits = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++exp_digits;
        if (exp_digits == 0) return std::nullopt;
    }
    if (i != s.size()) return std::nullopt;
    // strtod, not from_chars: the grammar above allows a leading '+'.
    char* end = nullptr;
    double value = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::string shortest_decimal(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

}  // namespace

TaskSetFile load_taskset(const std::filesystem::path& path, Task task,
                         const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw MalformedRecordError("cannot open " + path.string(), 0);

    TaskSetFile set;
    set.task = task;
    std::string line;
    int lineno = 0;
    std::map<std::string, int> seen_qids;
    const AnswerKind kind = task_answer_kind(task);

    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw MalformedRecordError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        if (!rec.is_object() || !rec.contains("qid") || !rec.contains("question") ||
            !rec.contains("answer"))
            throw MalformedRecordError("missing qid/question/answer field", lineno);

        QuestionRecord q;
        q.task = task;
        q.qid = rec["qid"].get<std::string>();
        q.text = rec["question"].get<std::string>();
        if (auto [it, inserted] = seen_qids.emplace(q.qid, lineno); !inserted)
            throw MalformedRecordError("duplicate qid " + q.qid +
                                           " (first at line " + std::to_string(it->second) + ")",
                                       lineno);

        if (rec.contains("answer_kind")) {
            const std::string declared = rec["answer_kind"].get<std::string>();
            const bool declared_numeric = declared == "numeric";
            if (declared_numeric != (kind == AnswerKind::Numeric))
                throw AnswerKindMismatchError(q.qid);
        }

        if (kind == AnswerKind::Numeric) {
            std::string raw = rec["answer"].is_string()
                                  ? rec["answer"].get<std::string>()
                                  : rec["answer"].dump();
            auto value = parse_strict_real(raw);
            if (!value) throw AnswerKindMismatchError(q.qid);
            q.ground_truth = Answer::number(*value);
        } else {
            if (!rec["answer"].is_string()) throw AnswerKindMismatchError(q.qid);
            q.ground_truth = Answer::text(rec["answer"].get<std::string>());
        }
        set.records.push_back(std::move(q));
    }

    if (set.records.empty() && !opts.allow_empty)
        throw MalformedRecordError("empty task set (pass --allow-empty to accept)", lineno);
    if (opts.expected_count && static_cast<int>(set.records.size()) != *opts.expected_count)
        throw MalformedRecordError(
            "record count " + std::to_string(set.records.size()) +
                " does not match manifest count " + std::to_string(*opts.expected_count),
            lineno);
    return set;
}

void save_taskset(const TaskSetFile& set, const std::filesystem::path& path) {
    std::string out;
    for (const auto& q : set.records) {
        ordered_json rec;
        rec["qid"] = q.qid;
        rec["question"] = q.text;
        if (q.ground_truth.kind == Answer::Kind::Numeric) {
            rec["answer"] = shortest_decimal(q.ground_truth.num);
            rec["answer_kind"] = "numeric";
        } else {
            rec["answer"] = q.ground_truth.str;
            rec["answer_kind"] = "string";
        }
        out += rec.dump();
        out += '\n';
    }
    util::write_file(path, out);
}

std::map<Task, int> load_manifest(const std::filesystem::path& path) {
    json m = json::parse(util::read_file(path));
    std::map<Task, int> counts;
    for (auto it = m.begin(); it != m.end(); ++it) {
        auto task = task_from_name(it.key());
        if (!task) throw std::runtime_error("manifest names unknown task: " + it.key());
        counts[*task] = it.value().get<int>();
    }
    return counts;
}

std::vector<RawRecord> load_raw_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MalformedRecordError("cannot open " + path.string(), 0);
    std::vector<RawRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw MalformedRecordError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        if (!rec.contains("qid") || !rec.contains("question") || !rec.contains("answer"))
            throw MalformedRecordError("missing qid/question/answer field", lineno);
        records.push_back({rec["qid"].get<std::string>(), rec["question"].get<std::string>(),
                           rec["answer"].get<std::string>()});
    }
    return records;
}

std::optional<double> parse_latex_number(std::string_view answer) {
    std::string s = util::trim(answer);
    // Strip math-mode delimiters and an outer brace group.
    if (s.size() >= 2 && s.front() == '$' && s.back() == '$')
        s = util::trim(s.substr(1, s.size() - 2));
    if (s.size() >= 2 && s.front() == '{' && s.back() == '}')
        s = util::trim(s.substr(1, s.size() - 2));
    if (s.empty()) return std::nullopt;

    bool negative = false;
    if (s.front() == '-') {
        negative = true;
        s = util::trim(s.substr(1));
    }

    // Trailing percent: "50\%" or "50%" denotes the number 50.
    bool percent = false;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "\\%") == 0) {
        percent = true;
        s = util::trim(s.substr(0, s.size() - 2));
    } else if (!s.empty() && s.back() == '%') {
        percent = true;
        s = util::trim(s.substr(0, s.size() - 1));
    }
    (void)percent;  // the numeric value keeps the printed magnitude

    double value = 0.0;
    for (const char* frac : {"\\frac", "\\dfrac", "\\tfrac"}) {
        if (util::starts_with(s, frac)) {
            std::string rest = util::trim(s.substr(std::string(frac).size()));
            // Expect {num}{den} with plain numbers inside.
            if (rest.size() < 5 || rest.front() != '{') return std::nullopt;
            size_t close1 = rest.find('}');
            if (close1 == std::string::npos) return std::nullopt;
            std::string num_text = rest.substr(1, close1 - 1);
            std::string tail = util::trim(rest.substr(close1 + 1));
            if (tail.empty() || tail.front() != '{' || tail.back() != '}') return std::nullopt;
            std::string den_text = tail.substr(1, tail.size() - 2);
            auto num = parse_strict_real(num_text);
            auto den = parse_strict_real(den_text);
            if (!num || !den || *den == 0.0) return std::nullopt;
            value = *num / *den;
            return negative ? -value : value;
        }
    }

    auto plain = parse_strict_real(s);
    if (!plain) return std::nullopt;
    value = *plain;
    return negative ? -value : value;
}

MathFilterResult filter_math(const std::vector<RawRecord>& records) {
    MathFilterResult result;
    for (const auto& rec : records) {
        auto value = parse_latex_number(rec.answer);
        if (!value) {
            result.dropped.emplace_back(rec.qid, "answer is not a single number: " + rec.answer);
            continue;
        }
        RawRecord kept = rec;
        kept.answer = shortest_decimal(*value);
        result.kept.push_back(std::move(kept));
    }
    return result;
}

}  // namespace multipot
