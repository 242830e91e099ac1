#include "multipot/answers.hpp"

#include <cstdlib>
#include <cmath>

#include "multipot/util.hpp"

namespace multipot {

namespace {

// Shipped pattern table; data/error_patterns.txt carries the same content
// for field tuning. A unit test keeps the two in sync.
constexpr const char* kBuiltinPatterns = R"(# Ordered diagnostic patterns per language. First match wins; a rule matches
# when its regex is found in the captured stderr, which includes a
# synthesized "signal: SIGxxx" line when the process died on a signal.

[python]
ZeroDivisionError -> division_by_zero
RecursionError|maximum recursion depth -> time_limit
NameError -> undefined_identifier
ModuleNotFoundError|ImportError -> undefined_identifier
SyntaxError|IndentationError|TabError -> compile_error
ValueError: (invalid literal|could not convert) -> illegal_output
TypeError|unsupported operand -> variable_type_error

[r]
object '.+' not found -> undefined_identifier
could not find function -> undefined_identifier
there is no package called -> undefined_identifier
division by zero -> division_by_zero
infinite recursion|C stack usage .*(close to|near) the limit -> time_limit
unexpected (symbol|end of input|'.+'|numeric constant|string constant) -> compile_error
non-numeric argument|invalid 'type'|cannot be coerced -> variable_type_error

[cpp]
signal: SIGFPE -> division_by_zero
division by zero -> division_by_zero
redefinition of|redeclared as|previously declared|previously defined -> redeclaration
was not declared in this scope|use of undeclared identifier -> undefined_identifier
invalid operands|no match for .operator|cannot convert .+ to -> variable_type_error

[java]
ArithmeticException -> division_by_zero
StackOverflowError -> time_limit
error: cannot find symbol -> undefined_identifier
is already defined in -> redeclaration
error: incompatible types|error: bad operand type -> variable_type_error
NumberFormatException -> illegal_output

[javascript]
has already been declared -> redeclaration
Maximum call stack size exceeded -> time_limit
RangeError: Division by zero -> division_by_zero
ReferenceError -> undefined_identifier
SyntaxError -> compile_error
TypeError -> variable_type_error
)";

std::string signal_name(int sig) {
    switch (sig) {
        case 4: return "SIGILL";
        case 6: return "SIGABRT";
        case 7: return "SIGBUS";
        case 8: return "SIGFPE";
        case 9: return "SIGKILL";
        case 11: return "SIGSEGV";
        case 24: return "SIGXCPU";
        case 25: return "SIGXFSZ";
        default: return "SIG" + std::to_string(sig);
    }
}

std::optional<double> parse_numeric_token(std::string token) {
    for (const char* sym : {",", "$", "€", "£"})
        token = util::replace_all(std::move(token), sym, "");
    token = util::trim(token);
    if (!token.empty() && token.back() == '%') token.pop_back();
    token = util::trim(token);
    if (token.empty()) return std::nullopt;

    size_t i = 0;
    if (token[i] == '+' || token[i] == '-') ++i;
    size_t digits = 0;
    while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i, ++digits;
    if (i < token.size() && token[i] == '.') {
        ++i;
        while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i, ++digits;
    }
    if (digits == 0) return std::nullopt;
    if (i < token.size() && (token[i] == 'e' || token[i] == 'E')) {
        ++i;
        if (i < token.size() && (token[i] == '+' || token[i] == '-')) ++i;
        size_t exp_digits = 0;
        while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i, ++exp_digits;
        if (exp_digits == 0) return std::nullopt;
    }
    if (i != token.size()) return std::nullopt;

    // strtod, not from_chars: the grammar above allows a leading '+'.
    char* end = nullptr;
    double value = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

}  // namespace

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::AC: return "AC";
        case Verdict::WA: return "WA";
        case Verdict::RE: return "RE";
    }
    return "??";
}

std::string_view re_type_name(REType t) {
    switch (t) {
        case REType::Redeclaration: return "redeclaration";
        case REType::DivisionByZero: return "division_by_zero";
        case REType::IllegalOutput: return "illegal_output";
        case REType::TimeLimit: return "time_limit";
        case REType::CompileError: return "compile_error";
        case REType::UndefinedIdentifier: return "undefined_identifier";
        case REType::VariableTypeError: return "variable_type_error";
        case REType::Other: return "other";
    }
    return "other";
}

std::optional<REType> re_type_from_name(std::string_view name) {
    for (REType t : {REType::Redeclaration, REType::DivisionByZero, REType::IllegalOutput,
                     REType::TimeLimit, REType::CompileError, REType::UndefinedIdentifier,
                     REType::VariableTypeError, REType::Other})
        if (re_type_name(t) == name) return t;
    return std::nullopt;
}

PatternTable PatternTable::parse(const std::string& text, const std::string& origin) {
    PatternTable table;
    std::optional<Lang> current;
    int lineno = 0;
    for (const auto& raw : util::split_lines(text)) {
        ++lineno;
        std::string line = util::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            auto lang = lang_from_name(line.substr(1, line.size() - 2));
            if (!lang)
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": unknown language header " + line);
            current = *lang;
            continue;
        }
        auto arrow = line.rfind(" -> ");
        if (arrow == std::string::npos || !current)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": expected '<regex> -> <subtype>'");
        Rule rule;
        rule.pattern = util::trim(line.substr(0, arrow));
        auto subtype = re_type_from_name(util::trim(line.substr(arrow + 4)));
        if (!subtype)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": unknown subtype in: " + line);
        rule.subtype = *subtype;
        rule.re = std::regex(rule.pattern);
        table.rules_[*current].push_back(std::move(rule));
    }
    return table;
}

PatternTable PatternTable::load(const std::filesystem::path& path) {
    return parse(util::read_file(path), path.string());
}

PatternTable PatternTable::builtin() { return parse(kBuiltinPatterns, "<builtin>"); }

std::optional<REType> PatternTable::match(Lang lang, const std::string& diagnostics) const {
    auto it = rules_.find(lang);
    if (it == rules_.end()) return std::nullopt;
    for (const auto& rule : it->second)
        if (std::regex_search(diagnostics, rule.re)) return rule.subtype;
    return std::nullopt;
}

Answer extract_answer(const ExecOutcome& outcome, AnswerKind kind) {
    std::string last_line;
    for (const auto& line : util::split_lines(outcome.stdout_text)) {
        std::string trimmed = util::trim(line);
        if (!trimmed.empty()) last_line = std::move(trimmed);
    }
    if (last_line.empty()) return Answer::error();

    // R's print() prefixes vector output with an index like "[1] ".
    if (last_line.size() > 3 && last_line[0] == '[') {
        size_t close = last_line.find(']');
        if (close != std::string::npos && close + 1 < last_line.size()) {
            bool all_digits = close > 1;
            for (size_t i = 1; i < close; ++i)
                if (!std::isdigit(static_cast<unsigned char>(last_line[i]))) all_digits = false;
            if (all_digits) last_line = util::trim(last_line.substr(close + 1));
        }
    }

    if (kind == AnswerKind::Numeric) {
        std::string token = last_line;
        if (token.size() >= 2 && ((token.front() == '"' && token.back() == '"') ||
                                  (token.front() == '\'' && token.back() == '\'')))
            token = util::trim(token.substr(1, token.size() - 2));
        auto value = parse_numeric_token(token);
        return value ? Answer::number(*value) : Answer::error();
    }
    Answer a = Answer::text(last_line);
    if (a.str.empty()) return Answer::error();
    return a;
}

Classification classify(const ExecOutcome& outcome, const Answer& answer,
                        const Answer& ground_truth, double tol, Lang lang,
                        const PatternTable& patterns) {
    Classification cls;
    if (outcome.status == ExecStatus::Completed && !answer.is_error()) {
        cls.verdict = answer_equiv(answer, ground_truth, tol) ? Verdict::AC : Verdict::WA;
        return cls;
    }
    cls.verdict = Verdict::RE;
    cls.re_subtype = classify_re(outcome, lang, patterns);
    return cls;
}

REType classify_re(const ExecOutcome& outcome, Lang lang, const PatternTable& patterns) {
    if (outcome.status == ExecStatus::Timeout) return REType::TimeLimit;
    // Exit 0 but nothing gradable on stdout.
    if (outcome.status == ExecStatus::Completed) return REType::IllegalOutput;

    std::string diagnostics = outcome.stderr_text;
    if (outcome.term_signal != 0)
        diagnostics += "\nsignal: " + signal_name(outcome.term_signal);

    if (auto subtype = patterns.match(lang, diagnostics)) return *subtype;
    if (outcome.status == ExecStatus::CompileError) return REType::CompileError;
    return REType::Other;
}

CandidateAnswer make_candidate(GenSample sample, int sample_index, const ExecOutcome& outcome,
                               const Answer& ground_truth, AnswerKind kind, double tol,
                               const PatternTable& patterns) {
    CandidateAnswer cand;
    cand.sample_index = sample_index;
    cand.outcome = outcome;
    cand.answer =
        outcome.status == ExecStatus::Completed ? extract_answer(outcome, kind) : Answer::error();
    Classification cls =
        classify(outcome, cand.answer, ground_truth, tol, sample.lang, patterns);
    cand.verdict = cls.verdict;
    cand.re_subtype = cls.re_subtype;
    cand.sample = std::move(sample);
    return cand;
}

CandidateAnswer make_illegal_candidate(GenSample sample, int sample_index,
                                       const std::string& reason) {
    CandidateAnswer cand;
    cand.sample_index = sample_index;
    cand.answer = Answer::error();
    cand.outcome.status = ExecStatus::RuntimeError;
    cand.outcome.stderr_text = reason;
    cand.outcome.exit_code = -1;
    cand.verdict = Verdict::RE;
    cand.re_subtype = REType::IllegalOutput;
    cand.sample = std::move(sample);
    return cand;
}

}  // namespace multipot
