#include <doctest.h>

#include <json.hpp>
#include <regex>

#include "multipot/answers.hpp"
#include "multipot/util.hpp"
#include "test_support.hpp"

using namespace multipot;
namespace ts = multipot::testsupport;

namespace {

ExecOutcome completed_with(const std::string& stdout_text) {
    ExecOutcome o;
    o.status = ExecStatus::Completed;
    o.exit_code = 0;
    o.stdout_text = stdout_text;
    return o;
}

ExecOutcome failed_with(const std::string& stderr_text, ExecStatus status = ExecStatus::RuntimeError,
                        int signal = 0) {
    ExecOutcome o;
    o.status = status;
    o.exit_code = status == ExecStatus::Timeout ? 137 : 1;
    o.stderr_text = stderr_text;
    o.term_signal = signal;
    return o;
}

// Reference-grammar oracle for the numeric extraction contract, written
// against the documented rules rather than the implementation: last line ->
// strip "[n]" prefix -> strip one symmetric quote pair -> drop currency and
// commas -> optional trailing percent -> strict real grammar.
std::optional<double> reference_numeric_parse(std::string line) {
    line = util::trim(line);
    static const std::regex r_prefix(R"(^\[\d+\]\s*)");
    line = std::regex_replace(line, r_prefix, "");
    if (line.size() >= 2 && ((line.front() == '"' && line.back() == '"') ||
                             (line.front() == '\'' && line.back() == '\'')))
        line = util::trim(line.substr(1, line.size() - 2));
    for (const char* sym : {",", "$", "€", "£"})
        line = util::replace_all(line, sym, "");
    line = util::trim(line);
    if (!line.empty() && line.back() == '%') line.pop_back();
    line = util::trim(line);
    static const std::regex grammar(R"(^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$)");
    if (!std::regex_match(line, grammar)) return std::nullopt;
    return std::strtod(line.c_str(), nullptr);
}

}  // namespace

TEST_CASE("extract_answer examples") {
    CHECK(extract_answer(completed_with("working...\n1,234.5\n"), AnswerKind::Numeric).num ==
          doctest::Approx(1234.5));
    CHECK(extract_answer(completed_with(""), AnswerKind::Numeric).is_error());
    CHECK(extract_answer(completed_with(""), AnswerKind::String).is_error());
    CHECK(extract_answer(completed_with("The answer is 7\n7"), AnswerKind::Numeric).num ==
          doctest::Approx(7));
    CHECK(extract_answer(completed_with("The answer is 7"), AnswerKind::Numeric).is_error());
    CHECK(extract_answer(completed_with("[1] \"05/01/2021\""), AnswerKind::String).str ==
          "05/01/2021");
    CHECK(extract_answer(completed_with("$8\n"), AnswerKind::Numeric).num == doctest::Approx(8));
    CHECK(extract_answer(completed_with("Yes\n\n\n"), AnswerKind::String).str == "yes");
}

TEST_CASE("extract_answer agrees with the reference grammar on the fixture file") {
    auto path = ts::data_dir() / "fixtures" / "parse" / "stdout_lines.txt";
    int checked = 0;
    for (const auto& raw : util::split_lines(util::read_file(path))) {
        if (util::trim(raw).empty()) continue;
        auto j = nlohmann::json::parse(raw);
        const std::string line = j["line"].get<std::string>();
        Answer got = extract_answer(completed_with(line + "\n"), AnswerKind::Numeric);
        auto expected = reference_numeric_parse(line);
        if (expected) {
            REQUIRE_MESSAGE(got.kind == Answer::Kind::Numeric, "line: [", line, "]");
            CHECK_MESSAGE(got.num == doctest::Approx(*expected), "line: [", line, "]");
        } else {
            CHECK_MESSAGE(got.is_error(), "line: [", line, "] parsed to ", got.num);
        }
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("extract_answer round-trips numeric formatting") {
    std::uint64_t state = 5150;
    for (int trial = 0; trial < 200; ++trial) {
        double value =
            static_cast<double>(static_cast<long long>(util::splitmix64(state) % 2000000) - 1000000) /
            997.0;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f\n", value);
        Answer parsed = extract_answer(completed_with(buf), AnswerKind::Numeric);
        REQUIRE(parsed.kind == Answer::Kind::Numeric);
        CHECK(answer_equiv(parsed, Answer::number(value), 1e-3));
    }
}

TEST_CASE("classify matrix") {
    auto patterns = PatternTable::builtin();
    const Answer gt = Answer::number(7);

    auto ok = classify(completed_with("7\n"), Answer::number(7), gt, 1e-3, Lang::Python, patterns);
    CHECK(ok.verdict == Verdict::AC);
    CHECK(!ok.re_subtype);

    auto wa = classify(completed_with("5\n"), Answer::number(5), gt, 1e-3, Lang::Python, patterns);
    CHECK(wa.verdict == Verdict::WA);

    auto tle = classify(failed_with("", ExecStatus::Timeout), Answer::error(), gt, 1e-3,
                        Lang::Python, patterns);
    CHECK(tle.verdict == Verdict::RE);
    CHECK(tle.re_subtype == REType::TimeLimit);
}

TEST_CASE("classify_re per-language diagnostics") {
    auto patterns = PatternTable::builtin();

    CHECK(classify_re(failed_with("ZeroDivisionError: division by zero"), Lang::Python, patterns) ==
          REType::DivisionByZero);
    CHECK(classify_re(failed_with("NameError: name 'x' is not defined"), Lang::Python, patterns) ==
          REType::UndefinedIdentifier);
    CHECK(classify_re(failed_with("  File \"main.py\", line 1\n    def f(:\nSyntaxError: invalid syntax"),
                      Lang::Python, patterns) == REType::CompileError);
    CHECK(classify_re(failed_with("TypeError: unsupported operand type(s)"), Lang::Python,
                      patterns) == REType::VariableTypeError);
    CHECK(classify_re(failed_with("RecursionError: maximum recursion depth exceeded"), Lang::Python,
                      patterns) == REType::TimeLimit);

    CHECK(classify_re(failed_with("Error: object 'answer_value' not found"), Lang::R, patterns) ==
          REType::UndefinedIdentifier);
    CHECK(classify_re(failed_with("Error in library(xyz) : there is no package called 'xyz'"),
                      Lang::R, patterns) == REType::UndefinedIdentifier);
    CHECK(classify_re(failed_with("Error: division by zero in step 2"), Lang::R, patterns) ==
          REType::DivisionByZero);

    CHECK(classify_re(failed_with("", ExecStatus::RuntimeError, 8), Lang::Cpp, patterns) ==
          REType::DivisionByZero);  // SIGFPE
    CHECK(classify_re(failed_with("main.cpp:4:9: error: redefinition of 'int x'",
                                  ExecStatus::CompileError),
                      Lang::Cpp, patterns) == REType::Redeclaration);
    CHECK(classify_re(failed_with("main.cpp:4:5: error: 'answer' was not declared in this scope",
                                  ExecStatus::CompileError),
                      Lang::Cpp, patterns) == REType::UndefinedIdentifier);
    CHECK(classify_re(failed_with("main.cpp:3:1: error: expected ';' before 'return'",
                                  ExecStatus::CompileError),
                      Lang::Cpp, patterns) == REType::CompileError);

    CHECK(classify_re(failed_with("Exception in thread \"main\" java.lang.ArithmeticException: / by zero"),
                      Lang::Java, patterns) == REType::DivisionByZero);
    CHECK(classify_re(failed_with("Main.java:3: error: cannot find symbol", ExecStatus::CompileError),
                      Lang::Java, patterns) == REType::UndefinedIdentifier);
    CHECK(classify_re(failed_with("Main.java:4: error: variable x is already defined in method main",
                                  ExecStatus::CompileError),
                      Lang::Java, patterns) == REType::Redeclaration);
    CHECK(classify_re(failed_with("Exception in thread \"main\" java.lang.StackOverflowError"),
                      Lang::Java, patterns) == REType::TimeLimit);

    CHECK(classify_re(failed_with("ReferenceError: answerValue is not defined"), Lang::JavaScript,
                      patterns) == REType::UndefinedIdentifier);
    CHECK(classify_re(failed_with("SyntaxError: Identifier 'x' has already been declared"),
                      Lang::JavaScript, patterns) == REType::Redeclaration);
    CHECK(classify_re(failed_with("RangeError: Division by zero"), Lang::JavaScript, patterns) ==
          REType::DivisionByZero);
    CHECK(classify_re(failed_with("RangeError: Maximum call stack size exceeded"), Lang::JavaScript,
                      patterns) == REType::TimeLimit);

    // Fallbacks.
    CHECK(classify_re(failed_with("some panic text nobody recognizes"), Lang::Python, patterns) ==
          REType::Other);
    CHECK(classify_re(failed_with("weird compiler noise", ExecStatus::CompileError), Lang::Cpp,
                      patterns) == REType::CompileError);
    CHECK(classify_re(completed_with("unparsable words"), Lang::Python, patterns) ==
          REType::IllegalOutput);
}

TEST_CASE("pattern data file stays in sync with the builtin table") {
    auto from_file = PatternTable::load(ts::data_dir() / "error_patterns.txt");
    auto builtin = PatternTable::builtin();
    const std::vector<std::pair<Lang, std::string>> bank = {
        {Lang::Python, "ZeroDivisionError: integer division"},
        {Lang::Python, "NameError: name 'v' is not defined"},
        {Lang::Python, "SyntaxError: bad"},
        {Lang::Python, "TypeError: nope"},
        {Lang::Python, "ValueError: invalid literal for int()"},
        {Lang::R, "Error: object 'x' not found"},
        {Lang::R, "Error: unexpected symbol in \"x y\""},
        {Lang::R, "Error: non-numeric argument to binary operator"},
        {Lang::Cpp, "error: redefinition of 'f'"},
        {Lang::Cpp, "error: 'q' was not declared in this scope"},
        {Lang::Cpp, "signal: SIGFPE"},
        {Lang::Java, "java.lang.ArithmeticException: / by zero"},
        {Lang::Java, "error: cannot find symbol"},
        {Lang::Java, "java.lang.NumberFormatException: For input string"},
        {Lang::JavaScript, "ReferenceError: nope"},
        {Lang::JavaScript, "SyntaxError: Identifier 'a' has already been declared"},
        {Lang::JavaScript, "TypeError: undefined is not a function"},
        {Lang::JavaScript, "no match at all"},
    };
    for (const auto& [lang, text] : bank) {
        CHECK_MESSAGE(from_file.match(lang, text) == builtin.match(lang, text), "diverged on: ",
                      text);
    }
}

TEST_CASE("make_candidate keeps the RE <-> error-answer invariant") {
    auto patterns = PatternTable::builtin();
    const Answer gt = Answer::number(3);
    GenSample s;
    s.lang = Lang::Python;
    s.code = "print(3)";

    const std::vector<ExecOutcome> outcomes = {
        completed_with("3\n"),
        completed_with("4\n"),
        completed_with("words\n"),
        failed_with("NameError: name 'q' is not defined"),
        failed_with("", ExecStatus::Timeout),
        failed_with("SyntaxError: x", ExecStatus::RuntimeError),
    };
    for (const auto& outcome : outcomes) {
        auto cand = make_candidate(s, 0, outcome, gt, AnswerKind::Numeric, 1e-3, patterns);
        CHECK((cand.verdict == Verdict::RE) == cand.answer.is_error());
        CHECK((cand.verdict == Verdict::RE) == cand.re_subtype.has_value());
    }

    auto illegal = make_illegal_candidate(s, 1, "no code");
    CHECK(illegal.verdict == Verdict::RE);
    CHECK(illegal.re_subtype == REType::IllegalOutput);
    CHECK(illegal.answer.is_error());
}
