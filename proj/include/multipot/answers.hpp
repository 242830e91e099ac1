#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "multipot/domain.hpp"
#include "multipot/executor.hpp"

namespace multipot {

enum class Verdict { AC, WA, RE };

std::string_view verdict_name(Verdict v);

// The eight runtime-error subtypes. Every RE maps to exactly one.
enum class REType {
    Redeclaration,
    DivisionByZero,
    IllegalOutput,
    TimeLimit,
    CompileError,
    UndefinedIdentifier,
    VariableTypeError,
    Other,
};

std::string_view re_type_name(REType t);
std::optional<REType> re_type_from_name(std::string_view name);

// Ordered per-language diagnostic patterns, loaded from a data file:
//   [language]
//   <regex> -> <subtype>
// First matching rule wins. Rules match against stderr plus a synthesized
// "signal: SIGxxx" line when the process died on a signal.
class PatternTable {
public:
    static PatternTable load(const std::filesystem::path& path);
    static PatternTable builtin();  // compiled-in copy of the shipped table

    std::optional<REType> match(Lang lang, const std::string& diagnostics) const;

private:
    struct Rule {
        std::string pattern;
        std::regex re;
        REType subtype;
    };
    static PatternTable parse(const std::string& text, const std::string& origin);
    std::map<Lang, std::vector<Rule>> rules_;
};

// Takes the last non-empty stdout line. Numeric kind parses a real with
// commas/currency stripped; string kind canonicalizes. Unparsable or empty
// output yields an Error answer (never throws).
Answer extract_answer(const ExecOutcome& outcome, AnswerKind kind);

struct Classification {
    Verdict verdict = Verdict::RE;
    std::optional<REType> re_subtype;
};

// completed + parseable + equivalent -> AC; completed + parseable + not
// equivalent -> WA; everything else RE with a subtype from classify_re.
Classification classify(const ExecOutcome& outcome, const Answer& answer,
                        const Answer& ground_truth, double tol, Lang lang,
                        const PatternTable& patterns);

REType classify_re(const ExecOutcome& outcome, Lang lang, const PatternTable& patterns);

// A graded sample: the generated PoT, its execution outcome, the extracted
// answer and its classification.
struct CandidateAnswer {
    GenSample sample;
    int sample_index = 0;
    Answer answer;
    ExecOutcome outcome;
    Verdict verdict = Verdict::RE;
    std::optional<REType> re_subtype;
};

CandidateAnswer make_candidate(GenSample sample, int sample_index, const ExecOutcome& outcome,
                               const Answer& ground_truth, AnswerKind kind, double tol,
                               const PatternTable& patterns);

// A candidate for a sample that never produced a program (empty completion
// or unwrappable source); classified as RE / IllegalOutput.
CandidateAnswer make_illegal_candidate(GenSample sample, int sample_index,
                                       const std::string& reason);

}  // namespace multipot
