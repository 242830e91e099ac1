#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "multipot/answers.hpp"
#include "multipot/domain.hpp"
#include "multipot/ensemble.hpp"

namespace multipot {

// One scored question: the elected answer plus every graded candidate, so
// any aggregate can be re-derived offline.
struct QuestionResult {
    Task task = Task::Appl;
    std::string qid;
    Answer ground_truth;
    std::vector<CandidateAnswer> candidates;
    std::optional<Answer> elected;
    bool correct = false;
    std::vector<std::string> vote_trace;
};

// Percent of questions whose elected answer matches the ground truth;
// abstain counts as incorrect. Rounded to 2 decimals.
double accuracy_pct(const std::vector<QuestionResult>& results, double tol = kDefaultTolerance);

// Percent of questions with at least one candidate matching the ground
// truth. Always >= accuracy over the same candidates.
double coverage_pct(const std::vector<QuestionResult>& results, double tol = kDefaultTolerance);

// max - min accuracy across tie orders evaluated on identical candidates.
double stability_delta(const std::vector<double>& per_order_accuracies);

struct Breakdown {
    double ac_pct = 0.0;
    double wa_pct = 0.0;
    double re_pct = 0.0;  // the three always sum to exactly 100.00
    std::map<REType, int> re_histogram;
    int n_candidates = 0;
};

Breakdown breakdown(const std::vector<QuestionResult>& results);

// Largest-remainder rounding to 2 decimals; parts sum to exactly 100 when
// the inputs are a full partition.
std::vector<double> allocate_percentages(const std::vector<int>& counts);

nlohmann::ordered_json question_result_to_json(const QuestionResult& q);
QuestionResult question_result_from_json(const nlohmann::json& j);

struct ReportRow {
    std::string task;
    std::string method;    // "greedy", "sc(k=5)", "multipot"
    std::string langset;   // "+"-joined canonical language names
    double accuracy = 0.0;
    double coverage = 0.0;
    Breakdown bd;
    std::vector<QuestionResult> questions;
};

struct SchemaMismatchError : std::runtime_error {
    explicit SchemaMismatchError(int found)
        : std::runtime_error("report schema version " + std::to_string(found) +
                             " not supported") {}
};

// Deterministic given (transcript, config, seed): serialization is
// byte-identical on re-run. Wall-clock data is deliberately excluded.
struct RunReport {
    static constexpr int kSchemaVersion = 1;
    nlohmann::ordered_json config_snapshot;
    std::string transcript_hash;
    std::vector<ReportRow> rows;

    std::string to_json_string() const;
    static RunReport from_json_string(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static RunReport load(const std::filesystem::path& path);

    std::string render_text() const;
    // Fig.6-style plot data: one line per row, langset size vs accuracy and
    // coverage.
    std::string to_curve_csv() const;
};

std::string render_comparison(const std::vector<RunReport>& reports);

std::string langset_name(const std::vector<Lang>& langs);

}  // namespace multipot
