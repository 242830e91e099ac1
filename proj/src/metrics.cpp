#include "multipot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "multipot/util.hpp"

namespace multipot {

namespace {

using nlohmann::ordered_json;

double round2(double v) { return std::round(v * 100.0) / 100.0; }

ordered_json answer_to_json(const Answer& a) {
    ordered_json j;
    switch (a.kind) {
        case Answer::Kind::Numeric:
            j["kind"] = "numeric";
            j["value"] = a.num;
            break;
        case Answer::Kind::String:
            j["kind"] = "string";
            j["value"] = a.str;
            break;
        case Answer::Kind::Error:
            j["kind"] = "error";
            break;
    }
    return j;
}

Answer answer_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "numeric") return Answer::number(j.at("value").get<double>());
    if (kind == "string") return Answer::text(j.at("value").get<std::string>());
    return Answer::error();
}

ordered_json candidate_to_json(const CandidateAnswer& c) {
    ordered_json j;
    j["index"] = c.sample_index;
    j["lang"] = std::string(lang_name(c.sample.lang));
    j["code"] = c.sample.code;
    j["cum_logprob"] = c.sample.cum_logprob;
    j["n_tokens"] = c.sample.n_tokens;
    j["origin"] = c.sample.origin == SampleOrigin::Replay ? "replay" : "live";
    j["answer"] = answer_to_json(c.answer);
    j["verdict"] = std::string(verdict_name(c.verdict));
    if (c.re_subtype) j["re_subtype"] = std::string(re_type_name(*c.re_subtype));
    ordered_json out;
    out["status"] = std::string(exec_status_name(c.outcome.status));
    out["exit_code"] = c.outcome.exit_code;
    out["term_signal"] = c.outcome.term_signal;
    out["stdout"] = c.outcome.stdout_text;
    out["stderr"] = c.outcome.stderr_text;
    j["outcome"] = std::move(out);
    return j;
}

CandidateAnswer candidate_from_json(const nlohmann::json& j) {
    CandidateAnswer c;
    c.sample_index = j.at("index").get<int>();
    c.sample.lang = lang_from_name(j.at("lang").get<std::string>()).value();
    c.sample.code = j.at("code").get<std::string>();
    c.sample.cum_logprob = j.at("cum_logprob").get<double>();
    c.sample.n_tokens = j.at("n_tokens").get<int>();
    c.sample.origin =
        j.at("origin").get<std::string>() == "replay" ? SampleOrigin::Replay : SampleOrigin::Live;
    c.answer = answer_from_json(j.at("answer"));
    const std::string verdict = j.at("verdict").get<std::string>();
    c.verdict = verdict == "AC" ? Verdict::AC : verdict == "WA" ? Verdict::WA : Verdict::RE;
    if (j.contains("re_subtype"))
        c.re_subtype = re_type_from_name(j.at("re_subtype").get<std::string>());
    const auto& out = j.at("outcome");
    const std::string status = out.at("status").get<std::string>();
    c.outcome.status = status == "completed"       ? ExecStatus::Completed
                       : status == "compile_error" ? ExecStatus::CompileError
                       : status == "timeout"       ? ExecStatus::Timeout
                                                   : ExecStatus::RuntimeError;
    c.outcome.exit_code = out.at("exit_code").get<int>();
    c.outcome.term_signal = out.at("term_signal").get<int>();
    c.outcome.stdout_text = out.at("stdout").get<std::string>();
    c.outcome.stderr_text = out.at("stderr").get<std::string>();
    return c;
}

}  // namespace

nlohmann::ordered_json question_result_to_json(const QuestionResult& q) {
    ordered_json jq;
    jq["task"] = std::string(task_name(q.task));
    jq["qid"] = q.qid;
    jq["ground_truth"] = answer_to_json(q.ground_truth);
    if (q.elected)
        jq["elected"] = answer_to_json(*q.elected);
    else
        jq["elected"] = nullptr;
    jq["correct"] = q.correct;
    ordered_json jcands = ordered_json::array();
    for (const auto& c : q.candidates) jcands.push_back(candidate_to_json(c));
    jq["candidates"] = std::move(jcands);
    jq["vote_trace"] = q.vote_trace;
    return jq;
}

QuestionResult question_result_from_json(const nlohmann::json& jq) {
    QuestionResult q;
    q.task = task_from_name(jq.at("task").get<std::string>()).value();
    q.qid = jq.at("qid").get<std::string>();
    q.ground_truth = answer_from_json(jq.at("ground_truth"));
    if (!jq.at("elected").is_null()) q.elected = answer_from_json(jq.at("elected"));
    q.correct = jq.at("correct").get<bool>();
    for (const auto& jc : jq.at("candidates")) q.candidates.push_back(candidate_from_json(jc));
    for (const auto& t : jq.at("vote_trace")) q.vote_trace.push_back(t.get<std::string>());
    return q;
}

double accuracy_pct(const std::vector<QuestionResult>& results, double tol) {
    if (results.empty()) return 0.0;
    int correct = 0;
    for (const auto& r : results)
        if (r.elected && answer_equiv(*r.elected, r.ground_truth, tol)) ++correct;
    return round2(100.0 * correct / static_cast<double>(results.size()));
}

double coverage_pct(const std::vector<QuestionResult>& results, double tol) {
    if (results.empty()) return 0.0;
    int covered = 0;
    for (const auto& r : results) {
        for (const auto& c : r.candidates) {
            if (answer_equiv(c.answer, r.ground_truth, tol)) {
                ++covered;
                break;
            }
        }
    }
    return round2(100.0 * covered / static_cast<double>(results.size()));
}

double stability_delta(const std::vector<double>& per_order_accuracies) {
    if (per_order_accuracies.size() < 2)
        throw std::invalid_argument("stability delta needs at least two orders");
    auto [min_it, max_it] =
        std::minmax_element(per_order_accuracies.begin(), per_order_accuracies.end());
    return round2(*max_it - *min_it);
}

std::vector<double> allocate_percentages(const std::vector<int>& counts) {
    const long long total = std::accumulate(counts.begin(), counts.end(), 0LL);
    std::vector<double> out(counts.size(), 0.0);
    if (total == 0) return out;

    // Work in basis points (hundredths of a percent) so the shares sum to
    // exactly 100.00.
    std::vector<long long> floors(counts.size());
    std::vector<std::pair<long long, size_t>> remainders;
    long long assigned = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
        long long numer = static_cast<long long>(counts[i]) * 10000;
        floors[i] = numer / total;
        assigned += floors[i];
        remainders.push_back({-(numer % total), i});  // largest remainder first
    }
    std::sort(remainders.begin(), remainders.end());
    long long leftover = 10000 - assigned;
    for (long long i = 0; i < leftover; ++i) floors[remainders[i % remainders.size()].second] += 1;
    for (size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(floors[i]) / 100.0;
    return out;
}

Breakdown breakdown(const std::vector<QuestionResult>& results) {
    Breakdown bd;
    int ac = 0, wa = 0, re = 0;
    for (const auto& r : results) {
        for (const auto& c : r.candidates) {
            switch (c.verdict) {
                case Verdict::AC: ++ac; break;
                case Verdict::WA: ++wa; break;
                case Verdict::RE:
                    ++re;
                    if (c.re_subtype) bd.re_histogram[*c.re_subtype] += 1;
                    break;
            }
        }
    }
    bd.n_candidates = ac + wa + re;
    auto shares = allocate_percentages({ac, wa, re});
    bd.ac_pct = shares[0];
    bd.wa_pct = shares[1];
    bd.re_pct = shares[2];
    return bd;
}

std::string langset_name(const std::vector<Lang>& langs) {
    std::vector<Lang> sorted = langs;
    std::sort(sorted.begin(), sorted.end(),
              [](Lang a, Lang b) { return static_cast<int>(a) < static_cast<int>(b); });
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::string out;
    for (Lang lang : sorted) {
        if (!out.empty()) out += "+";
        out += std::string(lang_name(lang));
    }
    return out;
}

std::string RunReport::to_json_string() const {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = config_snapshot;
    j["transcript_hash"] = transcript_hash;
    ordered_json jrows = ordered_json::array();
    for (const auto& row : rows) {
        ordered_json jr;
        jr["task"] = row.task;
        jr["method"] = row.method;
        jr["langset"] = row.langset;
        jr["accuracy"] = row.accuracy;
        jr["coverage"] = row.coverage;
        jr["ac_pct"] = row.bd.ac_pct;
        jr["wa_pct"] = row.bd.wa_pct;
        jr["re_pct"] = row.bd.re_pct;
        ordered_json hist;
        for (const auto& [subtype, count] : row.bd.re_histogram)
            hist[std::string(re_type_name(subtype))] = count;
        jr["re_histogram"] = std::move(hist);
        ordered_json jqs = ordered_json::array();
        for (const auto& q : row.questions) jqs.push_back(question_result_to_json(q));
        jr["questions"] = std::move(jqs);
        jrows.push_back(std::move(jr));
    }
    j["rows"] = std::move(jrows);
    return j.dump(2) + "\n";
}

RunReport RunReport::from_json_string(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) throw SchemaMismatchError(version);

    RunReport report;
    report.config_snapshot = ordered_json::parse(j.at("config").dump());
    report.transcript_hash = j.at("transcript_hash").get<std::string>();
    for (const auto& jr : j.at("rows")) {
        ReportRow row;
        row.task = jr.at("task").get<std::string>();
        row.method = jr.at("method").get<std::string>();
        row.langset = jr.at("langset").get<std::string>();
        row.accuracy = jr.at("accuracy").get<double>();
        row.coverage = jr.at("coverage").get<double>();
        row.bd.ac_pct = jr.at("ac_pct").get<double>();
        row.bd.wa_pct = jr.at("wa_pct").get<double>();
        row.bd.re_pct = jr.at("re_pct").get<double>();
        for (auto it = jr.at("re_histogram").begin(); it != jr.at("re_histogram").end(); ++it)
            if (auto t = re_type_from_name(it.key())) row.bd.re_histogram[*t] = it.value().get<int>();
        for (const auto& jq : jr.at("questions"))
            row.questions.push_back(question_result_from_json(jq));
        report.rows.push_back(std::move(row));
    }
    return report;
}

void RunReport::save(const std::filesystem::path& path) const {
    util::write_file(path, to_json_string());
}

RunReport RunReport::load(const std::filesystem::path& path) {
    return from_json_string(util::read_file(path));
}

std::string RunReport::render_text() const {
    std::ostringstream out;
    out << "task      method      langset                            acc     cov      AC      WA      RE\n";
    for (const auto& row : rows) {
        char line[256];
        std::snprintf(line, sizeof(line), "%-9s %-11s %-33s %6s  %6s  %6s  %6s  %6s\n",
                      row.task.c_str(), row.method.c_str(), row.langset.c_str(),
                      util::format_pct(row.accuracy).c_str(), util::format_pct(row.coverage).c_str(),
                      util::format_pct(row.bd.ac_pct).c_str(), util::format_pct(row.bd.wa_pct).c_str(),
                      util::format_pct(row.bd.re_pct).c_str());
        out << line;
    }
    bool any_re = false;
    for (const auto& row : rows) any_re = any_re || !row.bd.re_histogram.empty();
    if (any_re) {
        out << "\nruntime-error subtypes:\n";
        for (const auto& row : rows) {
            if (row.bd.re_histogram.empty()) continue;
            out << "  " << row.task << " " << row.method << " " << row.langset << ":";
            for (const auto& [subtype, count] : row.bd.re_histogram)
                out << " " << re_type_name(subtype) << "=" << count;
            out << "\n";
        }
    }
    return out.str();
}

std::string RunReport::to_curve_csv() const {
    std::string csv = "n_langs,langset,task,method,accuracy,coverage\n";
    for (const auto& row : rows) {
        const int n_langs = static_cast<int>(util::split(row.langset, '+').size());
        csv += std::to_string(n_langs) + "," + row.langset + "," + row.task + "," + row.method +
               "," + util::format_pct(row.accuracy) + "," + util::format_pct(row.coverage) + "\n";
    }
    return csv;
}

std::string render_comparison(const std::vector<RunReport>& reports) {
    // Collect row keys in first-seen order.
    std::vector<std::string> keys;
    auto key_of = [](const ReportRow& r) { return r.task + " | " + r.method + " | " + r.langset; };
    for (const auto& rep : reports)
        for (const auto& row : rep.rows) {
            std::string k = key_of(row);
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
        }

    std::ostringstream out;
    out << "row";
    for (size_t i = 0; i < reports.size(); ++i) out << "\tacc#" << i + 1;
    if (reports.size() == 2) out << "\tdelta";
    out << "\n";
    for (const auto& key : keys) {
        out << key;
        std::vector<double> accs;
        for (const auto& rep : reports) {
            const ReportRow* found = nullptr;
            for (const auto& row : rep.rows)
                if (key_of(row) == key) found = &row;
            if (found) {
                accs.push_back(found->accuracy);
                out << "\t" << util::format_pct(found->accuracy);
            } else {
                out << "\t-";
            }
        }
        if (reports.size() == 2 && accs.size() == 2)
            out << "\t" << util::format_pct(accs[1] - accs[0]);
        out << "\n";
    }
    return out.str();
}

}  // namespace multipot
