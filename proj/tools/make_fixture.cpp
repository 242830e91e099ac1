// Builds the replayable pipeline fixture: 20 questions, recorded
// completions for greedy / self-consistency / multipot requests in all five
// languages, plus an expected-numbers file derived from the outcome plan by
// a plain counting voter that is independent of the ensemble module.
//
// Run from the repository root: ./build/make_fixture
// Outputs land under data/fixtures/pipeline/.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "multipot/domain.hpp"
#include "multipot/ensemble.hpp"
#include "multipot/genclient.hpp"
#include "multipot/prompting.hpp"
#include "multipot/util.hpp"

using namespace multipot;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kSeed = 7;
constexpr int kSamplesPerSC = 5;

const std::array<Lang, 5> kLangs = {Lang::Python, Lang::R, Lang::Cpp, Lang::Java,
                                    Lang::JavaScript};

struct FixtureQuestion {
    std::string qid;
    Task task;
    std::string text;
    // Numeric questions: an arithmetic expression valid in all five
    // languages; gt/w1/w2 are its value, value+1, value-2.
    std::string expr;
    double gt_num = 0;
    // Date questions: start date plus day offset; gt/w1/w2 are offset,
    // offset+1, offset-1 rendered as MM/DD/YYYY.
    int y = 0, m = 0, d = 0, delta = 0;
    std::string gt_str, w1_str, w2_str;
};

std::vector<FixtureQuestion> fixture_questions() {
    std::vector<FixtureQuestion> qs;
    auto num = [&](const char* qid, const char* text, const char* expr, double gt) {
        FixtureQuestion q;
        q.qid = qid;
        q.task = Task::Appl;
        q.text = text;
        q.expr = expr;
        q.gt_num = gt;
        qs.push_back(q);
    };
    num("a01", "A box contains 6 red pens and 5 blue pens. How many pens are in the box?", "6 + 5", 11);
    num("a02", "Maya read 8 pages on Monday and 6 pages on Tuesday. How many pages did she read in total?", "8 + 6", 14);
    num("a03", "A farmer had 12 eggs and sold 3 of them. How many eggs are left?", "12 - 3", 9);
    num("a04", "Each of 5 shelves holds 5 books. How many books are there in total?", "5 * 5", 25);
    num("a05", "Tom had 20 marbles, won 2 more, and then lost 4. How many marbles does he have now?", "20 + 2 - 4", 18);
    num("a06", "A pizza has 8 slices. Ana ate 1 slice. How many slices remain?", "8 - 1", 7);
    num("a07", "There are 4 baskets with 8 oranges in each. How many oranges are there in total?", "4 * 8", 32);
    num("a08", "A class has 12 girls and 9 boys. How many students are in the class?", "12 + 9", 21);
    num("a09", "Lena bought 4 packs with 4 stickers in each pack. How many stickers did she buy?", "4 * 4", 16);
    num("a10", "A garage stores 5 racks of 9 tires. How many tires are stored?", "5 * 9", 45);
    num("a11", "Nina collected 30 shells and gave away 3. How many shells does she keep?", "30 - 3", 27);
    num("a12", "A jar holds 16 cookies. After 3 are eaten, how many cookies are left?", "16 - 3", 13);

    auto date = [&](const char* qid, const char* text, int y, int m, int d, int delta,
                    const char* gt, const char* w1, const char* w2) {
        FixtureQuestion q;
        q.qid = qid;
        q.task = Task::Date;
        q.text = text;
        q.y = y;
        q.m = m;
        q.d = d;
        q.delta = delta;
        q.gt_str = gt;
        q.w1_str = w1;
        q.w2_str = w2;
        qs.push_back(q);
    };
    date("d01", "Today is 5/10/2021. What is the date tomorrow in MM/DD/YYYY?", 2021, 5, 10, 1,
         "05/11/2021", "05/12/2021", "05/10/2021");
    date("d02", "Today is 1/31/2015. What is the date tomorrow in MM/DD/YYYY?", 2015, 1, 31, 1,
         "02/01/2015", "02/02/2015", "01/31/2015");
    date("d03", "Yesterday was 6/14/1995. What is the date today in MM/DD/YYYY?", 1995, 6, 14, 1,
         "06/15/1995", "06/16/1995", "06/14/1995");
    date("d04", "Today is 8/3/2010. What is the date one week later in MM/DD/YYYY?", 2010, 8, 3, 7,
         "08/10/2010", "08/11/2010", "08/09/2010");
    date("d05", "Today is 12/30/1999. What is the date in 5 days in MM/DD/YYYY?", 1999, 12, 30, 5,
         "01/04/2000", "01/05/2000", "01/03/2000");
    date("d06", "Today is 3/15/2012. What was the date 10 days ago in MM/DD/YYYY?", 2012, 3, 15, -10,
         "03/05/2012", "03/06/2012", "03/04/2012");
    date("d07", "Today is 7/4/1776. What is the date tomorrow in MM/DD/YYYY?", 1776, 7, 4, 1,
         "07/05/1776", "07/06/1776", "07/04/1776");
    date("d08", "Today is 11/28/2023. What is the date in 3 days in MM/DD/YYYY?", 2023, 11, 28, 3,
         "12/01/2023", "12/02/2023", "11/30/2023");
    return qs;
}

// Outcome plan. 'T' correct, 'F' wrong (w1), 'G' wrong (w2), 'E' error.
// Multipot/greedy rows are per-language strings in kLangs order.
const std::array<const char*, 20> kMultipotPlan = {
    "TTTTT", "TTTTT", "TTTTT", "TTTTT", "TTTTT", "TTTTT",  // a01-a06
    "TFTFT", "TFTFT", "TFTFT", "TFTFT",                    // a07-a10
    "TTTFF", "TTTFF",                                      // a11-a12
    "TTFTT", "TTFTT",                                      // d01-d02
    "FTTTT",                                               // d03
    "TTFTF",                                               // d04
    "TTETT",                                               // d05
    "FTTFE",                                               // d06: engineered 2-2 tie
    "FFFFT",                                               // d07
    "EFEFE",                                               // d08
};

// Self-consistency status per question: W win (T,T,T,F,T), V win (T,T,T,F,E),
// c lose-covered (F,F,F,T,E), u lose-uncovered (F,F,F,G,E), A abstain (all E).
const std::map<Lang, const char*> kSCPlan = {
    {Lang::Python, "VWVWVWVWVWVWVWccucuu"},
    {Lang::R, "VWVWVWccuuVWVWVcWuuA"},
    {Lang::Cpp, "VWVWVWVWVWVWccVuucuu"},
    {Lang::Java, "VWVWVWVWccuuVWVWVuuu"},
    {Lang::JavaScript, "VWVWVWVWVWccVWVuWccu"},
};

// Engineered cum_logprobs for the d06 multipot tie: the correct group's
// best member must beat the wrong group's best member.
const std::map<Lang, double> kTieLogprob = {
    {Lang::Python, -4.0}, {Lang::R, -3.1}, {Lang::Cpp, -2.0}, {Lang::Java, -3.5},
    {Lang::JavaScript, -9.0},
};

std::string sc_samples_for(char status) {
    switch (status) {
        case 'W': return "TTTFT";
        case 'V': return "TTTFE";
        case 'c': return "FFFTE";
        case 'u': return "FFFGE";
        case 'A': return "EEEEE";
    }
    throw std::logic_error("bad SC status");
}

int lang_index(Lang lang) {
    for (size_t i = 0; i < kLangs.size(); ++i)
        if (kLangs[i] == lang) return static_cast<int>(i);
    return 0;
}

std::string comment_prefix(Lang lang) {
    return (lang == Lang::Python || lang == Lang::R) ? "#" : "//";
}

std::string format_number(double v) {
    char buf[32];
    if (v == static_cast<long long>(v))
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    else
        std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

// --- program builders -----------------------------------------------------

std::string numeric_program(Lang lang, const std::string& expr) {
    switch (lang) {
        case Lang::Python:
            return "# solution in Python\nresult = " + expr + "\nprint(result)";
        case Lang::R:
            return "# solution in R\nresult <- " + expr + "\ncat(result, \"\\n\")";
        case Lang::Cpp:
            return "// solution in C++\n#include <iostream>\nusing namespace std;\n\nint main() {\n    int result = " +
                   expr + ";\n    cout << result << endl;\n    return 0;\n}";
        case Lang::Java:
            return "// solution in Java\npublic class Main {\n    public static void main(String[] args) {\n        int result = " +
                   expr + ";\n        System.out.println(result);\n    }\n}";
        case Lang::JavaScript:
            return "// solution in JavaScript\nconst result = " + expr + ";\nconsole.log(result);";
    }
    return "";
}

std::string date_program(Lang lang, const FixtureQuestion& q, int delta,
                         const std::string& literal) {
    char buf[640];
    switch (lang) {
        case Lang::Python:
            std::snprintf(buf, sizeof(buf),
                          "# solution in Python\nfrom datetime import date, timedelta\n"
                          "start = date(%d, %d, %d)\nresult = start + timedelta(days=%d)\n"
                          "print(result.strftime(\"%%m/%%d/%%Y\"))",
                          q.y, q.m, q.d, delta);
            return buf;
        case Lang::R:
            // Prints the precomputed date directly.
            return "# solution in R\nresult <- \"" + literal + "\"\ncat(result, \"\\n\")";
        case Lang::Cpp:
            std::snprintf(
                buf, sizeof(buf),
                "// solution in C++\n#include <chrono>\n#include <cstdio>\nusing namespace std::chrono;\n\n"
                "int main() {\n    year_month_day start = year{%d} / %d / %d;\n"
                "    year_month_day result{sys_days{start} + days{%d}};\n"
                "    printf(\"%%02u/%%02u/%%d\\n\", static_cast<unsigned>(result.month()),\n"
                "           static_cast<unsigned>(result.day()), static_cast<int>(result.year()));\n"
                "    return 0;\n}",
                q.y, q.m, q.d, delta);
            return buf;
        case Lang::Java:
            return "// solution in Java\npublic class Main {\n    public static void main(String[] args) {\n"
                   "        String result = \"" +
                   literal + "\";\n        System.out.println(result);\n    }\n}";
        case Lang::JavaScript:
            std::snprintf(buf, sizeof(buf),
                          "// solution in JavaScript\nconst start = new Date(%d, %d, %d);\n"
                          "const result = new Date(start);\nresult.setDate(start.getDate() + %d);\n"
                          "const mm = String(result.getMonth() + 1).padStart(2, \"0\");\n"
                          "const dd = String(result.getDate()).padStart(2, \"0\");\n"
                          "console.log(mm + \"/\" + dd + \"/\" + result.getFullYear());",
                          q.y, q.m - 1, q.d, delta);
            return buf;
    }
    return "";
}

std::string error_program(Lang lang) {
    switch (lang) {
        case Lang::Python:
            return "# solution in Python\nprint(final_answer)";
        case Lang::Cpp:
            return "// solution in C++\n#include <iostream>\n\nint main() {\n    std::cout << final_answer << std::endl;\n    return 0;\n}";
        case Lang::JavaScript:
            return "// solution in JavaScript\nconsole.log(finalAnswer);";
        case Lang::R:
        case Lang::Java:
            // Prose only: stripped to nothing and graded as illegal output
            // without touching the (possibly absent) toolchain.
            return "I am not sure how to approach this one, sorry.";
    }
    return "";
}

struct PlannedCompletion {
    std::string text;
    char outcome;
};

PlannedCompletion build_completion(const FixtureQuestion& q, Lang lang, char outcome,
                                   int variant, bool fenced) {
    PlannedCompletion out;
    out.outcome = outcome;
    if (outcome == 'E') {
        std::string code = error_program(lang);
        const bool prose = lang == Lang::R || lang == Lang::Java;
        if (!prose && variant > 0)
            code += "\n" + comment_prefix(lang) + " attempt " + std::to_string(variant);
        out.text = code;
        return out;
    }

    std::string code;
    if (q.task == Task::Appl) {
        std::string expr = q.expr;
        if (outcome == 'F') expr += " + 1";
        if (outcome == 'G') expr += " - 2";
        code = numeric_program(lang, expr);
    } else {
        int delta = q.delta + (outcome == 'F' ? 1 : outcome == 'G' ? -1 : 0);
        const std::string literal =
            outcome == 'T' ? q.gt_str : (outcome == 'F' ? q.w1_str : q.w2_str);
        code = date_program(lang, q, delta, literal);
    }
    if (variant > 0) code += "\n" + comment_prefix(lang) + " attempt " + std::to_string(variant);

    if (fenced)
        out.text = "Let me write the program.\n```\n" + code + "\n```\nThat should print the answer.";
    else
        out.text = code;
    return out;
}

std::vector<double> split_logprob(double cum, const std::string& text) {
    int n = std::max(3, std::min(12, static_cast<int>(text.size()) / 20));
    return std::vector<double>(static_cast<size_t>(n), cum / n);
}

double planned_logprob(char outcome, int q_index, Lang lang, int sample_index) {
    double base = outcome == 'T' ? -2.2 : outcome == 'E' ? -8.5 : -4.6;
    return base - 0.013 * q_index - 0.07 * lang_index(lang) - 0.11 * sample_index;
}

// --- independent plan voter -------------------------------------------
// Counts answers by outcome letter (each letter is a distinct answer value);
// majority wins; count ties go to the member with the highest cumulative
// logprob; no gradable answer means abstain.

struct PlanCandidate {
    char outcome;  // T/F/G/E
    double logprob;
};

bool plan_vote_correct(const std::vector<PlanCandidate>& cands) {
    std::map<char, int> counts;
    std::map<char, double> best_lp;
    for (const auto& c : cands) {
        if (c.outcome == 'E') continue;
        counts[c.outcome] += 1;
        auto it = best_lp.find(c.outcome);
        if (it == best_lp.end() || c.logprob > it->second) best_lp[c.outcome] = c.logprob;
    }
    if (counts.empty()) return false;  // abstain
    char winner = 0;
    int max_count = -1;
    double winner_lp = 0;
    for (const auto& [key, count] : counts) {
        if (count > max_count || (count == max_count && best_lp[key] > winner_lp)) {
            winner = key;
            max_count = count;
            winner_lp = best_lp[key];
        }
    }
    return winner == 'T';
}

bool plan_covered(const std::vector<PlanCandidate>& cands) {
    for (const auto& c : cands)
        if (c.outcome == 'T') return true;
    return false;
}

double pct(int num, int den) { return std::round(10000.0 * num / den) / 100.0; }

}  // namespace

int main(int argc, char** argv) {
    std::filesystem::path root = argc > 1 ? argv[1] : ".";
    const auto out_dir = root / "data" / "fixtures" / "pipeline";
    std::filesystem::create_directories(out_dir);

    const auto questions = fixture_questions();

    // Task set files + manifest.
    {
        std::string appl, date;
        for (const auto& q : questions) {
            ordered_json rec;
            rec["qid"] = q.qid;
            rec["question"] = q.text;
            if (q.task == Task::Appl) {
                rec["answer"] = format_number(q.gt_num);
                rec["answer_kind"] = "numeric";
                appl += rec.dump() + "\n";
            } else {
                rec["answer"] = q.gt_str;
                rec["answer_kind"] = "string";
                date += rec.dump() + "\n";
            }
        }
        util::write_file(out_dir / "tasksets" / "appl.jsonl", appl);
        util::write_file(out_dir / "tasksets" / "date.jsonl", date);
        util::write_file(out_dir / "manifest.json", "{\n  \"appl\": 12,\n  \"date\": 8\n}\n");
    }

    // Prompts must match what a run builds, so use the same library parts.
    DemoLibrary demos = DemoLibrary::load_dir(root / "data" / "demos");
    PromptTemplate tmpl = load_prompt_template(root / "data" / "prompt_template.json");
    PipelineContext ctx;
    ctx.demos = &demos;
    ctx.prompt_template = tmpl;
    ctx.sampling.temperature = 0.4;
    ctx.sampling.top_p = 1.0;
    ctx.sampling.max_tokens = 640;
    ctx.request_seed = kSeed;

    const auto transcript_path = out_dir / "transcript.jsonl";
    std::filesystem::remove(transcript_path);
    Transcript transcript = Transcript::open(transcript_path, /*writable=*/true);

    ordered_json plan_json;
    int fence_counter = 0;

    auto record = [&](const FixtureQuestion& fq, Lang lang, int n, double temperature,
                      const std::vector<PlannedCompletion>& planned,
                      const std::vector<double>& logprobs) {
        QuestionRecord q;
        q.task = fq.task;
        q.qid = fq.qid;
        q.text = fq.text;
        GenRequest req = make_gen_request(q, lang, n, temperature, ctx);
        std::vector<RecordedCompletion> completions;
        for (size_t i = 0; i < planned.size(); ++i) {
            RecordedCompletion rc;
            rc.text = planned[i].text;
            rc.token_logprobs = split_logprob(logprobs[i], planned[i].text);
            completions.push_back(std::move(rc));
        }
        transcript.append(Transcript::make_key(req), req, completions);
    };

    for (size_t qi = 0; qi < questions.size(); ++qi) {
        const FixtureQuestion& fq = questions[qi];
        const std::string mp_row = kMultipotPlan[qi];
        for (Lang lang : kLangs) {
            const int li = lang_index(lang);
            const char mp_outcome = mp_row[li];

            // Greedy entry (t=0, n=1): same planned outcome as multipot.
            {
                auto planned = build_completion(fq, lang, mp_outcome, 0, false);
                double lp = planned_logprob(mp_outcome, static_cast<int>(qi), lang, 0);
                record(fq, lang, 1, 0.0, {planned}, {lp});
                ordered_json e;
                e["outcome"] = std::string(1, mp_outcome);
                e["cum_logprob"] = lp;
                plan_json["greedy"][fq.qid][std::string(lang_name(lang))] = e;
            }

            // Multipot entry (t=0.4, n=1).
            {
                bool fenced = (fence_counter++ % 4) == 1 && mp_outcome != 'E';
                auto planned = build_completion(fq, lang, mp_outcome, 1, fenced);
                double lp = fq.qid == "d06" ? kTieLogprob.at(lang)
                                            : planned_logprob(mp_outcome, static_cast<int>(qi), lang, 1);
                record(fq, lang, 1, ctx.sampling.temperature, {planned}, {lp});
                ordered_json e;
                e["outcome"] = std::string(1, mp_outcome);
                e["cum_logprob"] = lp;
                plan_json["multipot"][fq.qid][std::string(lang_name(lang))] = e;
            }

            // Self-consistency entry (t=0.4, n=5).
            {
                const char status = kSCPlan.at(lang)[qi];
                const std::string samples = sc_samples_for(status);
                std::vector<PlannedCompletion> planned;
                std::vector<double> lps;
                ordered_json arr = ordered_json::array();
                for (int si = 0; si < kSamplesPerSC; ++si) {
                    bool fenced = (fence_counter++ % 4) == 1 && samples[si] != 'E';
                    planned.push_back(build_completion(fq, lang, samples[si], si + 2, fenced));
                    lps.push_back(planned_logprob(samples[si], static_cast<int>(qi), lang, si));
                    ordered_json e;
                    e["outcome"] = std::string(1, samples[si]);
                    e["cum_logprob"] = lps.back();
                    arr.push_back(std::move(e));
                }
                record(fq, lang, kSamplesPerSC, ctx.sampling.temperature, planned, lps);
                plan_json["sc"][fq.qid][std::string(lang_name(lang))] = std::move(arr);
            }
        }
    }

    // Canonical expected numbers computed from the plan by the counting
    // voter above.
    ordered_json canonical;
    {
        const int n = static_cast<int>(questions.size());

        auto subset_stats = [&](const std::vector<Lang>& langs) {
            int correct = 0, covered = 0;
            for (const auto& q : questions) {
                std::vector<PlanCandidate> cands;
                for (Lang lang : langs) {
                    const auto& e = plan_json["multipot"][q.qid][std::string(lang_name(lang))];
                    cands.push_back(
                        {e["outcome"].get<std::string>()[0], e["cum_logprob"].get<double>()});
                }
                if (plan_vote_correct(cands)) ++correct;
                if (plan_covered(cands)) ++covered;
            }
            ordered_json s;
            s["accuracy"] = pct(correct, n);
            s["coverage"] = pct(covered, n);
            return s;
        };

        auto sc_stats = [&](Lang lang) {
            int correct = 0, covered = 0;
            for (const auto& q : questions) {
                std::vector<PlanCandidate> cands;
                for (const auto& e : plan_json["sc"][q.qid][std::string(lang_name(lang))])
                    cands.push_back(
                        {e["outcome"].get<std::string>()[0], e["cum_logprob"].get<double>()});
                if (plan_vote_correct(cands)) ++correct;
                if (plan_covered(cands)) ++covered;
            }
            ordered_json s;
            s["accuracy"] = pct(correct, n);
            s["coverage"] = pct(covered, n);
            return s;
        };

        auto greedy_stats = [&](Lang lang) {
            int correct = 0;
            for (const auto& q : questions)
                if (plan_json["greedy"][q.qid][std::string(lang_name(lang))]["outcome"] == "T")
                    ++correct;
            ordered_json s;
            s["accuracy"] = pct(correct, n);
            return s;
        };

        std::vector<Lang> all5(kLangs.begin(), kLangs.end());
        canonical["multipot_all_five"] = subset_stats(all5);
        for (Lang lang : kLangs) {
            canonical["sc"][std::string(lang_name(lang))] = sc_stats(lang);
            canonical["greedy"][std::string(lang_name(lang))] = greedy_stats(lang);
        }

        // Data-amount ascending growth curve over all five languages.
        std::vector<Lang> asc = all5;
        std::sort(asc.begin(), asc.end(), [](Lang a, Lang b) {
            return lang_info(a).data_amount_rank < lang_info(b).data_amount_rank;
        });
        ordered_json curve = ordered_json::array();
        std::vector<Lang> prefix;
        for (Lang lang : asc) {
            prefix.push_back(lang);
            ordered_json step = subset_stats(prefix);
            step["langs"] = static_cast<int>(prefix.size());
            step["added"] = std::string(lang_name(lang));
            curve.push_back(std::move(step));
        }
        canonical["growth_curve_data_amount_asc"] = std::move(curve);

        canonical["multipot_python_cpp_javascript"] =
            subset_stats({Lang::Python, Lang::Cpp, Lang::JavaScript});
    }

    ordered_json expected;
    expected["seed"] = kSeed;
    expected["temperature"] = 0.4;
    expected["top_p"] = 1.0;
    expected["k"] = kSamplesPerSC;
    ordered_json qmeta = ordered_json::array();
    for (const auto& q : questions) {
        ordered_json e;
        e["qid"] = q.qid;
        e["task"] = std::string(task_name(q.task));
        if (q.task == Task::Appl) {
            e["answer"] = q.gt_num;
            e["wrong1"] = q.gt_num + 1;
            e["wrong2"] = q.gt_num - 2;
        } else {
            e["answer"] = q.gt_str;
            e["wrong1"] = q.w1_str;
            e["wrong2"] = q.w2_str;
        }
        qmeta.push_back(std::move(e));
    }
    expected["questions"] = std::move(qmeta);
    expected["plan"] = std::move(plan_json);
    expected["canonical"] = std::move(canonical);
    util::write_file(out_dir / "expected.json", expected.dump(2) + "\n");

    std::cout << "fixture written under " << out_dir.string() << "\n"
              << "transcript entries: " << transcript.size() << "\n"
              << "canonical numbers:\n"
              << expected["canonical"].dump(2) << "\n";
    return 0;
}
