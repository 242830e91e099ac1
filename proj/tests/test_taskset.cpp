#include <doctest.h>

#include <json.hpp>

#include "multipot/taskset.hpp"
#include "multipot/util.hpp"
#include "test_support.hpp"

using namespace multipot;
namespace ts = multipot::testsupport;

namespace {

std::filesystem::path write_jsonl(const std::filesystem::path& dir, const std::string& name,
                                  const std::vector<std::string>& lines) {
    std::string body;
    for (const auto& line : lines) body += line + "\n";
    auto path = dir / name;
    util::write_file(path, body);
    return path;
}

}  // namespace

TEST_CASE("load_taskset parses numeric and string tasks") {
    auto dir = ts::fresh_tmp_dir("taskset");
    auto numeric = write_jsonl(dir, "appl.jsonl",
                               {R"({"qid":"q1","question":"2+2?","answer":"4","answer_kind":"numeric"})",
                                R"({"qid":"q2","question":"cost?","answer":"12.5"})"});
    auto set = load_taskset(numeric, Task::Appl);
    REQUIRE(set.records.size() == 2);
    CHECK(set.records[0].ground_truth.num == doctest::Approx(4));
    CHECK(set.records[1].ground_truth.num == doctest::Approx(12.5));

    auto strings = write_jsonl(dir, "date.jsonl",
                               {R"({"qid":"d1","question":"tomorrow?","answer":" 05/01/2021 "})"});
    auto dates = load_taskset(strings, Task::Date);
    CHECK(dates.records[0].ground_truth.str == "05/01/2021");
}

TEST_CASE("load_taskset error paths") {
    auto dir = ts::fresh_tmp_dir("taskset-err");

    auto bad = write_jsonl(dir, "bad.jsonl",
                           {R"({"qid":"q1","question":"ok","answer":"1"})", "{not json"});
    CHECK_THROWS_AS(load_taskset(bad, Task::Appl), MalformedRecordError);
    try {
        load_taskset(bad, Task::Appl);
    } catch (const MalformedRecordError& e) {
        CHECK(e.line == 2);
    }

    auto dup = write_jsonl(dir, "dup.jsonl", {R"({"qid":"q1","question":"a","answer":"1"})",
                                              R"({"qid":"q1","question":"b","answer":"2"})"});
    CHECK_THROWS_AS(load_taskset(dup, Task::Appl), MalformedRecordError);

    auto mismatch =
        write_jsonl(dir, "mismatch.jsonl", {R"({"qid":"q1","question":"a","answer":"notanumber"})"});
    CHECK_THROWS_AS(load_taskset(mismatch, Task::Appl), AnswerKindMismatchError);

    auto declared = write_jsonl(dir, "declared.jsonl",
                                {R"({"qid":"q1","question":"a","answer":"1","answer_kind":"string"})"});
    CHECK_THROWS_AS(load_taskset(declared, Task::Appl), AnswerKindMismatchError);

    auto empty = write_jsonl(dir, "empty.jsonl", {});
    CHECK_THROWS_AS(load_taskset(empty, Task::Appl), MalformedRecordError);
    LoadOptions allow;
    allow.allow_empty = true;
    CHECK(load_taskset(empty, Task::Appl, allow).records.empty());

    LoadOptions expect3;
    expect3.expected_count = 3;
    auto one = write_jsonl(dir, "one.jsonl", {R"({"qid":"q1","question":"a","answer":"1"})"});
    CHECK_THROWS_AS(load_taskset(one, Task::Appl, expect3), MalformedRecordError);
}

TEST_CASE("load-serialize-load is identity on records") {
    auto dir = ts::fresh_tmp_dir("taskset-rt");
    auto path = write_jsonl(
        dir, "spatial.jsonl",
        {R"({"qid":"s1","question":"color?","answer":"Blue","answer_kind":"string"})",
         R"({"qid":"s2","question":"is it?","answer":"yes","answer_kind":"string"})"});
    auto first = load_taskset(path, Task::Spatial);
    save_taskset(first, dir / "rt.jsonl");
    auto second = load_taskset(dir / "rt.jsonl", Task::Spatial);
    REQUIRE(first.records.size() == second.records.size());
    for (size_t i = 0; i < first.records.size(); ++i) {
        CHECK(first.records[i].qid == second.records[i].qid);
        CHECK(first.records[i].text == second.records[i].text);
        CHECK(first.records[i].ground_truth == second.records[i].ground_truth);
    }
}

TEST_CASE("manifest declares the published task sizes") {
    // The shipped manifest template mirrors the published dataset sizes.
    auto manifest = load_manifest(ts::data_dir() / "tasksets" / "manifest.paper.json");
    CHECK(manifest.at(Task::Appl) == 4415);
    CHECK(manifest.at(Task::Math) == 4469);
    CHECK(manifest.at(Task::Date) == 369);
    CHECK(manifest.at(Task::Tabular) == 149);
    CHECK(manifest.at(Task::Spatial) == 2000);
}

TEST_CASE("parse_latex_number grammar") {
    CHECK(parse_latex_number("\\frac{1}{2}") == doctest::Approx(0.5));
    CHECK(parse_latex_number("-\\frac{7}{2}") == doctest::Approx(-3.5));
    CHECK(parse_latex_number("42") == doctest::Approx(42));
    CHECK(parse_latex_number("50\\%") == doctest::Approx(50));
    CHECK(!parse_latex_number("[0,1)"));
    CHECK(!parse_latex_number("x+2"));
    CHECK(!parse_latex_number("\\frac{1}{0}"));
    CHECK(!parse_latex_number("\\sqrt{2}"));
}

TEST_CASE("filter_math matches the frozen oracle sample") {
    // Expected values were produced by an independent regex-based parser and
    // frozen into the fixture file.
    auto path = ts::data_dir() / "fixtures" / "math" / "latex_answers.jsonl";
    int kept = 0, dropped = 0;
    std::vector<RawRecord> records;
    std::vector<nlohmann::json> lines;
    for (const auto& line : util::split_lines(util::read_file(path))) {
        if (util::trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line);
        lines.push_back(j);
        records.push_back({j["qid"].get<std::string>(), "q", j["answer"].get<std::string>()});
    }
    REQUIRE(records.size() == 50);

    auto result = filter_math(records);
    std::map<std::string, double> kept_values;
    for (const auto& rec : result.kept)
        kept_values[rec.qid] = std::strtod(rec.answer.c_str(), nullptr);

    for (const auto& j : lines) {
        const std::string qid = j["qid"].get<std::string>();
        if (j["keep"].get<bool>()) {
            ++kept;
            REQUIRE_MESSAGE(kept_values.count(qid), "expected to keep ", qid, " (",
                            j["answer"].get<std::string>(), ")");
            CHECK(kept_values[qid] == doctest::Approx(j["value"].get<double>()).epsilon(1e-12));
        } else {
            ++dropped;
            CHECK_MESSAGE(!kept_values.count(qid), "expected to drop ", qid, " (",
                          j["answer"].get<std::string>(), ")");
        }
    }
    CHECK(kept == 35);
    CHECK(dropped == 15);
    CHECK(result.dropped.size() == 15);
}

TEST_CASE("filter_math is idempotent and never grows") {
    auto path = ts::data_dir() / "fixtures" / "math" / "latex_answers.jsonl";
    std::vector<RawRecord> records;
    for (const auto& line : util::split_lines(util::read_file(path))) {
        if (util::trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line);
        records.push_back({j["qid"].get<std::string>(), "q", j["answer"].get<std::string>()});
    }
    auto once = filter_math(records);
    CHECK(once.kept.size() <= records.size());
    auto twice = filter_math(once.kept);
    REQUIRE(twice.kept.size() == once.kept.size());
    for (size_t i = 0; i < once.kept.size(); ++i) {
        CHECK(twice.kept[i].qid == once.kept[i].qid);
        CHECK(twice.kept[i].answer == once.kept[i].answer);
    }
}
