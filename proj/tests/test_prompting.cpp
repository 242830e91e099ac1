#include <doctest.h>

#include "multipot/prompting.hpp"
#include "multipot/util.hpp"
#include "test_support.hpp"

using namespace multipot;
namespace ts = multipot::testsupport;

namespace {

const DemoLibrary& shipped_demos() {
    static DemoLibrary lib = DemoLibrary::load_dir(ts::data_dir() / "demos");
    return lib;
}

QuestionRecord question_for(Task task) {
    QuestionRecord q;
    q.task = task;
    q.qid = "probe";
    q.text = "What is 1 plus 1?";
    q.ground_truth = Answer::number(2);
    return q;
}

int count_occurrences(const std::string& haystack, const std::string& needle) {
    int n = 0;
    size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

}  // namespace

TEST_CASE("shipped demo library is complete") {
    const auto& lib = shipped_demos();
    for (const auto& task : all_tasks())
        for (const auto& lang : all_langs()) {
            const Demonstration* demo = lib.find(task.id, lang.id);
            REQUIRE_MESSAGE(demo != nullptr, task.name, "/", lang.name);
            CHECK(static_cast<int>(demo->shots.size()) == task.shots);
        }
}

TEST_CASE("build_prompt embeds the right number of example PoTs") {
    PromptTemplate tmpl;
    auto date_prompt = build_prompt(Task::Date, Lang::R, question_for(Task::Date), shipped_demos(), tmpl);
    // 6 demonstration questions plus the live one.
    CHECK(count_occurrences(date_prompt, tmpl.question_header) == 7);
    CHECK(count_occurrences(date_prompt, "# solution in R") == 6);

    auto tab_prompt =
        build_prompt(Task::Tabular, Lang::Cpp, question_for(Task::Tabular), shipped_demos(), tmpl);
    CHECK(count_occurrences(tab_prompt, "// solution in C++") == 3);
    // Prompt ends with the live question, ready for completion.
    CHECK(tab_prompt.rfind(tmpl.question_header + "What is 1 plus 1?") != std::string::npos);
}

TEST_CASE("same question under different languages shares example questions") {
    PromptTemplate tmpl;
    const auto q = question_for(Task::Math);
    auto python = build_prompt(Task::Math, Lang::Python, q, shipped_demos(), tmpl);
    auto java = build_prompt(Task::Math, Lang::Java, q, shipped_demos(), tmpl);
    CHECK(python != java);  // different example code
    const Demonstration* py = shipped_demos().find(Task::Math, Lang::Python);
    const Demonstration* jv = shipped_demos().find(Task::Math, Lang::Java);
    REQUIRE(py->shots.size() == jv->shots.size());
    for (size_t i = 0; i < py->shots.size(); ++i) {
        CHECK(py->shots[i].question == jv->shots[i].question);
        CHECK(python.find(py->shots[i].question) != std::string::npos);
        CHECK(java.find(py->shots[i].question) != std::string::npos);
    }
}

TEST_CASE("build_prompt is deterministic") {
    PromptTemplate tmpl;
    const auto q = question_for(Task::Appl);
    CHECK(build_prompt(Task::Appl, Lang::JavaScript, q, shipped_demos(), tmpl) ==
          build_prompt(Task::Appl, Lang::JavaScript, q, shipped_demos(), tmpl));
}

TEST_CASE("build_prompt on a missing demonstration") {
    DemoLibrary empty;
    PromptTemplate tmpl;
    CHECK_THROWS_AS(build_prompt(Task::Appl, Lang::R, question_for(Task::Appl), empty, tmpl),
                    MissingDemonstrationError);
}

TEST_CASE("prompt template file loads and keeps stop sequences") {
    auto tmpl = load_prompt_template(ts::data_dir() / "prompt_template.json");
    CHECK(!tmpl.stop_sequences.empty());

    auto dir = ts::fresh_tmp_dir("tmpl");
    util::write_file(dir / "bad.json", R"({"stop_sequences": []})");
    CHECK_THROWS(load_prompt_template(dir / "bad.json"));
}

TEST_CASE("validate_demo_library flags structural problems") {
    DemoLibrary lib;
    // Build a small broken library: one task, missing languages, bad counts,
    // diverging questions.
    Demonstration py;
    py.task = Task::Appl;
    py.lang = Lang::Python;
    py.shots = {{"Q one", "1", "print(1)"}, {"Q two", "2", "print(2)"}, {"Q three", "3", "print(3)"}};
    Demonstration r;
    r.task = Task::Appl;
    r.lang = Lang::R;
    r.shots = {{"Q one", "1", "cat(1)"}, {"Q DIFFERENT", "2", "cat(2)"}, {"Q three", "3", "cat(3)"}};
    lib.add(py);
    lib.add(r);

    auto report = validate_demo_library(lib, default_toolchains(), {}, ts::fresh_tmp_dir("dv"));
    CHECK(!report.ok());
    int missing = 0, mismatched = 0;
    for (const auto& v : report.violations) {
        if (v.find("MissingDemonstration") != std::string::npos) ++missing;
        if (v.find("QuestionMismatch") != std::string::npos) ++mismatched;
    }
    CHECK(missing == 23);  // 25 combinations minus the two provided
    CHECK(mismatched == 1);
}

TEST_CASE("validate_demo_library detects a wrong demo answer by executing it") {
    auto probes = probe_toolchains(default_toolchains());
    bool python_present = false;
    for (const auto& p : probes) python_present |= p.lang == Lang::Python && p.present;
    if (!python_present) return;

    DemoLibrary lib;
    Demonstration demo;
    demo.task = Task::Appl;
    demo.lang = Lang::Python;
    demo.shots = {{"Q one", "5", "print(5)"},
                  {"Q two", "6", "print(99)"},  // wrong on purpose
                  {"Q three", "7", "print(7)"}};
    lib.add(demo);

    auto report = validate_demo_library(lib, default_toolchains(), {Lang::Python},
                                        ts::fresh_tmp_dir("dv2"));
    bool found = false;
    for (const auto& v : report.violations)
        found |= v.find("DemoAnswerMismatch(appl, python, shot 1)") != std::string::npos;
    CHECK(found);
}

TEST_CASE("absent toolchains are skipped with a warning, never failed") {
    DemoLibrary lib;
    Demonstration demo;
    demo.task = Task::Appl;
    demo.lang = Lang::R;
    demo.shots = {{"Q one", "1", "cat(1)"}, {"Q two", "2", "cat(2)"}, {"Q three", "3", "cat(3)"}};
    lib.add(demo);

    // R not in the available set: execution must be skipped.
    auto report = validate_demo_library(lib, default_toolchains(), {Lang::Python},
                                        ts::fresh_tmp_dir("dv3"));
    bool warned = false;
    for (const auto& w : report.warnings) warned |= w.find("execution skipped for r") != std::string::npos;
    CHECK(warned);
    for (const auto& v : report.violations)
        CHECK(v.find("DemoAnswerMismatch") == std::string::npos);
}
