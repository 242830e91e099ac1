#include "multipot/prompting.hpp"

#include <json.hpp>

#include "multipot/answers.hpp"
#include "multipot/util.hpp"

namespace multipot {

namespace {

std::string strip_trailing_blank(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' '))
        s.pop_back();
    return s;
}

}  // namespace

Demonstration DemoLibrary::parse_file(const std::filesystem::path& path) {
    Demonstration demo;
    int declared_shots = -1;
    bool header_done = false;
    enum class Section { None, Question, Answer, Code } section = Section::None;
    std::string question, answer, code;

    auto flush_shot = [&]() {
        if (section == Section::None) return;
        DemoShot shot;
        shot.question = strip_trailing_blank(question);
        shot.answer_text = util::trim(answer);
        shot.code = strip_trailing_blank(code);
        demo.shots.push_back(std::move(shot));
        question.clear();
        answer.clear();
        code.clear();
    };

    for (const auto& line : util::split_lines(util::read_file(path))) {
        if (line == "--- question") {
            flush_shot();
            header_done = true;
            section = Section::Question;
            continue;
        }
        if (line == "--- answer") {
            section = Section::Answer;
            continue;
        }
        if (line == "--- code") {
            section = Section::Code;
            continue;
        }
        if (!header_done) {
            std::string trimmed = util::trim(line);
            if (trimmed.empty()) continue;
            auto colon = trimmed.find(':');
            if (colon == std::string::npos)
                throw std::runtime_error(path.string() + ": bad header line: " + line);
            std::string key = util::trim(trimmed.substr(0, colon));
            std::string value = util::trim(trimmed.substr(colon + 1));
            if (key == "task") {
                auto task = task_from_name(value);
                if (!task) throw std::runtime_error(path.string() + ": unknown task " + value);
                demo.task = *task;
            } else if (key == "lang") {
                auto lang = lang_from_name(value);
                if (!lang) throw std::runtime_error(path.string() + ": unknown lang " + value);
                demo.lang = *lang;
            } else if (key == "shots") {
                declared_shots = std::stoi(value);
            } else {
                throw std::runtime_error(path.string() + ": unknown header key " + key);
            }
            continue;
        }
        switch (section) {
            case Section::Question: question += line + "\n"; break;
            case Section::Answer: answer += line + "\n"; break;
            case Section::Code: code += line + "\n"; break;
            case Section::None:
                throw std::runtime_error(path.string() + ": content outside any section");
        }
    }
    flush_shot();

    if (declared_shots >= 0 && declared_shots != static_cast<int>(demo.shots.size()))
        throw std::runtime_error(path.string() + ": header declares " +
                                 std::to_string(declared_shots) + " shots, file has " +
                                 std::to_string(demo.shots.size()));
    return demo;
}

DemoLibrary DemoLibrary::load_dir(const std::filesystem::path& dir) {
    DemoLibrary lib;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".demo") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) lib.add(parse_file(file));
    return lib;
}

void DemoLibrary::add(Demonstration demo) {
    auto key = std::make_pair(demo.task, demo.lang);
    demos_[key] = std::move(demo);
}

const Demonstration* DemoLibrary::find(Task task, Lang lang) const {
    auto it = demos_.find({task, lang});
    return it == demos_.end() ? nullptr : &it->second;
}

std::vector<const Demonstration*> DemoLibrary::all() const {
    std::vector<const Demonstration*> out;
    for (const auto& [key, demo] : demos_) out.push_back(&demo);
    return out;
}

PromptTemplate load_prompt_template(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(util::read_file(path));
    PromptTemplate t;
    if (j.contains("preamble")) t.preamble = j["preamble"].get<std::string>();
    if (j.contains("shot_separator")) t.shot_separator = j["shot_separator"].get<std::string>();
    if (j.contains("question_header")) t.question_header = j["question_header"].get<std::string>();
    if (j.contains("stop_sequences")) {
        t.stop_sequences.clear();
        for (const auto& s : j["stop_sequences"]) t.stop_sequences.push_back(s.get<std::string>());
    }
    if (t.stop_sequences.empty())
        throw std::runtime_error(path.string() + ": stop_sequences must be non-empty");
    return t;
}

std::string build_prompt(Task task, Lang lang, const QuestionRecord& q,
                         const DemoLibrary& demos, const PromptTemplate& tmpl) {
    const Demonstration* demo = demos.find(task, lang);
    if (!demo) throw MissingDemonstrationError(task, lang);

    std::string prompt;
    if (!tmpl.preamble.empty()) prompt += tmpl.preamble + tmpl.shot_separator;
    for (const auto& shot : demo->shots) {
        prompt += tmpl.question_header + shot.question + "\n";
        prompt += shot.code;
        prompt += tmpl.shot_separator;
    }
    prompt += tmpl.question_header + q.text + "\n";
    return prompt;
}

DemoValidationReport validate_demo_library(const DemoLibrary& demos, const ToolchainSet& toolchains,
                                           const std::set<Lang>& available_langs,
                                           const std::filesystem::path& workdir_base) {
    DemoValidationReport report;

    for (const auto& task_info : all_tasks()) {
        const Task task = task_info.id;
        const Demonstration* reference = nullptr;
        for (const auto& lang_info : all_langs()) {
            const Lang lang = lang_info.id;
            const Demonstration* demo = demos.find(task, lang);
            if (!demo) {
                report.violations.push_back("MissingDemonstration(" + std::string(task_name(task)) +
                                            ", " + std::string(lang_name(lang)) + ")");
                continue;
            }
            if (static_cast<int>(demo->shots.size()) != task_info.shots)
                report.violations.push_back(
                    "ShotCountMismatch(" + std::string(task_name(task)) + ", " +
                    std::string(lang_name(lang)) + "): expected " +
                    std::to_string(task_info.shots) + ", got " +
                    std::to_string(demo->shots.size()));

            // Demonstrations of all languages must share the same example
            // questions, in the same order.
            if (!reference) {
                reference = demo;
            } else if (demo->shots.size() == reference->shots.size()) {
                for (size_t i = 0; i < demo->shots.size(); ++i) {
                    if (demo->shots[i].question != reference->shots[i].question)
                        report.violations.push_back(
                            "QuestionMismatch(" + std::string(task_name(task)) + ", " +
                            std::string(lang_name(lang)) + ", shot " + std::to_string(i) + ")");
                    if (demo->shots[i].answer_text != reference->shots[i].answer_text)
                        report.violations.push_back(
                            "AnswerMismatch(" + std::string(task_name(task)) + ", " +
                            std::string(lang_name(lang)) + ", shot " + std::to_string(i) + ")");
                }
            }
        }
    }

    // Execute every shot whose toolchain is present and compare against the
    // expected answer.
    for (const Demonstration* demo : demos.all()) {
        const auto spec_it = toolchains.find(demo->lang);
        if (spec_it == toolchains.end() || !available_langs.count(demo->lang)) {
            report.warnings.push_back("execution skipped for " +
                                      std::string(lang_name(demo->lang)) + " (toolchain absent)");
            continue;
        }
        const AnswerKind kind = task_answer_kind(demo->task);
        for (size_t i = 0; i < demo->shots.size(); ++i) {
            const DemoShot& shot = demo->shots[i];
            GenSample sample;
            sample.lang = demo->lang;
            sample.code = shot.code;
            WorkdirGuard workdir(workdir_base);
            ExecOutcome outcome = execute(sample, spec_it->second, workdir.path());
            Answer got = extract_answer(outcome, kind);
            Answer expected = kind == AnswerKind::Numeric
                                  ? Answer::number(std::strtod(shot.answer_text.c_str(), nullptr))
                                  : Answer::text(shot.answer_text);
            if (outcome.status != ExecStatus::Completed || !answer_equiv(got, expected)) {
                std::string detail = outcome.status == ExecStatus::Completed
                                         ? "printed \"" + util::trim(outcome.stdout_text) + "\""
                                         : std::string(exec_status_name(outcome.status));
                report.violations.push_back(
                    "DemoAnswerMismatch(" + std::string(task_name(demo->task)) + ", " +
                    std::string(lang_name(demo->lang)) + ", shot " + std::to_string(i) +
                    "): expected " + shot.answer_text + ", " + detail);
            }
        }
    }
    return report;
}

}  // namespace multipot
