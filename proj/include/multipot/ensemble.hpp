#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "multipot/answers.hpp"
#include "multipot/domain.hpp"
#include "multipot/executor.hpp"
#include "multipot/genclient.hpp"
#include "multipot/prompting.hpp"
#include "multipot/thread_pool.hpp"

namespace multipot {

// Tie orders mirror the stability ablation: cumulative probability
// (default), PoT length ascending/descending, seeded random, and
// pretraining data amount ascending/descending.
enum class TieOrder {
    CumProbDesc,
    LengthAsc,
    LengthDesc,
    Random,
    DataAmountAsc,
    DataAmountDesc,
};

std::string_view tie_order_name(TieOrder order);
std::optional<TieOrder> tie_order_from_name(std::string_view name);

// Statistic compared between tied groups under CumProbDesc: the best member
// logprob, or the group sum.
enum class TieStat { MaxLogprob, SumLogprob };

std::string_view tie_stat_name(TieStat stat);
std::optional<TieStat> tie_stat_from_name(std::string_view name);

struct VotePolicy {
    TieOrder tie_order = TieOrder::CumProbDesc;
    TieStat tie_stat = TieStat::MaxLogprob;
    std::uint64_t seed = 0;  // required for Random
    // data-amount rank per language (1 = least pretraining data); defaults
    // from the language table, overridable via config.
    std::array<int, 5> data_ranks = {2, 1, 3, 4, 5};  // indexed by Lang enum order
};

VotePolicy default_vote_policy();

struct AnswerGroup {
    std::string key;         // canonical grouping key
    Answer representative;   // answer of the first member
    int count = 0;
    std::vector<int> members;  // indices into the candidate list
    double max_logprob = 0.0;
    double sum_logprob = 0.0;
    int min_code_len = 0;
    int max_code_len = 0;
    int min_data_rank = 0;
    int max_data_rank = 0;
};

// Error candidates get no vote. String answers group by canonical equality;
// numeric answers group by the value rounded to 6 decimal places, which
// keeps grouping an equivalence relation.
std::vector<AnswerGroup> group_candidates(const std::vector<CandidateAnswer>& candidates,
                                          const VotePolicy& policy = {});

std::string numeric_group_key(double value);

struct VoteResult {
    std::optional<Answer> elected;       // nullopt = abstain (all errors)
    std::vector<AnswerGroup> tally;
    std::vector<std::string> trace;      // tie-break narrative
};

// Elects the most frequent answer; ties go to the policy's order. All-error
// input abstains (scored incorrect).
VoteResult vote(const std::vector<CandidateAnswer>& candidates, const VotePolicy& policy);

struct SamplingParams {
    double temperature = 0.4;
    double top_p = 1.0;
    int max_tokens = 640;
};

struct PipelineContext {
    GenClient* client = nullptr;
    const DemoLibrary* demos = nullptr;
    PromptTemplate prompt_template;
    const ToolchainSet* toolchains = nullptr;
    std::set<Lang> available_langs;
    const PatternTable* patterns = nullptr;
    VotePolicy policy;
    SamplingParams sampling;
    std::optional<std::uint64_t> request_seed;
    double tol = kDefaultTolerance;
    std::filesystem::path workdir_base = "work";
    bool keep_workdirs = false;
    ThreadPool* gen_pool = nullptr;   // optional; inline when null
    ThreadPool* exec_pool = nullptr;  // optional; inline when null
    std::vector<std::string>* warnings = nullptr;
};

struct QuestionRun {
    std::string qid;
    std::vector<CandidateAnswer> candidates;
    VoteResult vote;
};

// The request a pipeline run issues for (question, language); exposed so
// transcript tooling keys entries exactly the way a run will look them up.
GenRequest make_gen_request(const QuestionRecord& q, Lang lang, int n, double temperature,
                            const PipelineContext& ctx);

// k samples from one language at the sampling params, executed and voted.
QuestionRun run_self_consistency(const QuestionRecord& q, Lang lang, int k, PipelineContext& ctx);

// One sample per language; subsets support the language-count and
// language-type ablations. Languages with absent toolchains are excluded
// with a warning.
QuestionRun run_multipot(const QuestionRecord& q, const std::vector<Lang>& langs,
                         PipelineContext& ctx);

// Single greedy sample (t=0, n=1) from one language.
QuestionRun run_greedy(const QuestionRecord& q, Lang lang, PipelineContext& ctx);

}  // namespace multipot
