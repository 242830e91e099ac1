#include "multipot/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "multipot/util.hpp"

namespace multipot {

std::string_view tie_order_name(TieOrder order) {
    switch (order) {
        case TieOrder::CumProbDesc: return "cumprob";
        case TieOrder::LengthAsc: return "length_asc";
        case TieOrder::LengthDesc: return "length_desc";
        case TieOrder::Random: return "random";
        case TieOrder::DataAmountAsc: return "data_amount_asc";
        case TieOrder::DataAmountDesc: return "data_amount_desc";
    }
    return "cumprob";
}

std::optional<TieOrder> tie_order_from_name(std::string_view name) {
    for (TieOrder o : {TieOrder::CumProbDesc, TieOrder::LengthAsc, TieOrder::LengthDesc,
                       TieOrder::Random, TieOrder::DataAmountAsc, TieOrder::DataAmountDesc})
        if (tie_order_name(o) == name) return o;
    return std::nullopt;
}

std::string_view tie_stat_name(TieStat stat) {
    return stat == TieStat::MaxLogprob ? "max" : "sum";
}

std::optional<TieStat> tie_stat_from_name(std::string_view name) {
    if (name == "max") return TieStat::MaxLogprob;
    if (name == "sum") return TieStat::SumLogprob;
    return std::nullopt;
}

VotePolicy default_vote_policy() { return VotePolicy{}; }

std::string numeric_group_key(double value) {
    double rounded = std::round(value * 1e6) / 1e6;
    if (rounded == 0.0) rounded = 0.0;  // collapse -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", rounded);
    return std::string("n:") + buf;
}

std::vector<AnswerGroup> group_candidates(const std::vector<CandidateAnswer>& candidates,
                                          const VotePolicy& policy) {
    std::map<std::string, AnswerGroup> groups;  // keyed -> deterministic order
    for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
        const CandidateAnswer& cand = candidates[i];
        if (cand.answer.is_error()) continue;
        std::string key = cand.answer.kind == Answer::Kind::Numeric
                              ? numeric_group_key(cand.answer.num)
                              : "s:" + cand.answer.str;
        auto [it, inserted] = groups.try_emplace(key);
        AnswerGroup& g = it->second;
        const int code_len = static_cast<int>(cand.sample.code.size());
        const int rank = policy.data_ranks[static_cast<int>(cand.sample.lang)];
        if (inserted) {
            g.key = key;
            g.representative = cand.answer;
            g.max_logprob = cand.sample.cum_logprob;
            g.sum_logprob = 0.0;
            g.min_code_len = code_len;
            g.max_code_len = code_len;
            g.min_data_rank = rank;
            g.max_data_rank = rank;
        }
        g.count += 1;
        g.members.push_back(i);
        g.max_logprob = std::max(g.max_logprob, cand.sample.cum_logprob);
        g.sum_logprob += cand.sample.cum_logprob;
        g.min_code_len = std::min(g.min_code_len, code_len);
        g.max_code_len = std::max(g.max_code_len, code_len);
        g.min_data_rank = std::min(g.min_data_rank, rank);
        g.max_data_rank = std::max(g.max_data_rank, rank);
    }

    std::vector<AnswerGroup> out;
    out.reserve(groups.size());
    for (auto& [key, g] : groups) out.push_back(std::move(g));
    return out;
}

namespace {

// Higher priority wins among count-tied groups. Derived only from group
// contents and the policy, so candidate permutation cannot change it.
double group_priority(const AnswerGroup& g, const VotePolicy& policy) {
    switch (policy.tie_order) {
        case TieOrder::CumProbDesc:
            return policy.tie_stat == TieStat::MaxLogprob ? g.max_logprob : g.sum_logprob;
        case TieOrder::LengthAsc: return -static_cast<double>(g.min_code_len);
        case TieOrder::LengthDesc: return static_cast<double>(g.max_code_len);
        case TieOrder::DataAmountAsc: return -static_cast<double>(g.min_data_rank);
        case TieOrder::DataAmountDesc: return static_cast<double>(g.max_data_rank);
        case TieOrder::Random: {
            std::uint64_t h = util::fnv1a(std::to_string(policy.seed) + "|" + g.key);
            return static_cast<double>(h >> 11);  // 53 bits, exact in a double
        }
    }
    return 0.0;
}

}  // namespace

VoteResult vote(const std::vector<CandidateAnswer>& candidates, const VotePolicy& policy) {
    VoteResult result;
    result.tally = group_candidates(candidates, policy);
    if (result.tally.empty()) {
        result.trace.push_back("no gradable results; abstain");
        return result;
    }

    int max_count = 0;
    for (const auto& g : result.tally) max_count = std::max(max_count, g.count);

    std::vector<const AnswerGroup*> tied;
    for (const auto& g : result.tally)
        if (g.count == max_count) tied.push_back(&g);

    if (tied.size() == 1) {
        result.elected = tied.front()->representative;
        result.trace.push_back("group " + tied.front()->key + " elected with " +
                               std::to_string(max_count) + " of " +
                               std::to_string(candidates.size()) + " votes");
        return result;
    }

    const AnswerGroup* best = tied.front();
    double best_priority = group_priority(*best, policy);
    for (size_t i = 1; i < tied.size(); ++i) {
        double p = group_priority(*tied[i], policy);
        // Exact priority ties fall back to the lexicographically smallest
        // key so the result stays total and order-independent.
        if (p > best_priority || (p == best_priority && tied[i]->key < best->key)) {
            best = tied[i];
            best_priority = p;
        }
    }

    std::string tie_desc = std::to_string(tied.size()) + " groups tied at " +
                           std::to_string(max_count) + " votes; order=" +
                           std::string(tie_order_name(policy.tie_order));
    if (policy.tie_order == TieOrder::CumProbDesc)
        tie_desc += "(" + std::string(tie_stat_name(policy.tie_stat)) + ")";
    result.trace.push_back(tie_desc);
    for (const AnswerGroup* g : tied) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g", group_priority(*g, policy));
        result.trace.push_back("  group " + g->key + " priority " + buf);
    }
    result.trace.push_back("tie broken in favor of " + best->key);
    result.elected = best->representative;
    return result;
}

namespace {

// Generates, strips, executes and grades one request worth of samples.
std::vector<CandidateAnswer> realize_samples(const QuestionRecord& q, Lang lang,
                                             const GenRequest& req, int index_base,
                                             PipelineContext& ctx) {
    std::vector<GenSample> samples = ctx.client->generate(req, lang);
    const ToolchainSpec& spec = ctx.toolchains->at(lang);
    const AnswerKind kind = task_answer_kind(q.task);

    auto grade_one = [&](GenSample sample, int index) -> CandidateAnswer {
        std::string code;
        try {
            code = strip_to_code(sample.code, lang, ctx.prompt_template.stop_sequences);
        } catch (const EmptyCompletionError&) {
            return make_illegal_candidate(std::move(sample), index, "completion contained no code");
        }
        sample.code = code;
        try {
            WorkdirGuard workdir(ctx.workdir_base, ctx.keep_workdirs);
            ExecOutcome outcome = execute(sample, spec, workdir.path(), ctx.keep_workdirs);
            return make_candidate(std::move(sample), index, outcome, q.ground_truth, kind, ctx.tol,
                                  *ctx.patterns);
        } catch (const UnwrappableSourceError&) {
            return make_illegal_candidate(std::move(sample), index, "source could not be wrapped");
        }
    };

    std::vector<CandidateAnswer> graded(samples.size());
    if (ctx.exec_pool && samples.size() > 1) {
        std::vector<std::future<CandidateAnswer>> futures;
        futures.reserve(samples.size());
        for (size_t i = 0; i < samples.size(); ++i) {
            GenSample s = samples[i];
            int index = index_base + static_cast<int>(i);
            futures.push_back(ctx.exec_pool->submit([&, s = std::move(s), index]() mutable {
                return grade_one(std::move(s), index);
            }));
        }
        for (size_t i = 0; i < futures.size(); ++i) graded[i] = futures[i].get();
    } else {
        for (size_t i = 0; i < samples.size(); ++i)
            graded[i] = grade_one(std::move(samples[i]), index_base + static_cast<int>(i));
    }
    return graded;
}

}  // namespace

GenRequest make_gen_request(const QuestionRecord& q, Lang lang, int n, double temperature,
                            const PipelineContext& ctx) {
    GenRequest req;
    req.prompt = build_prompt(q.task, lang, q, *ctx.demos, ctx.prompt_template);
    req.temperature = temperature;
    req.top_p = ctx.sampling.top_p;
    req.n = n;
    req.max_tokens = ctx.sampling.max_tokens;
    req.stop = ctx.prompt_template.stop_sequences;
    req.seed = ctx.request_seed;
    // Method-independent key: a k=1 greedy replay resolves to the same
    // transcript entry regardless of which command issued it.
    req.seed_tag = q.qid + ":" + std::string(lang_name(lang));
    return req;
}

QuestionRun run_self_consistency(const QuestionRecord& q, Lang lang, int k, PipelineContext& ctx) {
    if (k < 1) throw std::invalid_argument("self-consistency requires k >= 1");
    QuestionRun run;
    run.qid = q.qid;
    if (!ctx.available_langs.count(lang))
        throw ToolchainMissingError(lang, "requested for self-consistency");
    GenRequest req = make_gen_request(q, lang, k, ctx.sampling.temperature, ctx);
    run.candidates = realize_samples(q, lang, req, 0, ctx);
    run.vote = vote(run.candidates, ctx.policy);
    return run;
}

QuestionRun run_greedy(const QuestionRecord& q, Lang lang, PipelineContext& ctx) {
    QuestionRun run;
    run.qid = q.qid;
    if (!ctx.available_langs.count(lang))
        throw ToolchainMissingError(lang, "requested for greedy decoding");
    GenRequest req = make_gen_request(q, lang, 1, 0.0, ctx);
    run.candidates = realize_samples(q, lang, req, 0, ctx);
    run.vote = vote(run.candidates, ctx.policy);
    return run;
}

QuestionRun run_multipot(const QuestionRecord& q, const std::vector<Lang>& langs,
                         PipelineContext& ctx) {
    if (langs.empty()) throw std::invalid_argument("multipot requires at least one language");
    QuestionRun run;
    run.qid = q.qid;

    std::vector<Lang> usable;
    for (Lang lang : langs) {
        if (ctx.available_langs.count(lang)) {
            usable.push_back(lang);
        } else if (ctx.warnings) {
            ctx.warnings->push_back("excluding " + std::string(lang_name(lang)) + " for " + q.qid +
                                    ": toolchain absent");
        }
    }
    if (usable.empty()) {
        run.vote.trace.push_back("no usable languages; abstain");
        return run;
    }

    // One sample per language at the self-consistency sampling params.
    auto run_lang = [&](Lang lang, int index) -> std::vector<CandidateAnswer> {
        GenRequest req = make_gen_request(q, lang, 1, ctx.sampling.temperature, ctx);
        return realize_samples(q, lang, req, index, ctx);
    };

    if (ctx.gen_pool && usable.size() > 1) {
        std::vector<std::future<std::vector<CandidateAnswer>>> futures;
        for (size_t i = 0; i < usable.size(); ++i) {
            Lang lang = usable[i];
            int index = static_cast<int>(i);
            futures.push_back(ctx.gen_pool->submit([&, lang, index] { return run_lang(lang, index); }));
        }
        for (auto& f : futures) {  // join in language order
            auto part = f.get();
            run.candidates.insert(run.candidates.end(), part.begin(), part.end());
        }
    } else {
        for (size_t i = 0; i < usable.size(); ++i) {
            auto part = run_lang(usable[i], static_cast<int>(i));
            run.candidates.insert(run.candidates.end(), part.begin(), part.end());
        }
    }

    run.vote = vote(run.candidates, ctx.policy);
    return run;
}

}  // namespace multipot
