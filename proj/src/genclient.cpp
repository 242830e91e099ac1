#include "multipot/genclient.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "multipot/util.hpp"

namespace multipot {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string params_signature(const GenRequest& req) {
    char head[160];
    std::snprintf(head, sizeof(head), "t=%.6g|p=%.6g|n=%d|max=%d|seed=%s|stop=", req.temperature,
                  req.top_p, req.n, req.max_tokens,
                  req.seed ? std::to_string(*req.seed).c_str() : "-");
    std::string sig = head;
    for (const auto& s : req.stop) {
        sig += s;
        sig += '\x1e';
    }
    return sig;
}

}  // namespace

Transcript Transcript::open(const std::filesystem::path& path, bool writable) {
    Transcript t;
    t.file_ = path;
    t.writable_ = writable;
    if (std::filesystem::exists(path)) {
        for (const auto& line : util::split_lines(util::read_file(path))) {
            if (util::trim(line).empty()) continue;
            json rec = json::parse(line);
            std::string key = rec["seed_tag"].get<std::string>() + "\x1f" +
                              rec["prompt_hash"].get<std::string>() + "\x1f" +
                              rec["params_hash"].get<std::string>();
            std::vector<RecordedCompletion> comps;
            for (const auto& c : rec["completions"]) {
                RecordedCompletion rc;
                rc.text = c["text"].get<std::string>();
                for (const auto& lp : c["token_logprobs"])
                    rc.token_logprobs.push_back(lp.is_null() ? 0.0 : lp.get<double>());
                comps.push_back(std::move(rc));
            }
            t.entries_.emplace(std::move(key), std::move(comps));  // first wins
        }
    }
    return t;
}

std::string Transcript::make_key(const GenRequest& req) {
    return req.seed_tag + "\x1f" + util::fnv1a_hex(req.prompt) + "\x1f" +
           util::fnv1a_hex(params_signature(req));
}

std::optional<std::vector<RecordedCompletion>> Transcript::find(const std::string& key) const {
    std::lock_guard lock(*mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void Transcript::append(const std::string& key, const GenRequest& req,
                        const std::vector<RecordedCompletion>& completions) {
    std::lock_guard lock(*mu_);
    auto [it, inserted] = entries_.emplace(key, completions);
    if (!inserted || !writable_ || file_.empty()) return;

    auto parts = util::split(key, '\x1f');
    ordered_json rec;
    rec["seed_tag"] = req.seed_tag;
    rec["prompt_hash"] = parts.size() > 1 ? parts[1] : "";
    rec["params_hash"] = parts.size() > 2 ? parts[2] : "";
    ordered_json comps = ordered_json::array();
    for (const auto& c : completions) {
        ordered_json jc;
        jc["text"] = c.text;
        jc["token_logprobs"] = c.token_logprobs;
        comps.push_back(std::move(jc));
    }
    rec["completions"] = std::move(comps);
    util::append_line(file_, rec.dump());
}

std::size_t Transcript::size() const {
    std::lock_guard lock(*mu_);
    return entries_.size();
}

std::string Transcript::file_hash() const {
    std::lock_guard lock(*mu_);
    if (file_.empty() || !std::filesystem::exists(file_)) return "none";
    return util::fnv1a_hex(util::read_file(file_));
}

GenClient::GenClient(EndpointConfig endpoint, GenMode mode, Transcript* transcript)
    : endpoint_(std::move(endpoint)), mode_(mode), transcript_(transcript) {
    if (mode_ != GenMode::Live && transcript_ == nullptr)
        throw std::invalid_argument("record/replay mode requires a transcript");
}

std::vector<GenSample> GenClient::generate(const GenRequest& req, Lang lang) {
    if (req.n < 1) throw std::invalid_argument("sample count must be >= 1");
    if (req.temperature < 0) throw std::invalid_argument("temperature must be >= 0");
    if (req.temperature == 0.0 && req.n != 1)
        throw std::invalid_argument("greedy decoding (t=0) requires n=1");

    const std::string key = Transcript::make_key(req);
    std::vector<RecordedCompletion> completions;
    SampleOrigin origin = SampleOrigin::Live;

    if (mode_ == GenMode::Replay) {
        auto hit = transcript_->find(key);
        if (!hit) throw TranscriptMissError(key);
        completions = std::move(*hit);
        origin = SampleOrigin::Replay;
    } else {
        completions = fetch_live(req);
        if (mode_ == GenMode::Record) transcript_->append(key, req, completions);
    }

    std::vector<GenSample> samples;
    samples.reserve(completions.size());
    for (const auto& c : completions) {
        GenSample s;
        s.lang = lang;
        s.code = c.text;
        s.cum_logprob = 0.0;
        for (double lp : c.token_logprobs) s.cum_logprob += lp;
        s.n_tokens = static_cast<int>(c.token_logprobs.size());
        if (length_normalized_ && s.n_tokens > 0) s.cum_logprob /= s.n_tokens;
        s.origin = origin;
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<RecordedCompletion> GenClient::fetch_live(const GenRequest& req) {
    const bool chat = endpoint_.style == EndpointConfig::Style::Chat;
    const std::string path = chat ? "/v1/chat/completions" : "/v1/completions";

    ordered_json body;
    body["model"] = endpoint_.model;
    if (chat) {
        body["messages"] = json::array({{{"role", "user"}, {"content", req.prompt}}});
        body["logprobs"] = true;
    } else {
        body["prompt"] = req.prompt;
        body["logprobs"] = 0;
    }
    body["max_tokens"] = req.max_tokens;
    body["temperature"] = req.temperature;
    body["top_p"] = req.top_p;
    body["n"] = req.n;
    if (req.seed) body["seed"] = *req.seed;
    if (!req.stop.empty()) body["stop"] = req.stop;

    std::string last_error = "no attempts made";
    for (int attempt = 0; attempt < endpoint_.max_attempts; ++attempt) {
        if (attempt > 0) {
            int backoff = endpoint_.backoff_base_ms * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        }

        httplib::Client client(endpoint_.base_url);
        client.set_connection_timeout(0, endpoint_.request_timeout_ms * 1000LL);
        client.set_read_timeout(endpoint_.request_timeout_ms / 1000,
                                (endpoint_.request_timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!endpoint_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;  // retryable
        }
        if (res->status == 429) {
            int retry_after_ms = endpoint_.backoff_base_ms;
            if (auto it = res->headers.find("Retry-After"); it != res->headers.end())
                retry_after_ms = std::max(retry_after_ms, std::atoi(it->second.c_str()) * 1000);
            last_error = "rate limited (429)";
            if (attempt + 1 >= endpoint_.max_attempts)
                throw RateLimitedError(last_error, retry_after_ms);
            std::this_thread::sleep_for(std::chrono::milliseconds(retry_after_ms));
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;  // retryable
        }
        if (res->status != 200)
            throw TransportError("endpoint returned " + std::to_string(res->status) + ": " +
                                     res->body,
                                 /*retryable=*/false);

        json reply = json::parse(res->body);
        std::vector<RecordedCompletion> completions;
        for (const auto& choice : reply["choices"]) {
            RecordedCompletion rc;
            if (chat) {
                rc.text = choice["message"]["content"].get<std::string>();
                if (choice.contains("logprobs") && choice["logprobs"].contains("content"))
                    for (const auto& tok : choice["logprobs"]["content"])
                        rc.token_logprobs.push_back(tok["logprob"].get<double>());
            } else {
                rc.text = choice["text"].get<std::string>();
                if (choice.contains("logprobs") && !choice["logprobs"].is_null())
                    for (const auto& lp : choice["logprobs"]["token_logprobs"])
                        rc.token_logprobs.push_back(lp.is_null() ? 0.0 : lp.get<double>());
            }
            completions.push_back(std::move(rc));
        }
        if (static_cast<int>(completions.size()) != req.n)
            throw TransportError("endpoint returned " + std::to_string(completions.size()) +
                                     " choices, expected " + std::to_string(req.n),
                                 /*retryable=*/false);
        return completions;
    }
    throw TransportError("giving up after " + std::to_string(endpoint_.max_attempts) +
                             " attempts: " + last_error,
                         /*retryable=*/true);
}

std::string strip_to_code(const std::string& completion, Lang lang,
                          const std::vector<std::string>& stop_sequences) {
    (void)lang;
    std::string text = completion;

    // Prefer the first fenced block when present.
    size_t fence = text.find("```");
    if (fence != std::string::npos) {
        size_t body_start = text.find('\n', fence);
        if (body_start == std::string::npos) throw EmptyCompletionError();
        ++body_start;
        size_t fence_end = text.find("```", body_start);
        text = fence_end == std::string::npos ? text.substr(body_start)
                                              : text.substr(body_start, fence_end - body_start);
    }

    // Cut at the earliest stop sequence.
    size_t cut = std::string::npos;
    for (const auto& stop : stop_sequences) {
        if (stop.empty()) continue;
        size_t pos = text.find(stop);
        if (pos != std::string::npos && pos < cut) cut = pos;
    }
    if (cut != std::string::npos) text = text.substr(0, cut);

    // Drop trailing whitespace; keep leading indentation of the first line.
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    while (!text.empty() && (text.front() == '\n' || text.front() == '\r')) text.erase(text.begin());

    if (util::trim(text).empty()) throw EmptyCompletionError();

    // A runnable program in any of the five languages carries at least one
    // of these; pure prose carries none.
    bool code_like = false;
    for (char c : text) {
        if (c == '(' || c == '=' || c == '{' || c == ';') {
            code_like = true;
            break;
        }
    }
    if (!code_like) throw EmptyCompletionError();
    return text;
}

}  // namespace multipot
