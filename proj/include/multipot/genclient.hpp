#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "multipot/domain.hpp"

namespace multipot {

struct GenRequest {
    std::string prompt;
    double temperature = 0.0;
    double top_p = 1.0;
    int n = 1;
    int max_tokens = 512;
    std::vector<std::string> stop;
    std::string seed_tag;  // replay key component, e.g. "<qid>:<lang>"
    std::optional<std::uint64_t> seed;  // forwarded to the endpoint; part of the replay key
};

enum class GenMode { Live, Record, Replay };

struct RecordedCompletion {
    std::string text;
    std::vector<double> token_logprobs;
};

struct TransportError : std::runtime_error {
    TransportError(const std::string& what, bool retryable)
        : std::runtime_error(what), retryable(retryable) {}
    bool retryable;
};

struct RateLimitedError : std::runtime_error {
    RateLimitedError(const std::string& what, int retry_after_ms)
        : std::runtime_error(what), retry_after_ms(retry_after_ms) {}
    int retry_after_ms;
};

struct TranscriptMissError : std::runtime_error {
    explicit TranscriptMissError(const std::string& key)
        : std::runtime_error("transcript miss for key " + key), key(key) {}
    std::string key;
};

struct EmptyCompletionError : std::runtime_error {
    EmptyCompletionError() : std::runtime_error("completion contains no code") {}
};

// Append-only store of recorded completions keyed by
// (seed_tag, prompt hash, request params hash). Lookup is exact-match;
// the first entry written for a key wins.
class Transcript {
public:
    Transcript() = default;

    // Loads existing entries (if the file exists) and keeps the path for
    // appends.
    static Transcript open(const std::filesystem::path& path, bool writable);

    static std::string make_key(const GenRequest& req);

    std::optional<std::vector<RecordedCompletion>> find(const std::string& key) const;

    // Persists before returning; duplicate keys are ignored.
    void append(const std::string& key, const GenRequest& req,
                const std::vector<RecordedCompletion>& completions);

    std::size_t size() const;
    std::string file_hash() const;  // hash of the backing file's bytes

private:
    mutable std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
    std::map<std::string, std::vector<RecordedCompletion>> entries_;
    std::filesystem::path file_;
    bool writable_ = false;
};

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8089";
    std::string model = "local";
    std::string api_key;            // usually from an env var
    enum class Style { Completion, Chat } style = Style::Completion;
    int request_timeout_ms = 60000;  // per-attempt deadline
    int max_attempts = 5;            // transport/rate errors only
    int backoff_base_ms = 100;
};

// OpenAI-compatible completion client with token logprobs. Thread safe;
// concurrency is bounded by the caller's generation pool.
class GenClient {
public:
    GenClient(EndpointConfig endpoint, GenMode mode, Transcript* transcript);

    // Returns n samples with cum_logprob = sum of token log-probabilities
    // (the default, length-biased statistic). Record mode persists to the
    // transcript before returning.
    std::vector<GenSample> generate(const GenRequest& req, Lang lang);

    // Sensitivity-run variant: report cum_logprob divided by the token
    // count instead of the raw sum. Transcript contents are unaffected.
    void set_length_normalized(bool enabled) { length_normalized_ = enabled; }
    bool length_normalized() const { return length_normalized_; }

    GenMode mode() const { return mode_; }

private:
    std::vector<RecordedCompletion> fetch_live(const GenRequest& req);

    EndpointConfig endpoint_;
    GenMode mode_;
    Transcript* transcript_;
    bool length_normalized_ = false;
};

// Removes code-fence markers and anything after the first stop sequence.
// Throws EmptyCompletionError when nothing code-like remains (classified
// downstream as an illegal output).
std::string strip_to_code(const std::string& completion, Lang lang,
                          const std::vector<std::string>& stop_sequences = {});

}  // namespace multipot
