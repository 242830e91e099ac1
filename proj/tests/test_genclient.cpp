#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "multipot/genclient.hpp"
#include "multipot/util.hpp"
#include "test_support.hpp"

using namespace multipot;
using nlohmann::json;
namespace ts = multipot::testsupport;

namespace {

// Local OpenAI-style completion endpoint for client tests.
class MockEndpoint {
public:
    MockEndpoint() {
        server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
            requests_seen += 1;
            if (fail_first_n > 0) {
                fail_first_n -= 1;
                res.status = rate_limit_flavor ? 429 : 503;
                if (rate_limit_flavor) res.set_header("Retry-After", "0");
                res.set_content("busy", "text/plain");
                return;
            }
            auto body = json::parse(req.body);
            last_body = body;
            const int n = body.value("n", 1);
            json choices = json::array();
            for (int i = 0; i < n; ++i) {
                json logprobs;
                logprobs["token_logprobs"] = {-0.1, -0.2, -0.3};
                choices.push_back({{"text", "print(" + std::to_string(i) + ")"},
                                   {"logprobs", logprobs}});
            }
            res.set_content(json{{"choices", choices}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockEndpoint() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::atomic<int> requests_seen{0};
    std::atomic<int> fail_first_n{0};
    bool rate_limit_flavor = false;
    json last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

GenRequest request_of(const std::string& prompt, double t, int n, const std::string& tag) {
    GenRequest req;
    req.prompt = prompt;
    req.temperature = t;
    req.top_p = 1.0;
    req.n = n;
    req.max_tokens = 64;
    req.stop = {"\nQ:"};
    req.seed_tag = tag;
    return req;
}

}  // namespace

TEST_CASE("generate live: n samples with summed logprobs") {
    MockEndpoint mock;
    EndpointConfig cfg;
    cfg.base_url = mock.url();
    GenClient client(cfg, GenMode::Live, nullptr);

    auto samples = client.generate(request_of("p", 0.4, 5, "t1"), Lang::Python);
    REQUIRE(samples.size() == 5);
    for (const auto& s : samples) {
        CHECK(s.cum_logprob == doctest::Approx(-0.6));
        CHECK(s.n_tokens == 3);
        CHECK(s.origin == SampleOrigin::Live);
        CHECK(s.lang == Lang::Python);
    }
    CHECK(mock.last_body["temperature"].get<double>() == doctest::Approx(0.4));
    CHECK(mock.last_body["top_p"].get<double>() == doctest::Approx(1.0));
    CHECK(mock.last_body["n"].get<int>() == 5);
}

TEST_CASE("greedy invariant: t=0 requires n=1") {
    MockEndpoint mock;
    EndpointConfig cfg;
    cfg.base_url = mock.url();
    GenClient client(cfg, GenMode::Live, nullptr);
    CHECK_THROWS_AS(client.generate(request_of("p", 0.0, 3, "t"), Lang::Python),
                    std::invalid_argument);
    CHECK(client.generate(request_of("p", 0.0, 1, "t"), Lang::Python).size() == 1);
}

TEST_CASE("record then replay is byte-identical and ordered") {
    MockEndpoint mock;
    auto dir = ts::fresh_tmp_dir("transcript");
    auto path = dir / "t.jsonl";

    EndpointConfig cfg;
    cfg.base_url = mock.url();
    std::vector<GenSample> recorded;
    {
        Transcript transcript = Transcript::open(path, /*writable=*/true);
        GenClient client(cfg, GenMode::Record, &transcript);
        recorded = client.generate(request_of("prompt body", 0.4, 3, "k1"), Lang::Cpp);
        CHECK(transcript.size() == 1);
    }
    {
        Transcript transcript = Transcript::open(path, /*writable=*/false);
        GenClient client(cfg, GenMode::Replay, &transcript);
        auto replayed = client.generate(request_of("prompt body", 0.4, 3, "k1"), Lang::Cpp);
        REQUIRE(replayed.size() == recorded.size());
        for (size_t i = 0; i < replayed.size(); ++i) {
            CHECK(replayed[i].code == recorded[i].code);
            CHECK(replayed[i].cum_logprob == recorded[i].cum_logprob);
            CHECK(replayed[i].origin == SampleOrigin::Replay);
        }
        // No HTTP traffic during replay beyond the recording call.
        CHECK(mock.requests_seen.load() == 1);
    }
}

TEST_CASE("replay miss is an error, not a silent live call") {
    MockEndpoint mock;
    auto dir = ts::fresh_tmp_dir("transcript-miss");
    Transcript transcript = Transcript::open(dir / "t.jsonl", false);
    EndpointConfig cfg;
    cfg.base_url = mock.url();
    GenClient client(cfg, GenMode::Replay, &transcript);
    CHECK_THROWS_AS(client.generate(request_of("p", 0.4, 1, "nope"), Lang::R), TranscriptMissError);
    CHECK(mock.requests_seen.load() == 0);
}

TEST_CASE("transcript keys separate params, prompts and tags") {
    auto r1 = request_of("p", 0.4, 5, "tag");
    auto r2 = request_of("p", 0.0, 1, "tag");
    auto r3 = request_of("other", 0.4, 5, "tag");
    auto r4 = request_of("p", 0.4, 5, "tag2");
    CHECK(Transcript::make_key(r1) != Transcript::make_key(r2));
    CHECK(Transcript::make_key(r1) != Transcript::make_key(r3));
    CHECK(Transcript::make_key(r1) != Transcript::make_key(r4));
    auto r5 = r1;
    r5.seed = 7;
    CHECK(Transcript::make_key(r1) != Transcript::make_key(r5));
    CHECK(Transcript::make_key(r1) == Transcript::make_key(request_of("p", 0.4, 5, "tag")));
}

TEST_CASE("retries on transient errors, then succeeds") {
    MockEndpoint mock;
    mock.fail_first_n = 2;
    EndpointConfig cfg;
    cfg.base_url = mock.url();
    cfg.backoff_base_ms = 1;
    GenClient client(cfg, GenMode::Live, nullptr);
    auto samples = client.generate(request_of("p", 0.4, 1, "t"), Lang::Java);
    CHECK(samples.size() == 1);
    CHECK(mock.requests_seen.load() == 3);
}

TEST_CASE("rate limiting surfaces after exhausting retries") {
    MockEndpoint mock;
    mock.rate_limit_flavor = true;
    mock.fail_first_n = 100;
    EndpointConfig cfg;
    cfg.base_url = mock.url();
    cfg.backoff_base_ms = 1;
    cfg.max_attempts = 3;
    GenClient client(cfg, GenMode::Live, nullptr);
    CHECK_THROWS_AS(client.generate(request_of("p", 0.4, 1, "t"), Lang::Java), RateLimitedError);
    CHECK(mock.requests_seen.load() == 3);
}

TEST_CASE("strip_to_code") {
    SUBCASE("fenced block with trailing prose") {
        const std::string completion =
            "Sure, here is the program:\n```python\nx = 1\nprint(x)\n```\nThe answer is 1.";
        CHECK(strip_to_code(completion, Lang::Python) == "x = 1\nprint(x)");
    }
    SUBCASE("raw code unchanged") {
        CHECK(strip_to_code("print(42)", Lang::Python) == "print(42)");
    }
    SUBCASE("cut at the first stop sequence") {
        CHECK(strip_to_code("print(1)\nQ: next question\nprint(2)", Lang::Python, {"\nQ:"}) ==
              "print(1)");
    }
    SUBCASE("prose only is an empty completion") {
        CHECK_THROWS_AS(strip_to_code("The answer is 42.", Lang::Python), EmptyCompletionError);
        CHECK_THROWS_AS(strip_to_code("", Lang::Python), EmptyCompletionError);
        CHECK_THROWS_AS(strip_to_code("```\n\n```", Lang::Python), EmptyCompletionError);
    }
    SUBCASE("unterminated fence keeps the body") {
        CHECK(strip_to_code("```\nprint(3)\n", Lang::Python) == "print(3)");
    }
}


TEST_CASE("chat-style endpoint parses message content and logprobs") {
    httplib::Server chat;
    chat.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body);
        CHECK(body.contains("messages"));
        json logprobs;
        logprobs["content"] = {{{"logprob", -0.25}}, {{"logprob", -0.5}}};
        json choice = {{"message", {{"role", "assistant"}, {"content", "print(9)"}}},
                       {"logprobs", logprobs}};
        res.set_content(json{{"choices", json::array({choice})}}.dump(), "application/json");
    });
    int port = chat.bind_to_any_port("127.0.0.1");
    std::thread t([&] { chat.listen_after_bind(); });
    chat.wait_until_ready();

    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.style = EndpointConfig::Style::Chat;
    GenClient client(cfg, GenMode::Live, nullptr);
    auto samples = client.generate(request_of("p", 0.4, 1, "chat"), Lang::Python);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].code == "print(9)");
    CHECK(samples[0].cum_logprob == doctest::Approx(-0.75));
    CHECK(samples[0].n_tokens == 2);

    chat.stop();
    t.join();
}

TEST_CASE("length-normalized logprob variant") {
    MockEndpoint mock;
    EndpointConfig cfg;
    cfg.base_url = mock.url();
    GenClient client(cfg, GenMode::Live, nullptr);
    client.set_length_normalized(true);
    auto samples = client.generate(request_of("p", 0.4, 1, "t"), Lang::Python);
    REQUIRE(samples.size() == 1);
    // Raw sum -0.6 over 3 tokens.
    CHECK(samples[0].cum_logprob == doctest::Approx(-0.2));
    CHECK(samples[0].n_tokens == 3);
}

TEST_CASE("per-request deadline keeps generate from blocking") {
    httplib::Server slow;
    slow.Post("/v1/completions", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2000));
        res.set_content("{}", "application/json");
    });
    int port = slow.bind_to_any_port("127.0.0.1");
    std::thread t([&] { slow.listen_after_bind(); });
    slow.wait_until_ready();

    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.request_timeout_ms = 150;
    cfg.max_attempts = 1;
    cfg.backoff_base_ms = 1;
    GenClient client(cfg, GenMode::Live, nullptr);

    auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(client.generate(request_of("p", 0.4, 1, "t"), Lang::R), TransportError);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    CHECK(elapsed < 1500);

    slow.stop();
    t.join();
}
