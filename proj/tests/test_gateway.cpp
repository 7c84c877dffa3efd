#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "depsteer/common.hpp"
#include "depsteer/gateway/gateway.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

using namespace depsteer;
using namespace depsteer::gateway;
using nlohmann::json;

namespace {

std::vector<ChatMessage> chat(const std::string& system, const std::string& user) {
    std::vector<ChatMessage> messages;
    if (!system.empty()) messages.push_back({"system", system});
    messages.push_back({"user", user});
    return messages;
}

}  // namespace

TEST_CASE("role labels round trip") {
    for (const auto role : {ModelRole::Target, ModelRole::Attacker, ModelRole::Scorer,
                            ModelRole::Summarizer, ModelRole::Embedder}) {
        CHECK(role_from_label(role_label(role)) == role);
    }
    CHECK_THROWS_AS(role_from_label("oracle"), ConfigError);
}

TEST_CASE("decoding defaults and override precedence") {
    const Decoding base;
    CHECK(base.temperature == 0.6);
    CHECK(base.top_p == 0.9);
    CHECK(base.max_tokens == 1024);

    DecodingOverrides overrides;
    overrides.temperature = 0.2;
    overrides.max_tokens = 64;
    const Decoding merged = apply_overrides(base, overrides);
    CHECK(merged.temperature == 0.2);
    CHECK(merged.top_p == 0.9);
    CHECK(merged.max_tokens == 64);
}

TEST_CASE("endpoint validation rejects malformed settings") {
    ModelEndpoint ep;
    ep.base_url = "http://127.0.0.1:1";
    ep.model_name = "m";
    CHECK_NOTHROW(ep.validate());

    auto broken = ep;
    broken.base_url = "";
    CHECK_THROWS_AS(broken.validate(), ConfigError);
    broken = ep;
    broken.model_name = "";
    CHECK_THROWS_AS(broken.validate(), ConfigError);
    broken = ep;
    broken.decoding.top_p = 0.0;
    CHECK_THROWS_AS(broken.validate(), ConfigError);
    broken = ep;
    broken.decoding.temperature = -0.1;
    CHECK_THROWS_AS(broken.validate(), ConfigError);
    broken = ep;
    broken.retry.attempts = 0;
    CHECK_THROWS_AS(broken.validate(), ConfigError);
}

TEST_CASE("mock_complete matches the first triggered rule") {
    const std::vector<MockRule> rules = {
        {"alpha", "first", "first-miss", 1.0},
        {"beta", "second", "second-miss", 1.0},
    };
    CHECK(mock_complete(rules, chat("contains alpha here", "q"), 0) == "first");
    CHECK(mock_complete(rules, chat("only beta here", "q"), 0) == "second");
    CHECK(mock_complete(rules, chat("alpha and beta", "q"), 0) == "first");
    // No trigger match or no system message: first rule's else branch.
    CHECK(mock_complete(rules, chat("nothing relevant", "q"), 0) == "first-miss");
    CHECK(mock_complete(rules, chat("", "alpha in user text"), 0) == "first-miss");
}

TEST_CASE("mock_complete is deterministic in (rules, messages, seed)") {
    const std::vector<MockRule> rules = {{"go", "yes", "no", 0.5}};
    const auto messages = chat("go now", "q");
    for (std::uint64_t seed : {0ull, 1ull, 77ull}) {
        CHECK(mock_complete(rules, messages, seed) ==
              mock_complete(rules, messages, seed));
    }
    // Degenerate rates never consult the seed.
    const std::vector<MockRule> always = {{"go", "yes", "no", 1.0}};
    const std::vector<MockRule> never = {{"go", "yes", "no", 0.0}};
    CHECK(mock_complete(always, messages, 3) == "yes");
    CHECK(mock_complete(never, messages, 3) == "no");
}

TEST_CASE("mock hit rate is calibrated over 1000 seeded draws") {
    const std::vector<MockRule> rules = {{"go", "hit", "miss", 0.7}};
    const auto messages = chat("go now", "q");
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        if (mock_complete(rules, messages, seed) == "hit") ++hits;
    }
    // Binomial(1000, 0.7): mean 700, sd ~14.5; +-30 is just over 2 sd.
    CHECK(hits >= 670);
    CHECK(hits <= 730);
}

TEST_CASE("parse_mock_rules substitutes the target and validates") {
    const auto rules = parse_mock_rules(
        "{\"trigger\": \"use {target}\", \"emission\": \"import {target}\", "
        "\"else_emission\": \"no\", \"hit_rate\": 0.25}\n"
        "\n"
        "{\"trigger\": \"\", \"else_emission\": \"fallback\"}\n",
        "demo_pkg");
    REQUIRE(rules.size() == 2);
    CHECK(rules[0].trigger == "use demo_pkg");
    CHECK(rules[0].emission == "import demo_pkg");
    CHECK(rules[0].hit_rate == 0.25);
    CHECK(rules[1].else_emission == "fallback");

    CHECK_THROWS_AS(parse_mock_rules("not json\n", "x"), ConfigError);
    CHECK_THROWS_AS(parse_mock_rules("{\"hit_rate\": 1.5}\n", "x"), ConfigError);
    CHECK_THROWS_AS(parse_mock_rules("", "x"), ConfigError);
    CHECK_THROWS_AS(load_mock_rules("/nonexistent/rules.jsonl", "x"), ConfigError);
}

TEST_CASE("MockModel captures calls when asked") {
    MockModel model({{"t", "a", "b", 1.0}}, true);
    const auto messages = chat("t", "hello");
    model.complete(messages, {}, 0);
    model.complete(chat("", "second"), {}, 1);
    const auto calls = model.captured_calls();
    REQUIRE(calls.size() == 2);
    CHECK(calls[0][0].content == "t");
    CHECK(calls[1].back().content == "second");
}

TEST_CASE("ScriptedModel replays and repeats the last reply") {
    ScriptedModel model({"one", "two", "three"});
    const auto messages = chat("", "q");
    CHECK(model.complete(messages, {}, 0) == "one");
    CHECK(model.complete(messages, {}, 0) == "two");
    CHECK(model.complete(messages, {}, 0) == "three");
    CHECK(model.complete(messages, {}, 0) == "three");
    CHECK(model.call_count() == 4);
    CHECK(model.captured_calls().size() == 4);
    CHECK_THROWS_AS(ScriptedModel(std::vector<std::string>{}), ConfigError);
}

TEST_CASE("mock_complete rejects an empty rule set") {
    const std::vector<MockRule> empty;
    CHECK_THROWS_AS(mock_complete(empty, chat("s", "u"), 0), ConfigError);
    CHECK_THROWS_AS(MockModel(std::vector<MockRule>{}), ConfigError);
}

TEST_CASE("gateway routes by role and rejects missing backends") {
    Gateway gw;
    gw.set_backend(ModelRole::Target,
                   std::make_shared<MockModel>(std::vector<MockRule>{
                       {"", "", "target-reply", 1.0}}));
    gw.set_backend(ModelRole::Scorer,
                   std::make_shared<MockModel>(std::vector<MockRule>{
                       {"", "", "SCORE: 7", 1.0}}));
    CHECK(gw.has_backend(ModelRole::Target));
    CHECK(gw.has_backend(ModelRole::Scorer));
    CHECK_FALSE(gw.has_backend(ModelRole::Attacker));

    CHECK(gw.complete(ModelRole::Target, chat("s", "u")) == "target-reply");
    CHECK(gw.complete(ModelRole::Scorer, chat("s", "u")) == "SCORE: 7");
    CHECK_THROWS_AS(gw.complete(ModelRole::Attacker, chat("s", "u")), ConfigError);
    CHECK_THROWS_AS(gw.embed("text"), ConfigError);
    CHECK_THROWS_AS(gw.set_backend(ModelRole::Target, nullptr), ConfigError);
}

TEST_CASE("gateway enforces the backend's bound role") {
    ModelEndpoint ep;
    ep.role = ModelRole::Scorer;
    ep.base_url = "http://127.0.0.1:1";
    ep.model_name = "judge";
    auto client = std::make_shared<HttpChatClient>(ep);
    Gateway gw;
    CHECK_THROWS_AS(gw.set_backend(ModelRole::Target, client), ConfigError);
    CHECK_NOTHROW(gw.set_backend(ModelRole::Scorer, client));
}

namespace {

struct TestServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    TestServer() = default;
    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

ModelEndpoint local_endpoint(const TestServer& server) {
    ModelEndpoint ep;
    ep.base_url = server.url();
    ep.model_name = "test-model";
    ep.timeout_seconds = 5;
    ep.retry.attempts = 3;
    ep.retry.backoff_ms = 0;
    return ep;
}

}  // namespace

TEST_CASE("HttpChatClient round trips against a local server") {
    TestServer server;
    json seen_body;
    server.server.Post("/chat/completions",
                       [&](const httplib::Request& req, httplib::Response& res) {
                           seen_body = json::parse(req.body);
                           const json reply = {
                               {"choices",
                                {{{"message", {{"content", "local reply"}}}}}}};
                           res.set_content(reply.dump(), "application/json");
                       });
    server.start();

    HttpChatClient client(local_endpoint(server));
    DecodingOverrides overrides;
    overrides.temperature = 0.1;
    const std::string reply = client.complete(chat("sys", "user text"), overrides, 0);
    CHECK(reply == "local reply");
    CHECK(seen_body["model"] == "test-model");
    CHECK(seen_body["temperature"] == 0.1);
    CHECK(seen_body["top_p"] == 0.9);
    CHECK(seen_body["messages"].size() == 2);
    CHECK(seen_body["messages"][0]["role"] == "system");
    CHECK(seen_body["messages"][1]["content"] == "user text");
}

TEST_CASE("HttpChatClient retries 5xx and then succeeds") {
    TestServer server;
    std::atomic<int> calls{0};
    server.server.Post("/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           if (calls.fetch_add(1) == 0) {
                               res.status = 503;
                               return;
                           }
                           const json reply = {
                               {"choices",
                                {{{"message", {{"content", "after retry"}}}}}}};
                           res.set_content(reply.dump(), "application/json");
                       });
    server.start();

    HttpChatClient client(local_endpoint(server));
    CHECK(client.complete(chat("s", "u"), {}, 0) == "after retry");
    CHECK(calls.load() == 2);
}

TEST_CASE("HttpChatClient treats 4xx as fatal without retries") {
    TestServer server;
    std::atomic<int> calls{0};
    server.server.Post("/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           calls.fetch_add(1);
                           res.status = 400;
                       });
    server.start();

    HttpChatClient client(local_endpoint(server));
    CHECK_THROWS_AS(client.complete(chat("s", "u"), {}, 0), TransportError);
    CHECK(calls.load() == 1);
}

TEST_CASE("HttpChatClient flags malformed reply bodies without retrying") {
    TestServer server;
    std::atomic<int> calls{0};
    server.server.Post("/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           // First reply is not JSON, second is JSON with the
                           // content field missing; neither may be retried.
                           if (calls.fetch_add(1) == 0) {
                               res.set_content("not json at all", "text/plain");
                           } else {
                               res.set_content("{\"choices\": []}", "application/json");
                           }
                       });
    server.start();

    HttpChatClient client(local_endpoint(server));
    CHECK_THROWS_AS(client.complete(chat("s", "u"), {}, 0), TransportError);
    CHECK(calls.load() == 1);
    CHECK_THROWS_AS(client.complete(chat("s", "u"), {}, 0), TransportError);
    CHECK(calls.load() == 2);
}

TEST_CASE("HttpChatClient rejects empty message lists before sending") {
    auto ep = ModelEndpoint{};
    ep.base_url = "http://127.0.0.1:1";
    ep.model_name = "m";
    HttpChatClient client(ep);
    CHECK_THROWS_AS(client.complete({}, {}, 0), EvaluationError);
}

TEST_CASE("HttpChatClient surfaces transport failures after retries") {
    // Nothing listens on this port; every attempt fails at connect time.
    ModelEndpoint ep;
    ep.base_url = "http://127.0.0.1:1";
    ep.model_name = "m";
    ep.timeout_seconds = 1;
    ep.retry.attempts = 2;
    ep.retry.backoff_ms = 0;
    HttpChatClient client(ep);
    CHECK_THROWS_AS(client.complete(chat("s", "u"), {}, 0), TransportError);
}

TEST_CASE("HttpChatClient sends a bearer token from the environment") {
    TestServer server;
    std::string seen_auth;
    server.server.Post("/chat/completions",
                       [&](const httplib::Request& req, httplib::Response& res) {
                           seen_auth = req.get_header_value("Authorization");
                           const json reply = {
                               {"choices", {{{"message", {{"content", "ok"}}}}}}};
                           res.set_content(reply.dump(), "application/json");
                       });
    server.start();

    ::setenv("DEPSTEER_TEST_API_KEY", "sekrit-token", 1);
    auto ep = local_endpoint(server);
    ep.api_key_env = "DEPSTEER_TEST_API_KEY";
    HttpChatClient client(ep);
    CHECK(client.complete(chat("s", "u"), {}, 0) == "ok");
    CHECK(seen_auth == "Bearer sekrit-token");

    ep.api_key_env = "DEPSTEER_UNSET_API_KEY";
    ::unsetenv("DEPSTEER_UNSET_API_KEY");
    HttpChatClient unset(ep);
    CHECK_THROWS_AS(unset.complete(chat("s", "u"), {}, 0), ConfigError);
}

TEST_CASE("HttpEmbeddingClient parses embedding replies") {
    TestServer server;
    server.server.Post("/embeddings",
                       [&](const httplib::Request& req, httplib::Response& res) {
                           const json body = json::parse(req.body);
                           CHECK(body["input"] == "embed me");
                           const json reply = {
                               {"data", {{{"embedding", {0.25, -0.5, 1.0}}}}}};
                           res.set_content(reply.dump(), "application/json");
                       });
    server.start();

    HttpEmbeddingClient client(local_endpoint(server));
    const auto vec = client.embed("embed me");
    CHECK(vec == std::vector<double>{0.25, -0.5, 1.0});
}
