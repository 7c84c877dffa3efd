#include "depsteer/gateway/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "depsteer/common.hpp"
#include "httplib.h"
#include "json.hpp"

namespace depsteer::gateway {
namespace {

using nlohmann::json;

json messages_to_json(std::span<const ChatMessage> messages) {
    json out = json::array();
    for (const auto& m : messages) {
        out.push_back({{"role", m.role}, {"content", m.content}});
    }
    return out;
}

httplib::Headers auth_headers(const ModelEndpoint& endpoint) {
    httplib::Headers headers;
    if (!endpoint.api_key_env.empty()) {
        const char* token = std::getenv(endpoint.api_key_env.c_str());
        if (token == nullptr || *token == '\0') {
            throw ConfigError("api key environment variable is empty: " +
                              endpoint.api_key_env);
        }
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    return headers;
}

// POSTs `path` with retries per policy; returns the raw body of a 2xx reply.
std::string post_with_retries(const ModelEndpoint& endpoint,
                              const std::string& path, const std::string& body) {
    auto headers = auth_headers(endpoint);
    std::ostringstream attempt_log;
    int attempts = std::max(1, endpoint.retry.attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        httplib::Client client(endpoint.base_url);
        client.set_connection_timeout(endpoint.timeout_seconds);
        client.set_read_timeout(endpoint.timeout_seconds);
        client.set_write_timeout(endpoint.timeout_seconds);
        auto res = client.Post(path, headers, body, "application/json");
        if (res && res->status >= 200 && res->status < 300) return res->body;

        std::string failure;
        bool retryable;
        if (!res) {
            failure = httplib::to_string(res.error());
            retryable = true;
        } else {
            failure = "status " + std::to_string(res->status);
            retryable = res->status >= 500;
        }
        attempt_log << "attempt " << attempt << ": " << failure << "; ";
        if (!retryable || attempt == attempts) {
            throw TransportError("request to " + endpoint.base_url + path +
                                 " failed: " + attempt_log.str());
        }
        int backoff = endpoint.retry.backoff_ms << (attempt - 1);
        if (backoff > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        }
    }
    throw TransportError("unreachable retry state");
}

const ChatMessage* find_system_message(std::span<const ChatMessage> messages) {
    for (const auto& m : messages) {
        if (m.role == "system") return &m;
    }
    return nullptr;
}

}  // namespace

const char* role_label(ModelRole role) {
    switch (role) {
        case ModelRole::Target: return "target";
        case ModelRole::Attacker: return "attacker";
        case ModelRole::Scorer: return "scorer";
        case ModelRole::Summarizer: return "summarizer";
        case ModelRole::Embedder: return "embedder";
    }
    return "unknown";
}

ModelRole role_from_label(const std::string& label) {
    if (label == "target") return ModelRole::Target;
    if (label == "attacker") return ModelRole::Attacker;
    if (label == "scorer") return ModelRole::Scorer;
    if (label == "summarizer") return ModelRole::Summarizer;
    if (label == "embedder") return ModelRole::Embedder;
    throw ConfigError("unknown model role: " + label);
}

Decoding apply_overrides(const Decoding& base, const DecodingOverrides& overrides) {
    Decoding out = base;
    if (overrides.temperature) out.temperature = *overrides.temperature;
    if (overrides.top_p) out.top_p = *overrides.top_p;
    if (overrides.max_tokens) out.max_tokens = *overrides.max_tokens;
    return out;
}

void ModelEndpoint::validate() const {
    if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
    if (model_name.empty()) throw ConfigError("endpoint model_name is empty");
    if (decoding.temperature < 0.0) {
        throw ConfigError("temperature must be >= 0");
    }
    if (!(decoding.top_p > 0.0 && decoding.top_p <= 1.0)) {
        throw ConfigError("top_p must be in (0, 1]");
    }
    if (decoding.max_tokens <= 0) throw ConfigError("max_tokens must be positive");
    if (retry.attempts < 1) throw ConfigError("retry attempts must be >= 1");
    if (retry.backoff_ms < 0) throw ConfigError("retry backoff must be >= 0");
}

HttpChatClient::HttpChatClient(ModelEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
    endpoint_.validate();
}

std::string HttpChatClient::complete(std::span<const ChatMessage> messages,
                                     const DecodingOverrides& overrides,
                                     std::uint64_t /*seed*/) {
    if (messages.empty()) throw EvaluationError("chat request has no messages");
    Decoding decoding = apply_overrides(endpoint_.decoding, overrides);
    json body = {
        {"model", endpoint_.model_name},
        {"messages", messages_to_json(messages)},
        {"temperature", decoding.temperature},
        {"top_p", decoding.top_p},
        {"max_tokens", decoding.max_tokens},
    };
    std::string reply = post_with_retries(endpoint_, "/chat/completions", body.dump());
    json parsed = json::parse(reply, nullptr, false);
    if (parsed.is_discarded()) {
        throw TransportError("protocol error: non-JSON completion reply");
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty() ||
        !parsed["choices"][0].contains("message") ||
        !parsed["choices"][0]["message"].contains("content") ||
        !parsed["choices"][0]["message"]["content"].is_string()) {
        throw TransportError(
            "protocol error: completion reply missing choices[0].message.content");
    }
    return parsed["choices"][0]["message"]["content"].get<std::string>();
}

HttpEmbeddingClient::HttpEmbeddingClient(ModelEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
    endpoint_.validate();
}

std::vector<double> HttpEmbeddingClient::embed(const std::string& text) {
    json body = {{"model", endpoint_.model_name}, {"input", text}};
    std::string reply = post_with_retries(endpoint_, "/embeddings", body.dump());
    json parsed = json::parse(reply, nullptr, false);
    if (parsed.is_discarded()) {
        throw TransportError("protocol error: non-JSON embedding reply");
    }
    if (!parsed.contains("data") || !parsed["data"].is_array() ||
        parsed["data"].empty() || !parsed["data"][0].contains("embedding") ||
        !parsed["data"][0]["embedding"].is_array()) {
        throw TransportError(
            "protocol error: embedding reply missing data[0].embedding");
    }
    std::vector<double> out;
    for (const auto& v : parsed["data"][0]["embedding"]) {
        if (!v.is_number()) {
            throw TransportError("protocol error: non-numeric embedding entry");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

std::string mock_complete(std::span<const MockRule> rules,
                          std::span<const ChatMessage> messages,
                          std::uint64_t seed) {
    if (rules.empty()) throw ConfigError("mock model has no rules");
    const ChatMessage* system = find_system_message(messages);
    std::string_view system_text = system ? std::string_view(system->content)
                                          : std::string_view();
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const MockRule& rule = rules[i];
        if (rule.trigger.empty()) continue;
        if (system_text.find(rule.trigger) == std::string_view::npos) continue;
        if (rule.hit_rate >= 1.0) return rule.emission;
        if (rule.hit_rate <= 0.0) return rule.else_emission;
        double draw = unit_draw(mix_seed(seed, "mock-rule", i));
        return draw < rule.hit_rate ? rule.emission : rule.else_emission;
    }
    return rules.front().else_emission;
}

std::vector<MockRule> parse_mock_rules(const std::string& jsonl,
                                       const std::string& target_name) {
    std::vector<MockRule> rules;
    std::istringstream in(jsonl);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json parsed = json::parse(line, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            throw ConfigError("mock rules line " + std::to_string(line_no) +
                              " is not a JSON object");
        }
        MockRule rule;
        rule.trigger = parsed.value("trigger", std::string());
        rule.emission = parsed.value("emission", std::string());
        rule.else_emission = parsed.value("else_emission", std::string());
        rule.hit_rate = parsed.value("hit_rate", 1.0);
        if (rule.hit_rate < 0.0 || rule.hit_rate > 1.0) {
            throw ConfigError("mock rules line " + std::to_string(line_no) +
                              ": hit_rate outside [0,1]");
        }
        rule.trigger = replace_all(rule.trigger, "{target}", target_name);
        rule.emission = replace_all(rule.emission, "{target}", target_name);
        rule.else_emission = replace_all(rule.else_emission, "{target}", target_name);
        rules.push_back(std::move(rule));
    }
    if (rules.empty()) throw ConfigError("mock rules file contains no rules");
    return rules;
}

std::vector<MockRule> load_mock_rules(const std::string& path,
                                      const std::string& target_name) {
    return parse_mock_rules(read_file(path), target_name);
}

MockModel::MockModel(std::vector<MockRule> rules, bool capture_calls)
    : rules_(std::move(rules)), capture_(capture_calls) {
    if (rules_.empty()) throw ConfigError("mock model has no rules");
}

std::string MockModel::complete(std::span<const ChatMessage> messages,
                                const DecodingOverrides& /*overrides*/,
                                std::uint64_t seed) {
    if (capture_) {
        std::lock_guard<std::mutex> lock(mutex_);
        calls_.emplace_back(messages.begin(), messages.end());
    }
    return mock_complete(rules_, messages, seed);
}

std::vector<std::vector<ChatMessage>> MockModel::captured_calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

ScriptedModel::ScriptedModel(std::vector<std::string> replies)
    : replies_(std::move(replies)) {
    if (replies_.empty()) throw ConfigError("scripted model has no replies");
}

std::string ScriptedModel::complete(std::span<const ChatMessage> messages,
                                    const DecodingOverrides& /*overrides*/,
                                    std::uint64_t /*seed*/) {
    std::lock_guard<std::mutex> lock(mutex_);
    calls_.emplace_back(messages.begin(), messages.end());
    std::size_t index = std::min(next_, replies_.size() - 1);
    ++next_;
    return replies_[index];
}

std::vector<std::vector<ChatMessage>> ScriptedModel::captured_calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

std::size_t ScriptedModel::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_.size();
}

void Gateway::set_backend(ModelRole role,
                          std::shared_ptr<CompletionBackend> backend) {
    if (!backend) throw ConfigError("null backend");
    if (auto bound = backend->bound_role(); bound && *bound != role) {
        throw ConfigError(std::string("backend built for role ") +
                          role_label(*bound) + " registered under role " +
                          role_label(role));
    }
    backends_[role] = std::move(backend);
}

void Gateway::set_embedder(std::shared_ptr<EmbeddingBackend> backend) {
    if (!backend) throw ConfigError("null embedding backend");
    embedder_ = std::move(backend);
}

bool Gateway::has_backend(ModelRole role) const {
    return backends_.count(role) != 0;
}

bool Gateway::has_embedder() const { return embedder_ != nullptr; }

std::string Gateway::complete(ModelRole role, std::span<const ChatMessage> messages,
                              const DecodingOverrides& overrides,
                              std::uint64_t seed) const {
    auto it = backends_.find(role);
    if (it == backends_.end()) {
        throw ConfigError(std::string("no backend configured for role ") +
                          role_label(role));
    }
    return it->second->complete(messages, overrides, seed);
}

std::vector<double> Gateway::embed(const std::string& text) const {
    if (!embedder_) throw ConfigError("no embedding backend configured");
    return embedder_->embed(text);
}

std::shared_ptr<CompletionBackend> Gateway::backend(ModelRole role) const {
    auto it = backends_.find(role);
    return it == backends_.end() ? nullptr : it->second;
}

}  // namespace depsteer::gateway
