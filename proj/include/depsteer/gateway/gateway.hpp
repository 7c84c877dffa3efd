#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace depsteer::gateway {

enum class ModelRole { Target, Attacker, Scorer, Summarizer, Embedder };

const char* role_label(ModelRole role);
ModelRole role_from_label(const std::string& label);

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct Decoding {
    double temperature = 0.6;
    double top_p = 0.9;
    int max_tokens = 1024;
};

struct DecodingOverrides {
    std::optional<double> temperature;
    std::optional<double> top_p;
    std::optional<int> max_tokens;
};

Decoding apply_overrides(const Decoding& base, const DecodingOverrides& overrides);

struct RetryPolicy {
    int attempts = 3;
    int backoff_ms = 1000;  // doubles per retry
};

struct ModelEndpoint {
    ModelRole role = ModelRole::Target;
    std::string base_url;
    std::string model_name;
    Decoding decoding;
    int timeout_seconds = 60;
    RetryPolicy retry;
    std::string api_key_env;  // env var holding the bearer token, may be empty

    void validate() const;  // throws ConfigError
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual std::string complete(std::span<const ChatMessage> messages,
                                 const DecodingOverrides& overrides,
                                 std::uint64_t seed) = 0;
    // Role this backend was built for; nullopt when role-agnostic (mocks).
    virtual std::optional<ModelRole> bound_role() const { return std::nullopt; }
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::vector<double> embed(const std::string& text) = 0;
};

// Remote chat-completions transport. POSTs {base_url}/chat/completions with
// {model, messages, temperature, top_p, max_tokens} and reads
// choices[0].message.content. Retries transport failures and 5xx statuses per
// the endpoint policy; a malformed reply body is a protocol error and is not
// retried.
class HttpChatClient final : public CompletionBackend {
public:
    explicit HttpChatClient(ModelEndpoint endpoint);
    std::string complete(std::span<const ChatMessage> messages,
                         const DecodingOverrides& overrides,
                         std::uint64_t seed) override;
    std::optional<ModelRole> bound_role() const override { return endpoint_.role; }
    const ModelEndpoint& endpoint() const { return endpoint_; }

private:
    ModelEndpoint endpoint_;
};

// Remote embeddings transport: POST {base_url}/embeddings with {model, input},
// reads data[0].embedding.
class HttpEmbeddingClient final : public EmbeddingBackend {
public:
    explicit HttpEmbeddingClient(ModelEndpoint endpoint);
    std::vector<double> embed(const std::string& text) override;

private:
    ModelEndpoint endpoint_;
};

struct MockRule {
    std::string trigger;  // substring searched in the system message
    std::string emission;
    std::string else_emission;
    double hit_rate = 1.0;
};

// First rule whose trigger occurs in the system message decides the reply:
// emission when the seeded draw lands under hit_rate, otherwise that rule's
// else_emission. When no trigger matches, the first rule's else_emission is
// returned. Fully determined by (rules, messages, seed).
std::string mock_complete(std::span<const MockRule> rules,
                          std::span<const ChatMessage> messages,
                          std::uint64_t seed);

// JSON-lines, one rule per line: {"trigger": ..., "emission": ...,
// "else_emission": ..., "hit_rate": ...}. "{target}" in any text field is
// replaced with the given name.
std::vector<MockRule> load_mock_rules(const std::string& path,
                                      const std::string& target_name);
std::vector<MockRule> parse_mock_rules(const std::string& jsonl,
                                       const std::string& target_name);

class MockModel final : public CompletionBackend {
public:
    explicit MockModel(std::vector<MockRule> rules, bool capture_calls = false);
    std::string complete(std::span<const ChatMessage> messages,
                         const DecodingOverrides& overrides,
                         std::uint64_t seed) override;
    std::vector<std::vector<ChatMessage>> captured_calls() const;

private:
    std::vector<MockRule> rules_;
    bool capture_;
    mutable std::mutex mutex_;
    std::vector<std::vector<ChatMessage>> calls_;
};

// Replays a fixed reply sequence; the last reply repeats once exhausted.
// Every call is captured for assertions.
class ScriptedModel final : public CompletionBackend {
public:
    explicit ScriptedModel(std::vector<std::string> replies);
    std::string complete(std::span<const ChatMessage> messages,
                         const DecodingOverrides& overrides,
                         std::uint64_t seed) override;
    std::vector<std::vector<ChatMessage>> captured_calls() const;
    std::size_t call_count() const;

private:
    std::vector<std::string> replies_;
    mutable std::mutex mutex_;
    std::size_t next_ = 0;
    std::vector<std::vector<ChatMessage>> calls_;
};

// Routes each call by role tag so rubric prompts can never reach the target
// endpoint and vice versa.
class Gateway {
public:
    void set_backend(ModelRole role, std::shared_ptr<CompletionBackend> backend);
    void set_embedder(std::shared_ptr<EmbeddingBackend> backend);
    bool has_backend(ModelRole role) const;
    bool has_embedder() const;

    std::string complete(ModelRole role, std::span<const ChatMessage> messages,
                         const DecodingOverrides& overrides = {},
                         std::uint64_t seed = 0) const;
    std::vector<double> embed(const std::string& text) const;

    std::shared_ptr<CompletionBackend> backend(ModelRole role) const;

private:
    std::map<ModelRole, std::shared_ptr<CompletionBackend>> backends_;
    std::shared_ptr<EmbeddingBackend> embedder_;
};

}  // namespace depsteer::gateway
