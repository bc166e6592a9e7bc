#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlikit/corpus.hpp"
#include "nlikit/types.hpp"

namespace nlikit::validation {

struct RetryPolicy {
    int max_retries = 3;
    double backoff_base_seconds = 0.5; // sleep base * 2^attempt between tries
};

// Completion-service configuration. Defaults mirror the reference
// annotation setup: single-token answers at temperature 0 with the output
// tokens biased hard toward "0"/"1".
struct AnnotatorConfig {
    std::string endpoint;
    std::string model_name;
    std::string system_message = "You are a text classifier and are only allowed to respond with 0 or 1";
    int max_tokens = 1;
    double temperature = 0.0;
    // Opaque service token ids; the toolkit never interprets them.
    std::map<std::string, double> token_bias = {{"15", 100.0}, {"16", 100.0}};
    int max_concurrency = 4;
    RetryPolicy retry;
    std::string api_key_env; // name of the env var holding the credential
};

void check_config(const AnnotatorConfig& cfg); // throws ConfigError

// Single-pass interpolation of the label-validation prompt. Braces inside
// the hypothesis or document are copied literally.
std::string build_validation_prompt(std::string_view hypothesis, std::string_view document);

struct CompletionRequest {
    std::string model;
    std::string system_message;
    std::string user_prompt;
    int max_tokens = 1;
    double temperature = 0.0;
    std::map<std::string, double> token_bias;
};

// Pluggable wire layer. Implementations throw ServiceError on transport
// failure; annotate() retries per policy.
class CompletionTransport {
public:
    virtual ~CompletionTransport() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

// POSTs the request as JSON to the configured endpoint and reads the
// completion text from the response body's "text" field.
class HttpTransport : public CompletionTransport {
public:
    explicit HttpTransport(std::string endpoint, std::string api_key = "");
    ~HttpTransport() override;
    std::string complete(const CompletionRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Deterministic in-process transport for tests and offline runs.
class StubTransport : public CompletionTransport {
public:
    using Handler = std::function<std::string(const CompletionRequest&)>;
    explicit StubTransport(Handler handler) : handler_(std::move(handler)) {}
    std::string complete(const CompletionRequest& request) override { return handler_(request); }

private:
    Handler handler_;
};

struct ValidationResult {
    std::string example_id;
    std::optional<Label> annotator_label; // empty when quarantined
    std::string raw_response;
    bool agreed = false;
    bool quarantined = false; // response never parsed to {0,1}
    int retry_count = 0;

    bool operator==(const ValidationResult&) const = default;
};

// Re-labels one example through the completion service. Unparseable
// responses after retries quarantine the example; transport failures after
// retries surface as ServiceError.
ValidationResult annotate(const AnnotatorConfig& cfg, const corpus::NLIExample& example,
                          CompletionTransport& transport);

// Bounded-concurrency fan-out over the examples; results are re-sorted by
// example_id so scheduling cannot change the output.
std::vector<ValidationResult> annotate_all(const AnnotatorConfig& cfg,
                                           std::span<const corpus::NLIExample> examples,
                                           CompletionTransport& transport);

struct FilterOutcome {
    std::vector<corpus::NLIExample> retained;    // validation_status = agreed
    std::vector<corpus::NLIExample> removed;     // validation_status = disagreed
    std::vector<corpus::NLIExample> quarantined; // validation_status = unvalidated
};

// Partitions examples by annotator agreement. Labels are never altered.
FilterOutcome agreement_filter(std::span<const corpus::NLIExample> examples,
                               std::span<const ValidationResult> results);

// Simple random sample without replacement, deterministic under seed.
std::vector<corpus::NLIExample> audit_sample(std::span<const corpus::NLIExample> examples,
                                             std::size_t n, std::uint64_t seed);

} // namespace nlikit::validation
