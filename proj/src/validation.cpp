#include "nlikit/validation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "nlikit/errors.hpp"
#include "nlikit/rng.hpp"
#include "nlikit/text.hpp"

using json = nlohmann::json;

namespace nlikit::validation {

void check_config(const AnnotatorConfig& cfg) {
    if (cfg.temperature < 0.0) throw ConfigError("annotator temperature must be >= 0");
    if (cfg.max_tokens < 1) throw ConfigError("annotator max_tokens must be >= 1");
    if (cfg.max_concurrency < 1) throw ConfigError("annotator max_concurrency must be >= 1");
    if (cfg.retry.max_retries < 0) throw ConfigError("annotator max_retries must be >= 0");
}

std::string build_validation_prompt(std::string_view hypothesis, std::string_view document) {
    if (hypothesis.empty() || document.empty())
        throw ConfigError("validation prompt needs a non-empty hypothesis and document");
    std::string out;
    out.reserve(256 + 3 * hypothesis.size() + document.size());
    out += "You are a classifier that can only respond with 0 or 1. I'm going to show you a "
           "short text sample and I want you to determine if ";
    out += hypothesis;
    out += ". Here is the text:\n";
    out += document;
    out += "\n\nIf it is true that ";
    out += hypothesis;
    out += ", return 0. If it is not true that ";
    out += hypothesis;
    out += ", return 1. Do not explain your answer, and only return 0 or 1.";
    return out;
}

// ---------------------------------------------------------------------------
// HTTP transport
// ---------------------------------------------------------------------------

struct HttpTransport::Impl {
    std::string scheme_host;
    std::string path;
    std::string api_key;
};

namespace {

// Splits "http://host:port/path" into client target and path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("annotator endpoint must include a scheme: " + endpoint);
    const auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

} // namespace

HttpTransport::HttpTransport(std::string endpoint, std::string api_key)
    : impl_(std::make_unique<Impl>()) {
    auto [host, path] = split_endpoint(endpoint);
    impl_->scheme_host = std::move(host);
    impl_->path = std::move(path);
    impl_->api_key = std::move(api_key);
}

HttpTransport::~HttpTransport() = default;

std::string HttpTransport::complete(const CompletionRequest& request) {
    json body{{"model", request.model},
              {"system_message", request.system_message},
              {"user_prompt", request.user_prompt},
              {"max_tokens", request.max_tokens},
              {"temperature", request.temperature},
              {"logit_bias", request.token_bias}};

    httplib::Client client(impl_->scheme_host);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    httplib::Headers headers;
    if (!impl_->api_key.empty())
        headers.emplace("Authorization", "Bearer " + impl_->api_key);

    auto res = client.Post(impl_->path, headers, body.dump(), "application/json");
    if (!res)
        throw ServiceError("annotator endpoint unreachable: " + impl_->scheme_host);
    if (res->status < 200 || res->status >= 300)
        throw ServiceError("annotator returned HTTP " + std::to_string(res->status));

    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("text") || !parsed["text"].is_string())
        throw ServiceError("annotator response is not {\"text\": ...} JSON");
    return parsed["text"].get<std::string>();
}

// ---------------------------------------------------------------------------
// Annotation
// ---------------------------------------------------------------------------

namespace {

std::optional<Label> parse_label_token(const std::string& response) {
    // First whitespace-delimited token must be exactly "0" or "1".
    const std::string trimmed = text::trim(response);
    const auto end = trimmed.find_first_of(" \t\r\n");
    const std::string token = end == std::string::npos ? trimmed : trimmed.substr(0, end);
    if (token == "0") return Label::entail;
    if (token == "1") return Label::not_entail;
    return std::nullopt;
}

void backoff_sleep(const RetryPolicy& policy, int attempt) {
    if (policy.backoff_base_seconds <= 0.0) return;
    const double secs = policy.backoff_base_seconds * std::pow(2.0, attempt);
    std::this_thread::sleep_for(std::chrono::duration<double>(secs));
}

} // namespace

ValidationResult annotate(const AnnotatorConfig& cfg, const corpus::NLIExample& example,
                          CompletionTransport& transport) {
    check_config(cfg);
    CompletionRequest request{cfg.model_name,
                              cfg.system_message,
                              build_validation_prompt(example.hypothesis, example.premise),
                              cfg.max_tokens,
                              cfg.temperature,
                              cfg.token_bias};

    ValidationResult result;
    result.example_id = example.example_id;

    const int attempts = cfg.retry.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        result.retry_count = attempt;
        std::string response;
        try {
            response = transport.complete(request);
        } catch (const ServiceError&) {
            if (attempt + 1 == attempts) throw;
            backoff_sleep(cfg.retry, attempt);
            continue;
        }
        result.raw_response = response;
        if (auto label = parse_label_token(response)) {
            result.annotator_label = *label;
            result.agreed = *label == example.label;
            return result;
        }
        if (attempt + 1 < attempts) backoff_sleep(cfg.retry, attempt);
    }
    result.quarantined = true;
    return result;
}

std::vector<ValidationResult> annotate_all(const AnnotatorConfig& cfg,
                                           std::span<const corpus::NLIExample> examples,
                                           CompletionTransport& transport) {
    check_config(cfg);
    std::vector<ValidationResult> results(examples.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.max_concurrency), examples.size());
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t i = next.fetch_add(1);
                if (i >= examples.size()) break;
                try {
                    results[i] = annotate(cfg, examples[i], transport);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    break;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    std::sort(results.begin(), results.end(),
              [](const ValidationResult& a, const ValidationResult& b) {
                  return a.example_id < b.example_id;
              });
    return results;
}

FilterOutcome agreement_filter(std::span<const corpus::NLIExample> examples,
                               std::span<const ValidationResult> results) {
    std::map<std::string, const ValidationResult*> by_id;
    for (const auto& r : results) by_id[r.example_id] = &r;

    std::vector<std::string> missing;
    for (const auto& e : examples)
        if (by_id.count(e.example_id) == 0) missing.push_back(e.example_id);
    if (!missing.empty()) {
        std::string ids;
        for (const auto& id : missing) {
            if (!ids.empty()) ids += ", ";
            ids += id;
        }
        throw Error("examples missing validation results: " + ids);
    }

    FilterOutcome out;
    for (const auto& e : examples) {
        const ValidationResult& r = *by_id.at(e.example_id);
        corpus::NLIExample copy = e;
        if (r.quarantined) {
            copy.validation_status = ValidationStatus::unvalidated;
            out.quarantined.push_back(std::move(copy));
        } else if (r.agreed) {
            copy.validation_status = ValidationStatus::agreed;
            out.retained.push_back(std::move(copy));
        } else {
            copy.validation_status = ValidationStatus::disagreed;
            out.removed.push_back(std::move(copy));
        }
    }
    return out;
}

std::vector<corpus::NLIExample> audit_sample(std::span<const corpus::NLIExample> examples,
                                             std::size_t n, std::uint64_t seed) {
    if (n > examples.size())
        throw Error("audit sample size " + std::to_string(n) + " exceeds population " +
                    std::to_string(examples.size()));
    rng::DetRng r(rng::derive(seed, "audit_sample"));
    auto indices = r.sample_without_replacement(examples.size(), n);
    std::vector<corpus::NLIExample> out;
    out.reserve(n);
    for (const auto i : indices) out.push_back(examples[i]);
    return out;
}

} // namespace nlikit::validation
