#include "nlikit/backend_lexical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "nlikit/errors.hpp"
#include "nlikit/rng.hpp"
#include "nlikit/text.hpp"

using json = nlohmann::json;

namespace nlikit::backend {

namespace {

// Scaffold words shared by the hypothesis templates; excluded from the
// overlap feature so it measures content, not template phrasing.
const std::unordered_set<std::string>& scaffold_words() {
    static const std::unordered_set<std::string> words{
        "a",        "an",       "and",       "about",    "are",  "author",   "believes",
        "concerns", "discusses", "document", "does",     "is",   "endorses", "it",
        "of",       "or",       "post",      "supports", "text", "that",     "the",
        "this",     "to",       "tweet",     "was",      "with"};
    return words;
}

constexpr double kPriorOverlapWeight = 6.0;
constexpr double kPriorBias = -2.4;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace

LexicalBackend::LexicalBackend() : LexicalBackend(Options{}) {}

LexicalBackend::LexicalBackend(Options options) : options_(std::move(options)) {
    if (options_.hash_bits < 8 || options_.hash_bits > 26)
        throw ConfigError("lexical backend: hash_bits must be in [8, 26]");
    weights_.assign(std::size_t{1} << options_.hash_bits, 0.0);
    if (options_.pretrained_prior) {
        overlap_weight_ = kPriorOverlapWeight;
        bias_ = kPriorBias;
    }
}

std::string LexicalBackend::descriptor() const {
    return options_.name + "/" + std::to_string(options_.hash_bits) + "bit";
}

LexicalBackend::Features LexicalBackend::featurize(std::string_view premise,
                                                   std::string_view hypothesis) const {
    Features f;
    const auto hyp_tokens = text::tokenize(hypothesis);
    auto premise_tokens = text::tokenize(premise);

    // The hypothesis is never truncated; the premise loses tokens from the
    // right once the joint budget is exceeded.
    if (hyp_tokens.size() + premise_tokens.size() > options_.max_tokens) {
        const std::size_t keep =
            options_.max_tokens > hyp_tokens.size() ? options_.max_tokens - hyp_tokens.size() : 0;
        premise_tokens.resize(std::min(premise_tokens.size(), keep));
    }

    const std::uint32_t mask = (1u << options_.hash_bits) - 1;
    auto slot = [&](std::string_view kind, std::string_view a, std::string_view b = {}) {
        std::uint64_t h = rng::hash_bytes(kind);
        h = rng::hash_bytes(a, h);
        if (!b.empty()) h = rng::hash_bytes(b, rng::hash_bytes("|", h));
        return static_cast<std::uint32_t>(rng::mix64(h)) & mask;
    };

    std::unordered_set<std::string> premise_set(premise_tokens.begin(), premise_tokens.end());
    std::vector<std::string> hyp_content;
    std::unordered_set<std::string> hyp_seen;
    for (const auto& tok : hyp_tokens) {
        if (!hyp_seen.insert(tok).second) continue;
        f.sparse.push_back(slot("h", tok));
        if (scaffold_words().count(tok) == 0) hyp_content.push_back(tok);
    }

    std::vector<std::string> premise_unique;
    for (const auto& tok : premise_tokens) {
        if (premise_unique.size() >= 256) break;
        if (std::find(premise_unique.begin(), premise_unique.end(), tok) ==
            premise_unique.end())
            premise_unique.push_back(tok);
    }
    for (const auto& tok : premise_unique) f.sparse.push_back(slot("p", tok));

    const std::size_t cross_cap = 16;
    for (std::size_t i = 0; i < hyp_content.size() && i < cross_cap; ++i) {
        for (const auto& ptok : premise_unique) f.sparse.push_back(slot("x", hyp_content[i], ptok));
    }

    if (!hyp_content.empty()) {
        std::size_t hits = 0;
        for (const auto& tok : hyp_content) hits += premise_set.count(tok);
        f.overlap = static_cast<double>(hits) / static_cast<double>(hyp_content.size());
    }

    std::sort(f.sparse.begin(), f.sparse.end());
    f.sparse.erase(std::unique(f.sparse.begin(), f.sparse.end()), f.sparse.end());
    return f;
}

double LexicalBackend::raw_score(const Features& f) const {
    double z = bias_ + overlap_weight_ * f.overlap;
    for (const auto idx : f.sparse) z += weights_[idx];
    return z;
}

std::vector<double> LexicalBackend::class_probabilities(std::string_view premise,
                                                        std::string_view hypothesis) const {
    const double p = sigmoid(raw_score(featurize(premise, hypothesis)));
    return {p, 1.0 - p};
}

double LexicalBackend::train_epoch(std::span<const engine::LabeledPair> train,
                                   const engine::TrainSpec& spec, int epoch_index) {
    engine::check_spec(spec);
    if (train.empty()) throw Error("lexical backend: empty training set");

    const std::size_t step_size =
        static_cast<std::size_t>(spec.train_batch) * static_cast<std::size_t>(spec.grad_accumulation);
    const long long steps_per_epoch =
        static_cast<long long>((train.size() + step_size - 1) / step_size);
    const long long total_steps = steps_per_epoch * spec.epochs;
    const long long warmup_steps =
        static_cast<long long>(std::llround(spec.warmup_ratio * static_cast<double>(total_steps)));

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng::DetRng shuffler(rng::derive(spec.seed, "epoch-shuffle", epoch_index));
    shuffler.shuffle(order);

    double loss_sum = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
        const std::size_t end = std::min(order.size(), cursor + step_size);

        // Warmup then linear decay to zero over the full run.
        const long long step = steps_taken_;
        double lr = spec.learning_rate;
        if (warmup_steps > 0 && step < warmup_steps) {
            lr *= static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
        } else if (total_steps > warmup_steps) {
            lr *= std::max(0.0, static_cast<double>(total_steps - step) /
                                    static_cast<double>(total_steps - warmup_steps));
        }

        std::vector<std::pair<std::uint32_t, double>> sparse_grad;
        double overlap_grad = 0.0, bias_grad = 0.0;
        const double inv_n = 1.0 / static_cast<double>(end - cursor);
        for (std::size_t k = cursor; k < end; ++k) {
            const auto& pair = train[order[k]];
            const Features f = featurize(pair.premise, pair.hypothesis);
            const double p = sigmoid(raw_score(f));
            const double y = pair.label == Label::entail ? 1.0 : 0.0;
            loss_sum += -(y * std::log(std::max(p, 1e-12)) +
                          (1.0 - y) * std::log(std::max(1.0 - p, 1e-12)));
            const double g = (p - y) * inv_n;
            for (const auto idx : f.sparse) sparse_grad.emplace_back(idx, g);
            overlap_grad += g * f.overlap;
            bias_grad += g;
        }

        for (const auto& [idx, g] : sparse_grad) {
            weights_[idx] -= lr * (g + spec.weight_decay * weights_[idx]);
        }
        overlap_weight_ -= lr * (overlap_grad + spec.weight_decay * overlap_weight_);
        bias_ -= lr * bias_grad;

        ++steps_taken_;
        cursor = end;
    }
    return loss_sum / static_cast<double>(train.size());
}

void LexicalBackend::save(const std::filesystem::path& file) const {
    json sparse = json::object();
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (weights_[i] != 0.0) sparse[std::to_string(i)] = weights_[i];
    }
    json j{{"format", "nlikit-lexical-v1"},
           {"options",
            {{"hash_bits", options_.hash_bits},
             {"max_tokens", options_.max_tokens},
             {"pretrained_prior", options_.pretrained_prior},
             {"default_lr", options_.default_lr},
             {"name", options_.name}}},
           {"dense", {{"overlap_weight", overlap_weight_}, {"bias", bias_}}},
           {"steps_taken", steps_taken_},
           {"weights", sparse}};
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint: " + file.string());
    out << j.dump() << '\n';
}

LexicalBackend LexicalBackend::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + file.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || j.value("format", "") != "nlikit-lexical-v1")
        throw SchemaError("not a lexical backend checkpoint: " + file.string());

    Options opts;
    const auto& jo = j.at("options");
    opts.hash_bits = jo.at("hash_bits").get<int>();
    opts.max_tokens = jo.at("max_tokens").get<std::size_t>();
    opts.pretrained_prior = jo.at("pretrained_prior").get<bool>();
    opts.default_lr = jo.at("default_lr").get<double>();
    opts.name = jo.at("name").get<std::string>();

    LexicalBackend backend(opts);
    backend.overlap_weight_ = j.at("dense").at("overlap_weight").get<double>();
    backend.bias_ = j.at("dense").at("bias").get<double>();
    backend.steps_taken_ = j.value("steps_taken", 0LL);
    for (const auto& [key, value] : j.at("weights").items()) {
        const std::size_t idx = std::stoull(key);
        if (idx >= backend.weights_.size())
            throw SchemaError("checkpoint weight index out of range: " + key);
        backend.weights_[idx] = value.get<double>();
    }
    return backend;
}

} // namespace nlikit::backend
