#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nlikit/engine.hpp"

namespace nlikit::backend {

// Self-contained trainable cross-encoder over hashed lexical features:
// hypothesis unigrams, premise unigrams, hypothesis-x-premise cross pairs,
// and a dense token-overlap feature. The shipped prior scores pairs by the
// fraction of hypothesis content words found in the premise, which gives a
// usable zero-shot signal on lexical topic/event hypotheses; training fits
// a logistic head over all features with a warmup + linear-decay schedule.
//
// Fully deterministic on CPU. Binds behind the NLIBackend contract, so a
// transformer runtime can replace it without touching callers.
class LexicalBackend final : public engine::NLIBackend {
public:
    struct Options {
        int hash_bits = 18;          // 2^18 hashed weights
        std::size_t max_tokens = 512; // premise + hypothesis token budget
        bool pretrained_prior = true; // start from the overlap prior
        double default_lr = 0.2;
        std::string name = "lexical-cross-encoder";
    };

    LexicalBackend();
    explicit LexicalBackend(Options options);

    engine::Capabilities capabilities() const override { return {2, true}; }
    std::string descriptor() const override;
    std::size_t max_input_tokens() const override { return options_.max_tokens; }
    double default_learning_rate() const override { return options_.default_lr; }
    bool thread_safe_inference() const override { return true; }

    std::vector<double> class_probabilities(std::string_view premise,
                                            std::string_view hypothesis) const override;

    double train_epoch(std::span<const engine::LabeledPair> train,
                       const engine::TrainSpec& spec, int epoch_index) override;

    void save(const std::filesystem::path& file) const override;
    static LexicalBackend load(const std::filesystem::path& file);

private:
    struct Features {
        std::vector<std::uint32_t> sparse;
        double overlap = 0.0;
    };
    Features featurize(std::string_view premise, std::string_view hypothesis) const;
    double raw_score(const Features& f) const;

    Options options_;
    std::vector<double> weights_;
    double overlap_weight_ = 0.0;
    double bias_ = 0.0;
    long long steps_taken_ = 0; // resumes the schedule across epochs
};

} // namespace nlikit::backend
