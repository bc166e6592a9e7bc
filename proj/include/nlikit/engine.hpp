#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlikit/augment.hpp"
#include "nlikit/types.hpp"

namespace nlikit::engine {

struct Capabilities {
    int num_classes = 2; // 2 or 3; 3-class order is {entail, neutral, contradiction}
    bool supports_training = false;
};

// A (premise, hypothesis, label) triple with slice tags for breakdowns.
struct LabeledPair {
    std::string premise;
    std::string hypothesis;
    Label label = Label::entail;
    std::string task;
    std::string source_dataset;
};

struct TrainSpec {
    double learning_rate = 2e-5;
    int train_batch = 8;
    int eval_batch = 8;
    int grad_accumulation = 1;
    int epochs = 20;
    double warmup_ratio = 0.06;
    double weight_decay = 0.01;
    bool mixed_precision = false;
    std::uint64_t seed = 1;
    enum class Scheduler { linear } scheduler = Scheduler::linear;

    // The two reference configurations for the base and large backbones.
    static TrainSpec base_defaults();
    static TrainSpec large_defaults();
};

void check_spec(const TrainSpec& spec); // throws ConfigError

class NLIBackend {
public:
    virtual ~NLIBackend() = default;

    virtual Capabilities capabilities() const = 0;
    virtual std::string descriptor() const = 0;
    virtual std::size_t max_input_tokens() const { return 1u << 20; }
    virtual double default_learning_rate() const { return 0.2; }
    virtual bool thread_safe_inference() const { return false; }

    // Class probabilities for one pair; index 0 is the entail class. Must be
    // deterministic for fixed weights and inputs.
    virtual std::vector<double> class_probabilities(std::string_view premise,
                                                    std::string_view hypothesis) const = 0;

    // One full pass over the training pairs; returns the mean training loss.
    // epoch_index is zero-based; the learning-rate schedule spans
    // spec.epochs passes. Non-training backends throw.
    virtual double train_epoch(std::span<const LabeledPair> train, const TrainSpec& spec,
                               int epoch_index);

    virtual void save(const std::filesystem::path& file) const;
};

struct ClassifyResult {
    double entail_probability = 0.0;
    Label label = Label::not_entail;
    bool truncated = false;

    bool operator==(const ClassifyResult&) const = default;
};

// Collapses 3-class outputs to binary mass (entail vs. the rest) and applies
// the strict decision threshold: entail iff probability > threshold.
ClassifyResult classify(const NLIBackend& backend, std::string_view premise,
                        std::string_view hypothesis, double threshold = 0.5);

struct PairInput {
    std::string premise;
    std::string hypothesis;
};

// Order-preserving; element-wise identical to sequential classify calls for
// every batch size.
std::vector<ClassifyResult> classify_batch(const NLIBackend& backend,
                                           std::span<const PairInput> pairs,
                                           std::size_t batch_size, double threshold = 0.5);

struct CheckpointRecord {
    int epoch = 0; // 1-based
    std::string path;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double mcc = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::map<std::string, double> per_task_mcc;
    std::map<std::string, double> per_dataset_mcc;

    bool operator==(const CheckpointRecord&) const = default;
};

// Trains for spec.epochs passes, evaluating on the validation pairs and
// saving a checkpoint after each one. Layout: <dir>/epoch-NNN/model.json
// plus an appended metrics.jsonl at <dir>. A non-finite loss aborts the run
// and returns the checkpoints completed so far.
std::vector<CheckpointRecord> fine_tune(NLIBackend& backend,
                                        const std::vector<LabeledPair>& train,
                                        const std::vector<LabeledPair>& val,
                                        const TrainSpec& spec,
                                        const std::filesystem::path& checkpoint_dir);

struct RankWeights {
    double consistency_lambda = 0.25; // penalty on the per-task MCC spread
};

struct RankedCheckpoint {
    CheckpointRecord record;
    double score = 0.0;       // mcc - lambda * task_spread
    double task_spread = 0.0; // max - min per-task MCC
};

// Total order: penalized score desc, then val_loss asc, then F1 desc, then
// epoch asc.
std::vector<RankedCheckpoint> rank_checkpoints(std::span<const CheckpointRecord> records,
                                               const RankWeights& weights = {});

struct PerturbationProbe {
    std::string premise;
    std::string hypothesis;
    Label expected = Label::entail;
};

struct PerturbationReport {
    struct TransformStats {
        std::string transform;
        std::size_t flips = 0;
        std::size_t total = 0;
        double flip_rate = 0.0;
    };
    std::vector<TransformStats> transforms;
    double baseline_accuracy = 0.0;
};

// Measures label flips under {lowercase, strip terminal punctuation,
// synonym swap on the hypothesis} relative to the unperturbed prediction.
PerturbationReport perturbation_suite(const NLIBackend& backend,
                                      std::span<const PerturbationProbe> probes,
                                      std::span<const augment::SynonymPair> synonym_table);

} // namespace nlikit::engine
