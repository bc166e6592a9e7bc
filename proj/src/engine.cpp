#include "nlikit/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

#include <nlohmann/json.hpp>

#include "nlikit/errors.hpp"
#include "nlikit/metrics.hpp"
#include "nlikit/text.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace nlikit::engine {

TrainSpec TrainSpec::base_defaults() {
    TrainSpec s;
    s.learning_rate = 2e-5;
    s.train_batch = 8;
    s.eval_batch = 8;
    s.grad_accumulation = 1;
    s.epochs = 20;
    s.warmup_ratio = 0.06;
    s.weight_decay = 0.01;
    s.mixed_precision = true;
    s.seed = 1;
    return s;
}

TrainSpec TrainSpec::large_defaults() {
    TrainSpec s = base_defaults();
    s.learning_rate = 9e-6;
    s.train_batch = 4;
    s.grad_accumulation = 4;
    return s;
}

void check_spec(const TrainSpec& spec) {
    if (spec.epochs < 1) throw ConfigError("train spec: epochs must be >= 1");
    if (!(spec.learning_rate > 0.0)) throw ConfigError("train spec: learning_rate must be > 0");
    if (spec.train_batch < 1 || spec.eval_batch < 1)
        throw ConfigError("train spec: batch sizes must be >= 1");
    if (spec.grad_accumulation < 1)
        throw ConfigError("train spec: grad_accumulation must be >= 1");
    if (spec.warmup_ratio < 0.0 || spec.warmup_ratio > 1.0)
        throw ConfigError("train spec: warmup_ratio must be in [0, 1]");
}

double NLIBackend::train_epoch(std::span<const LabeledPair>, const TrainSpec&, int) {
    throw Error("backend '" + descriptor() + "' does not support training");
}

void NLIBackend::save(const std::filesystem::path&) const {
    throw Error("backend '" + descriptor() + "' does not support checkpointing");
}

ClassifyResult classify(const NLIBackend& backend, std::string_view premise,
                        std::string_view hypothesis, double threshold) {
    auto probs = backend.class_probabilities(premise, hypothesis);
    if (probs.empty()) throw Error("backend returned no class probabilities");
    double sum = 0.0;
    for (double p : probs) sum += p;
    if (!(sum > 0.0)) throw Error("backend probabilities do not sum to a positive value");

    ClassifyResult result;
    result.entail_probability = probs[0] / sum;
    result.label = result.entail_probability > threshold ? Label::entail : Label::not_entail;
    const std::size_t tokens =
        text::tokenize(premise).size() + text::tokenize(hypothesis).size();
    result.truncated = tokens > backend.max_input_tokens();
    return result;
}

std::vector<ClassifyResult> classify_batch(const NLIBackend& backend,
                                           std::span<const PairInput> pairs,
                                           std::size_t batch_size, double threshold) {
    if (batch_size < 1) throw ConfigError("classify_batch: batch_size must be >= 1");
    std::vector<ClassifyResult> results;
    results.reserve(pairs.size());
    for (std::size_t start = 0; start < pairs.size(); start += batch_size) {
        const std::size_t end = std::min(pairs.size(), start + batch_size);
        for (std::size_t i = start; i < end; ++i)
            results.push_back(classify(backend, pairs[i].premise, pairs[i].hypothesis, threshold));
    }
    return results;
}

namespace {

struct EvalStats {
    double loss = 0.0;
    metrics::Confusion confusion;
    std::map<std::string, metrics::Confusion> per_task;
    std::map<std::string, metrics::Confusion> per_dataset;
};

EvalStats evaluate_pairs(const NLIBackend& backend, std::span<const LabeledPair> pairs) {
    EvalStats stats;
    double loss_sum = 0.0;
    for (const auto& pair : pairs) {
        auto result = classify(backend, pair.premise, pair.hypothesis);
        const double p_true = pair.label == Label::entail
                                  ? result.entail_probability
                                  : 1.0 - result.entail_probability;
        loss_sum += -std::log(std::max(p_true, 1e-12));
        const bool truth = pair.label == Label::entail;
        const bool predicted = result.label == Label::entail;
        stats.confusion.add(truth, predicted);
        if (!pair.task.empty()) stats.per_task[pair.task].add(truth, predicted);
        if (!pair.source_dataset.empty())
            stats.per_dataset[pair.source_dataset].add(truth, predicted);
    }
    stats.loss = pairs.empty() ? 0.0 : loss_sum / static_cast<double>(pairs.size());
    return stats;
}

} // namespace

std::vector<CheckpointRecord> fine_tune(NLIBackend& backend,
                                        const std::vector<LabeledPair>& train,
                                        const std::vector<LabeledPair>& val,
                                        const TrainSpec& spec, const fs::path& checkpoint_dir) {
    check_spec(spec);
    if (!backend.capabilities().supports_training)
        throw Error("backend '" + backend.descriptor() + "' does not support training");
    if (train.empty()) throw Error("fine_tune: empty training set");

    std::error_code ec;
    fs::create_directories(checkpoint_dir, ec);
    if (ec)
        throw Error("cannot create checkpoint directory " + checkpoint_dir.string() + ": " +
                    ec.message());
    std::ofstream metrics_log(checkpoint_dir / "metrics.jsonl",
                              std::ios::binary | std::ios::trunc);
    if (!metrics_log)
        throw Error("cannot write " + (checkpoint_dir / "metrics.jsonl").string());

    std::vector<CheckpointRecord> records;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        const double train_loss = backend.train_epoch(train, spec, epoch);
        if (!std::isfinite(train_loss)) break; // divergence: keep completed checkpoints

        EvalStats stats = evaluate_pairs(backend, val);

        CheckpointRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = train_loss;
        rec.val_loss = stats.loss;
        rec.mcc = metrics::mcc(stats.confusion);
        rec.f1 = metrics::f1(stats.confusion);
        rec.accuracy = metrics::accuracy(stats.confusion);
        for (const auto& [task, confusion] : stats.per_task)
            rec.per_task_mcc[task] = metrics::mcc(confusion);
        for (const auto& [source, confusion] : stats.per_dataset)
            rec.per_dataset_mcc[source] = metrics::mcc(confusion);

        char name[24];
        std::snprintf(name, sizeof(name), "epoch-%03d", rec.epoch);
        const fs::path epoch_dir = checkpoint_dir / name;
        fs::create_directories(epoch_dir);
        backend.save(epoch_dir / "model.json");
        rec.path = (epoch_dir / "model.json").string();

        metrics_log << json{{"epoch", rec.epoch},
                            {"train_loss", rec.train_loss},
                            {"val_loss", rec.val_loss},
                            {"mcc", rec.mcc},
                            {"f1", rec.f1},
                            {"accuracy", rec.accuracy},
                            {"per_task_mcc", rec.per_task_mcc},
                            {"per_dataset_mcc", rec.per_dataset_mcc}}
                           .dump()
                    << '\n';
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<RankedCheckpoint> rank_checkpoints(std::span<const CheckpointRecord> records,
                                               const RankWeights& weights) {
    if (records.empty()) throw Error("rank_checkpoints: no checkpoints");
    std::vector<RankedCheckpoint> ranked;
    ranked.reserve(records.size());
    for (const auto& rec : records) {
        RankedCheckpoint r;
        r.record = rec;
        if (rec.per_task_mcc.size() >= 2) {
            double lo = 1.0, hi = -1.0;
            for (const auto& [task, value] : rec.per_task_mcc) {
                lo = std::min(lo, value);
                hi = std::max(hi, value);
            }
            r.task_spread = hi - lo;
        }
        r.score = rec.mcc - weights.consistency_lambda * r.task_spread;
        ranked.push_back(std::move(r));
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedCheckpoint& a,
                                               const RankedCheckpoint& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.record.val_loss != b.record.val_loss) return a.record.val_loss < b.record.val_loss;
        if (a.record.f1 != b.record.f1) return a.record.f1 > b.record.f1;
        return a.record.epoch < b.record.epoch;
    });
    return ranked;
}

PerturbationReport perturbation_suite(const NLIBackend& backend,
                                      std::span<const PerturbationProbe> probes,
                                      std::span<const augment::SynonymPair> synonym_table) {
    struct Transform {
        std::string name;
        std::function<std::pair<std::string, std::string>(const PerturbationProbe&)> apply;
    };
    const std::vector<Transform> transforms{
        {"lowercase",
         [](const PerturbationProbe& p) {
             return std::make_pair(text::to_lower_ascii(p.premise),
                                   text::to_lower_ascii(p.hypothesis));
         }},
        {"strip_terminal_punctuation",
         [](const PerturbationProbe& p) {
             return std::make_pair(text::strip_terminal_punctuation(p.premise),
                                   text::strip_terminal_punctuation(p.hypothesis));
         }},
        {"synonym_swap",
         [&](const PerturbationProbe& p) {
             std::string hypothesis = p.hypothesis;
             for (const auto& pair : synonym_table) {
                 hypothesis = text::replace_whole_word(hypothesis, pair.word, pair.synonym,
                                                       [](std::size_t) { return true; });
             }
             return std::make_pair(p.premise, hypothesis);
         }},
    };

    PerturbationReport report;
    std::size_t baseline_correct = 0;
    std::vector<Label> baseline_labels;
    baseline_labels.reserve(probes.size());
    for (const auto& probe : probes) {
        const auto base = classify(backend, probe.premise, probe.hypothesis);
        baseline_labels.push_back(base.label);
        baseline_correct += base.label == probe.expected;
    }
    report.baseline_accuracy =
        probes.empty() ? 0.0
                       : static_cast<double>(baseline_correct) / static_cast<double>(probes.size());

    for (const auto& transform : transforms) {
        PerturbationReport::TransformStats stats;
        stats.transform = transform.name;
        stats.total = probes.size();
        for (std::size_t i = 0; i < probes.size(); ++i) {
            const auto [premise, hypothesis] = transform.apply(probes[i]);
            const auto result = classify(backend, premise, hypothesis);
            stats.flips += result.label != baseline_labels[i];
        }
        stats.flip_rate = stats.total == 0
                              ? 0.0
                              : static_cast<double>(stats.flips) / static_cast<double>(stats.total);
        report.transforms.push_back(std::move(stats));
    }
    return report;
}

} // namespace nlikit::engine
