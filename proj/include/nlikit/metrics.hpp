#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlikit/types.hpp"

namespace nlikit::metrics {

// Binary confusion counts. "Positive" is the entail class (label 0).
struct Confusion {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
    void add(bool truth_positive, bool predicted_positive);
    Confusion& operator+=(const Confusion& other);

    bool operator==(const Confusion&) const = default;
};

Confusion confusion_from(std::span<const Label> truth, std::span<const Label> predicted);

// Matthews correlation coefficient. Any zero marginal yields 0.0 by
// convention.
double mcc(const Confusion& c);

// 2tp / (2tp + fp + fn); zero denominator yields 0.0.
double f1(const Confusion& c);

double accuracy(const Confusion& c);

struct KappaResult {
    double value = 0.0;
    bool defined = true; // false when chance agreement p_e == 1
};

// Cohen's kappa for two equal-length binary label sequences. Computed from
// integer contingency counts as (n*agree - sum_k a_k*b_k) / (n^2 - sum_k a_k*b_k)
// so that exact rational fixtures come out exact in floating point.
KappaResult cohen_kappa(std::span<const int> rater_a, std::span<const int> rater_b);

struct BootstrapResult {
    double point = 0.0;
    double se = 0.0;
};

using Statistic = std::function<double(const Confusion&)>;

// B resamples with replacement of (label, prediction) index pairs; se is the
// sample standard deviation of the statistic across resamples. Deterministic
// under seed; resample b draws from an independently derived stream so the
// loop can be parallelized without changing results.
BootstrapResult bootstrap_se(std::span<const Label> labels, std::span<const Label> preds,
                             const Statistic& statistic, int B, std::uint64_t seed);

struct PredictionRecord {
    std::string example_id;
    Task task = Task::topic;
    std::string source_dataset;
    Label truth = Label::entail;
    Label predicted = Label::entail;
};

struct SliceMetrics {
    std::string slice;
    std::size_t n = 0;
    Confusion confusion;
    double mcc = 0.0, f1 = 0.0, accuracy = 0.0;
    double mcc_se = 0.0, f1_se = 0.0, accuracy_se = 0.0;
};

struct EvalReport {
    std::string model; // backend descriptor the predictions came from
    SliceMetrics overall;
    std::vector<SliceMetrics> per_task;
    std::vector<SliceMetrics> per_dataset; // sorted by MCC ascending
    int bootstrap_samples = 0;
    std::uint64_t seed = 0;

    std::string to_json_string() const;
    std::string to_text() const;
    // One row per slice: model,kind,slice,n,mcc,mcc_se,f1,f1_se,accuracy,accuracy_se
    std::string to_csv() const;
};

struct ReportOptions {
    int bootstrap_samples = 1000;
    std::uint64_t seed = 1;
    std::string model;
};

// Overall, per-task and per-dataset metrics with bootstrap standard errors.
// Every record must carry task and source tags; records with an empty
// source_dataset are rejected with their ids listed.
EvalReport report(std::span<const PredictionRecord> records, const ReportOptions& opts = {});

} // namespace nlikit::metrics
