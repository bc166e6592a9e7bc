#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlikit/engine.hpp"
#include "nlikit/types.hpp"

namespace nlikit::fewshot {

struct FewShotSpec {
    std::vector<std::size_t> sample_sizes = {10, 25, 50, 100};
    int repeats = 10;
    int epochs = 5;
    // Unset means the backend's default learning rate; no tuning.
    std::optional<double> learning_rate;
    std::string hypothesis;
    std::uint64_t seed = 1;
    int train_batch = 8;
};

struct PoolDoc {
    std::string text;
    Label label = Label::entail;
};

struct ConfidenceInterval {
    double mean = 0.0;
    double sd = 0.0;
    double low = 0.0;
    double high = 0.0;
};

// Student-t interval over the run values; a single value degenerates to
// [v, v].
ConfidenceInterval t_confidence_interval(std::span<const double> values, double level = 0.95);

struct RunResult {
    std::size_t size = 0;
    int repeat = 0;
    double mcc = 0.0;
    double accuracy = 0.0;
    std::vector<std::size_t> sample_indices; // training docs drawn from the pool
};

struct SizeRow {
    std::size_t size = 0;
    double mean_mcc = 0.0;
    double mean_accuracy = 0.0;
    double ci95_low = 0.0;
    double ci95_high = 0.0;
    std::vector<double> run_values; // MCC per repeat
};

struct FewShotReport {
    SizeRow zero_shot; // n = 0, single evaluation over the whole pool
    std::vector<SizeRow> rows;
    std::vector<RunResult> runs;
    bool complete = true;

    std::string to_json_string() const;
    std::string to_text_table() const;
};

using BackendFactory = std::function<std::unique_ptr<engine::NLIBackend>()>;

// For each sample size and repeat: draw that many docs without replacement
// (seeded per run), train a fresh backend for spec.epochs at the default
// learning rate, and evaluate on the rest of the pool. Reports means and
// 95% t-intervals across repeats plus the zero-shot baseline row. A factory
// failure mid-protocol flags the report incomplete and keeps finished runs.
FewShotReport run_protocol(const BackendFactory& factory, std::span<const PoolDoc> pool,
                           const FewShotSpec& spec);

} // namespace nlikit::fewshot
