#include "nlikit/fewshot.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "nlikit/errors.hpp"
#include "nlikit/metrics.hpp"
#include "nlikit/rng.hpp"

using json = nlohmann::json;

namespace nlikit::fewshot {

ConfidenceInterval t_confidence_interval(std::span<const double> values, double level) {
    if (values.empty()) throw Error("confidence interval needs at least one value");
    ConfidenceInterval ci;
    for (double v : values) ci.mean += v;
    ci.mean /= static_cast<double>(values.size());
    if (values.size() == 1) {
        ci.low = ci.high = ci.mean;
        return ci;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - ci.mean) * (v - ci.mean);
    ci.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    boost::math::students_t dist(static_cast<double>(values.size() - 1));
    const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
    const double half = t * ci.sd / std::sqrt(static_cast<double>(values.size()));
    ci.low = ci.mean - half;
    ci.high = ci.mean + half;
    return ci;
}

namespace {

struct EvalOutcome {
    double mcc = 0.0;
    double accuracy = 0.0;
};

EvalOutcome evaluate_on(const engine::NLIBackend& backend, std::span<const PoolDoc> pool,
                        const std::vector<std::size_t>& skip, const std::string& hypothesis) {
    std::set<std::size_t> skipped(skip.begin(), skip.end());
    metrics::Confusion confusion;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (skipped.count(i) != 0) continue;
        const auto result = engine::classify(backend, pool[i].text, hypothesis);
        confusion.add(pool[i].label == Label::entail, result.label == Label::entail);
    }
    return {metrics::mcc(confusion), metrics::accuracy(confusion)};
}

void check_spec(const FewShotSpec& spec, std::size_t pool_size) {
    if (spec.repeats < 2) throw ConfigError("few-shot spec: repeats must be >= 2");
    if (spec.epochs < 1) throw ConfigError("few-shot spec: epochs must be >= 1");
    if (spec.hypothesis.empty()) throw ConfigError("few-shot spec: hypothesis must be set");
    if (spec.sample_sizes.empty()) throw ConfigError("few-shot spec: no sample sizes");
    for (const auto n : spec.sample_sizes) {
        if (n == 0 || n >= pool_size)
            throw ConfigError("few-shot sample size " + std::to_string(n) +
                              " infeasible for pool of " + std::to_string(pool_size));
    }
}

} // namespace

FewShotReport run_protocol(const BackendFactory& factory, std::span<const PoolDoc> pool,
                           const FewShotSpec& spec) {
    check_spec(spec, pool.size());

    FewShotReport report;

    // Zero-shot baseline over the entire pool, computed once.
    {
        auto backend = factory();
        const auto outcome = evaluate_on(*backend, pool, {}, spec.hypothesis);
        report.zero_shot.size = 0;
        report.zero_shot.mean_mcc = outcome.mcc;
        report.zero_shot.mean_accuracy = outcome.accuracy;
        report.zero_shot.ci95_low = outcome.mcc;
        report.zero_shot.ci95_high = outcome.mcc;
        report.zero_shot.run_values = {outcome.mcc};
    }

    for (const auto size : spec.sample_sizes) {
        SizeRow row;
        row.size = size;
        std::vector<double> accuracies;
        for (int repeat = 0; repeat < spec.repeats; ++repeat) {
            // Per-run derived seed: each (size, repeat) cell is independently
            // reproducible, so run order cannot matter.
            rng::DetRng sampler(rng::derive(spec.seed, "fewshot", size, repeat));
            auto sample = sampler.sample_without_replacement(pool.size(), size);

            std::unique_ptr<engine::NLIBackend> backend;
            try {
                backend = factory();
            } catch (const std::exception&) {
                report.complete = false;
                break;
            }

            std::vector<engine::LabeledPair> train;
            train.reserve(size);
            for (const auto i : sample)
                train.push_back({pool[i].text, spec.hypothesis, pool[i].label, "fewshot",
                                 "pool"});

            engine::TrainSpec train_spec;
            train_spec.learning_rate =
                spec.learning_rate.value_or(backend->default_learning_rate());
            train_spec.train_batch = spec.train_batch;
            train_spec.eval_batch = spec.train_batch;
            train_spec.epochs = spec.epochs;
            train_spec.warmup_ratio = 0.0;
            train_spec.weight_decay = 0.0;
            train_spec.seed = rng::derive(spec.seed, "train", size, repeat);
            for (int epoch = 0; epoch < spec.epochs; ++epoch)
                backend->train_epoch(train, train_spec, epoch);

            const auto outcome = evaluate_on(*backend, pool, sample, spec.hypothesis);
            RunResult run;
            run.size = size;
            run.repeat = repeat;
            run.mcc = outcome.mcc;
            run.accuracy = outcome.accuracy;
            run.sample_indices = std::move(sample);
            report.runs.push_back(std::move(run));
            row.run_values.push_back(outcome.mcc);
            accuracies.push_back(outcome.accuracy);
        }
        if (!row.run_values.empty()) {
            const auto ci = t_confidence_interval(row.run_values);
            row.mean_mcc = ci.mean;
            row.ci95_low = ci.low;
            row.ci95_high = ci.high;
            row.mean_accuracy = t_confidence_interval(accuracies).mean;
            report.rows.push_back(std::move(row));
        }
        if (!report.complete) break;
    }
    return report;
}

namespace {

json row_to_json(const SizeRow& row) {
    return json{{"size", row.size},
                {"mean_mcc", row.mean_mcc},
                {"mean_accuracy", row.mean_accuracy},
                {"ci95_low", row.ci95_low},
                {"ci95_high", row.ci95_high},
                {"run_values", row.run_values}};
}

} // namespace

std::string FewShotReport::to_json_string() const {
    json rows_json = json::array();
    for (const auto& row : rows) rows_json.push_back(row_to_json(row));
    json runs_json = json::array();
    for (const auto& run : runs) {
        runs_json.push_back(json{{"size", run.size},
                                 {"repeat", run.repeat},
                                 {"mcc", run.mcc},
                                 {"accuracy", run.accuracy},
                                 {"sample_indices", run.sample_indices}});
    }
    return json{{"zero_shot", row_to_json(zero_shot)},
                {"rows", rows_json},
                {"runs", runs_json},
                {"complete", complete}}
        .dump(2);
}

std::string FewShotReport::to_text_table() const {
    std::ostringstream out;
    out << "  n      mean MCC   95% CI             mean acc\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-6d %8.3f   [%6.3f, %6.3f]   %8.3f   (zero-shot)\n", 0,
                  zero_shot.mean_mcc, zero_shot.ci95_low, zero_shot.ci95_high,
                  zero_shot.mean_accuracy);
    out << buf;
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "  %-6zu %8.3f   [%6.3f, %6.3f]   %8.3f\n", row.size,
                      row.mean_mcc, row.ci95_low, row.ci95_high, row.mean_accuracy);
        out << buf;
    }
    if (!complete) out << "  (incomplete: a backend factory failure truncated the protocol)\n";
    return out.str();
}

} // namespace nlikit::fewshot
