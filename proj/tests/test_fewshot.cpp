#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "nlikit/backend_lexical.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/fewshot.hpp"
#include "nlikit/rng.hpp"
#include "support.hpp"

using namespace nlikit;
using namespace nlikit::fewshot;
using nlikit::backend::LexicalBackend;

namespace {

// Pool where a premise token hidden from the hypothesis decides the label:
// zero-shot fails, few-shot training must pick the token up.
std::vector<PoolDoc> hidden_token_pool(int n, std::uint64_t seed) {
    std::vector<PoolDoc> pool;
    rng::DetRng r(rng::derive(seed, "pool"));
    const char* fillers[] = {"county officials met", "the press asked questions",
                             "a long day in the chamber", "reporters waited outside"};
    for (int i = 0; i < n; ++i) {
        const bool positive = r.bernoulli(0.5);
        PoolDoc doc;
        doc.text = std::string(fillers[r.below(4)]) + " " +
                   (positive ? "minimization" : "ordinary") + " marker " + std::to_string(i);
        doc.label = positive ? Label::entail : Label::not_entail;
        pool.push_back(std::move(doc));
    }
    return pool;
}

BackendFactory lexical_factory() {
    return [] {
        LexicalBackend::Options opts;
        opts.hash_bits = 16;
        opts.pretrained_prior = true;
        return std::make_unique<LexicalBackend>(opts);
    };
}

FewShotSpec quick_spec() {
    FewShotSpec spec;
    spec.sample_sizes = {10, 25};
    spec.repeats = 4;
    spec.epochs = 5;
    spec.hypothesis = "The author of this text does not believe the threat is real";
    spec.seed = 31;
    return spec;
}

} // namespace

TEST_CASE("t interval: zero variance collapses to the mean") {
    std::vector<double> values(10, 0.6);
    auto ci = t_confidence_interval(values);
    CHECK(ci.mean == doctest::Approx(0.6));
    CHECK(ci.low == doctest::Approx(0.6));
    CHECK(ci.high == doctest::Approx(0.6));
}

TEST_CASE("t interval: matches the tabulated t(0.975, df=9) oracle") {
    // Independent closed-form check: mean +- 2.262157163 * sd / sqrt(10).
    std::vector<double> values{0.50, 0.55, 0.60, 0.62, 0.66, 0.68, 0.70, 0.74, 0.78, 0.80};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= 10.0;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / 9.0);
    const double t_table = 2.262157163; // two-sided 95%, 9 degrees of freedom
    const double half = t_table * sd / std::sqrt(10.0);

    auto ci = t_confidence_interval(values);
    CHECK(ci.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(ci.low == doctest::Approx(mean - half).epsilon(1e-8));
    CHECK(ci.high == doctest::Approx(mean + half).epsilon(1e-8));
    CHECK(ci.low <= ci.mean);
    CHECK(ci.mean <= ci.high);
}

TEST_CASE("run_protocol: report shape is sizes x repeats plus the zero-shot row") {
    auto pool = hidden_token_pool(300, 8);
    FewShotSpec spec = quick_spec();
    auto report = run_protocol(lexical_factory(), pool, spec);
    CHECK(report.complete);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.zero_shot.size == 0);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(report.rows[i].size == spec.sample_sizes[i]);
        CHECK(report.rows[i].run_values.size() == static_cast<std::size_t>(spec.repeats));
        CHECK(report.rows[i].ci95_low <= report.rows[i].mean_mcc);
        CHECK(report.rows[i].mean_mcc <= report.rows[i].ci95_high);
    }
    CHECK(report.runs.size() == 2 * 4);
}

namespace {

// Delegating backend that records which premises flow through training and
// which through evaluation.
class SpyBackend final : public engine::NLIBackend {
public:
    SpyBackend(std::set<std::string>* trained, std::set<std::string>* evaluated)
        : inner_(LexicalBackend::Options{.hash_bits = 14}), trained_(trained),
          evaluated_(evaluated) {}
    engine::Capabilities capabilities() const override { return inner_.capabilities(); }
    std::string descriptor() const override { return "spy"; }
    std::vector<double> class_probabilities(std::string_view premise,
                                            std::string_view hypothesis) const override {
        evaluated_->insert(std::string(premise));
        return inner_.class_probabilities(premise, hypothesis);
    }
    double train_epoch(std::span<const engine::LabeledPair> train,
                       const engine::TrainSpec& spec, int epoch) override {
        for (const auto& pair : train) trained_->insert(pair.premise);
        return inner_.train_epoch(train, spec, epoch);
    }

private:
    LexicalBackend inner_;
    std::set<std::string>* trained_;
    std::set<std::string>* evaluated_;
};

} // namespace

TEST_CASE("run_protocol: evaluation never sees its own training sample") {
    auto pool = hidden_token_pool(80, 9);
    FewShotSpec spec = quick_spec();
    spec.sample_sizes = {10};
    spec.repeats = 2;
    auto report = run_protocol(lexical_factory(), pool, spec);
    for (const auto& run : report.runs) {
        CHECK(run.sample_indices.size() == run.size);
        std::set<std::size_t> unique(run.sample_indices.begin(), run.sample_indices.end());
        CHECK(unique.size() == run.size); // without replacement
        for (const auto i : unique) CHECK(i < pool.size());
    }

    // Instrumented single run: the premises seen in training and in
    // post-training evaluation must be disjoint.
    std::set<std::string> trained, evaluated;
    spec.repeats = 2;
    int runs_made = 0;
    BackendFactory spy_factory = [&]() -> std::unique_ptr<engine::NLIBackend> {
        // Only observe the final repeat; earlier runs use plain backends.
        if (++runs_made < 3) {
            return std::make_unique<LexicalBackend>(LexicalBackend::Options{.hash_bits = 14});
        }
        trained.clear();
        evaluated.clear();
        return std::make_unique<SpyBackend>(&trained, &evaluated);
    };
    run_protocol(spy_factory, pool, spec);
    CHECK_FALSE(trained.empty());
    CHECK_FALSE(evaluated.empty());
    for (const auto& premise : trained) CHECK(evaluated.count(premise) == 0);
    CHECK(trained.size() + evaluated.size() == pool.size());
}

TEST_CASE("run_protocol: few-shot training lifts a zero-shot-blind task") {
    auto pool = hidden_token_pool(400, 10);
    FewShotSpec spec = quick_spec();
    spec.sample_sizes = {10, 100};
    spec.repeats = 5;
    auto report = run_protocol(lexical_factory(), pool, spec);
    REQUIRE(report.rows.size() == 2);
    // The hypothesis shares no content token with the premises, so the
    // zero-shot row is near 0; training on 100 docs must essentially solve it.
    CHECK(std::abs(report.zero_shot.mean_mcc) < 0.2);
    CHECK(report.rows[1].mean_mcc > 0.9);
    CHECK(report.rows[1].mean_mcc >= report.rows[0].mean_mcc - 1e-9);
}

TEST_CASE("run_protocol: per-run seeds make cells reproducible regardless of order") {
    auto pool = hidden_token_pool(150, 11);
    FewShotSpec spec = quick_spec();
    spec.sample_sizes = {10, 25};
    spec.repeats = 3;
    auto full = run_protocol(lexical_factory(), pool, spec);

    FewShotSpec only25 = spec;
    only25.sample_sizes = {25};
    auto partial = run_protocol(lexical_factory(), pool, only25);
    REQUIRE(partial.rows.size() == 1);
    // The 25-doc row is identical whether or not the 10-doc runs happened.
    CHECK(partial.rows[0].run_values == full.rows[1].run_values);
}

TEST_CASE("run_protocol: factory failure mid-protocol flags an incomplete report") {
    auto pool = hidden_token_pool(100, 12);
    int calls = 0;
    BackendFactory flaky = [&]() -> std::unique_ptr<engine::NLIBackend> {
        if (++calls > 3) throw Error("factory exhausted");
        LexicalBackend::Options opts;
        opts.hash_bits = 14;
        return std::make_unique<LexicalBackend>(opts);
    };
    FewShotSpec spec = quick_spec();
    spec.sample_sizes = {10, 25};
    spec.repeats = 4;
    auto report = run_protocol(flaky, pool, spec);
    CHECK_FALSE(report.complete);
    CHECK(report.runs.size() == 2); // zero-shot consumed one factory call
}

TEST_CASE("run_protocol: infeasible spec values are rejected") {
    auto pool = hidden_token_pool(50, 13);
    FewShotSpec spec = quick_spec();
    spec.sample_sizes = {50};
    CHECK_THROWS_AS(run_protocol(lexical_factory(), pool, spec), ConfigError);
    spec = quick_spec();
    spec.repeats = 1;
    CHECK_THROWS_AS(run_protocol(lexical_factory(), pool, spec), ConfigError);
    spec = quick_spec();
    spec.hypothesis.clear();
    CHECK_THROWS_AS(run_protocol(lexical_factory(), pool, spec), ConfigError);
}

TEST_CASE("report rendering: json and table carry the protocol rows") {
    auto pool = hidden_token_pool(120, 14);
    FewShotSpec spec = quick_spec();
    spec.sample_sizes = {10};
    spec.repeats = 2;
    auto report = run_protocol(lexical_factory(), pool, spec);
    const std::string js = report.to_json_string();
    CHECK(js.find("\"zero_shot\"") != std::string::npos);
    CHECK(js.find("\"run_values\"") != std::string::npos);
    const std::string table = report.to_text_table();
    CHECK(table.find("zero-shot") != std::string::npos);
    CHECK(table.find("10") != std::string::npos);
}
