#pragma once

// Shared helpers for the test suites: scratch directories, synthetic corpus
// builders, and independent metric oracles. The oracles deliberately avoid
// the library's code paths.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nlikit/corpus.hpp"
#include "nlikit/rng.hpp"
#include "nlikit/types.hpp"

namespace testsupport {

class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("nlikit-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Independent metric oracles (brute force, no shared code with the library).
// ---------------------------------------------------------------------------

// MCC as the Pearson correlation of the expanded 0/1 label vectors.
inline double oracle_mcc_pearson(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp,
                                 std::uint64_t fn) {
    std::vector<double> x, y; // x = truth, y = prediction (1 = positive)
    for (std::uint64_t i = 0; i < tp; ++i) { x.push_back(1); y.push_back(1); }
    for (std::uint64_t i = 0; i < tn; ++i) { x.push_back(0); y.push_back(0); }
    for (std::uint64_t i = 0; i < fp; ++i) { x.push_back(0); y.push_back(1); }
    for (std::uint64_t i = 0; i < fn; ++i) { x.push_back(1); y.push_back(0); }
    const std::size_t n = x.size();
    if (n == 0) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

inline double oracle_f1(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
    const double precision_den = static_cast<double>(tp + fp);
    const double recall_den = static_cast<double>(tp + fn);
    if (tp == 0) return 0.0;
    const double precision = tp / precision_den;
    const double recall = tp / recall_den;
    return 2.0 * precision * recall / (precision + recall);
}

inline double oracle_accuracy(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp,
                              std::uint64_t fn) {
    return static_cast<double>(tp + tn) / static_cast<double>(tp + tn + fp + fn);
}

// Kappa straight from the textbook definition via observed/chance agreement.
inline double oracle_kappa(const std::vector<int>& a, const std::vector<int>& b) {
    const double n = static_cast<double>(a.size());
    double agree = 0, a1 = 0, b1 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        agree += a[i] == b[i];
        a1 += a[i];
        b1 += b[i];
    }
    const double po = agree / n;
    const double pe = (a1 / n) * (b1 / n) + ((n - a1) / n) * ((n - b1) / n);
    return (po - pe) / (1.0 - pe);
}

// ---------------------------------------------------------------------------
// Synthetic corpus builders
// ---------------------------------------------------------------------------

inline nlikit::corpus::HypothesisRecord make_group(const std::string& group_id,
                                                   const std::string& canonical,
                                                   nlikit::Task task = nlikit::Task::topic,
                                                   const std::string& target = "t") {
    nlikit::corpus::HypothesisRecord h;
    h.hypothesis_id = "h-" + group_id;
    h.group_id = group_id;
    h.canonical_text = canonical;
    h.task = task;
    h.target = target;
    return h;
}

inline nlikit::corpus::NLIExample make_example(const std::string& id, const std::string& doc_id,
                                               const std::string& group_id,
                                               const std::string& premise,
                                               const std::string& hypothesis,
                                               nlikit::Label label) {
    nlikit::corpus::NLIExample e;
    e.example_id = id;
    e.document_id = doc_id;
    e.hypothesis_group = group_id;
    e.premise = premise;
    e.hypothesis = hypothesis;
    e.label = label;
    return e;
}

// A multi-task corpus with `groups` hypothesis groups and about
// `examples_target` examples, sized per group by a seeded draw.
inline nlikit::corpus::Corpus synthetic_corpus(std::size_t groups, std::size_t examples_target,
                                               std::uint64_t seed) {
    using namespace nlikit;
    corpus::Corpus c;
    rng::DetRng r(rng::derive(seed, "synthetic_corpus"));
    const Task tasks[] = {Task::stance, Task::topic, Task::hate_speech, Task::event};
    std::size_t made = 0;
    for (std::size_t g = 0; g < groups; ++g) {
        const Task task = tasks[g % 4];
        const std::string gid = "g" + std::to_string(g);
        auto group = make_group(gid, "This text is about target " + std::to_string(g), task,
                                "target " + std::to_string(g));
        group.variants.push_back("This document is about target " + std::to_string(g));
        c.hypotheses.push_back(group);

        const std::size_t per_group =
            1 + static_cast<std::size_t>(r.below(std::max<std::uint64_t>(
                    1, 2 * examples_target / std::max<std::size_t>(1, groups))));
        for (std::size_t i = 0; i < per_group; ++i) {
            const std::string did = gid + "-d" + std::to_string(i);
            corpus::Document d;
            d.id = did;
            d.text = "Synthetic premise " + std::to_string(made) + " mentioning target " +
                     std::to_string(g);
            d.source_dataset = "synthetic-" + std::to_string(g % 5);
            d.task = task;
            d.original_label = "label";
            c.documents.push_back(d);
            c.examples.push_back(make_example(gid + "-e" + std::to_string(i), did, gid, d.text,
                                              group.canonical_text,
                                              r.bernoulli(0.5) ? Label::entail
                                                               : Label::not_entail));
            ++made;
        }
    }
    return c;
}

} // namespace testsupport
