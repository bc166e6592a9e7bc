#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlikit/corpus.hpp"

namespace nlikit::split {

struct SplitTargets {
    std::size_t test = 15000;
    std::size_t validation_unseen = 10000;
    std::size_t validation_seen = 5000;
};

struct SplitLog {
    std::vector<std::string> oversized_groups; // single group larger than the test target
};

// Partitions the corpus by hypothesis group: groups accumulate into test and
// validation-unseen (per-task proportional, seeded hashed order) until each
// per-task target is met; validation-seen examples are then sampled at
// document level from groups that remain in train. Assigns every example's
// split field and stores the returned manifest on the corpus.
corpus::SplitManifest split_by_hypothesis(corpus::Corpus& corpus, const SplitTargets& targets,
                                          std::uint64_t seed, SplitLog* log = nullptr);

struct LeakageReport {
    std::vector<std::string> violations;
    bool clean() const { return violations.empty(); }
};

// Checks that (a) no phrase in a test group's pool appears as the hypothesis
// of any train example, and (b) no group's examples straddle splits. All
// findings are report content, never exceptions.
LeakageReport verify_no_leakage(const corpus::Corpus& corpus,
                                const corpus::SplitManifest& manifest);

} // namespace nlikit::split
