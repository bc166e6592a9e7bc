#include "nlikit/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "nlikit/errors.hpp"
#include "nlikit/rng.hpp"

namespace nlikit::split {

namespace {

struct GroupInfo {
    std::string group_id;
    Task task = Task::topic;
    std::vector<std::size_t> example_indices;
};

} // namespace

corpus::SplitManifest split_by_hypothesis(corpus::Corpus& corpus, const SplitTargets& targets,
                                          std::uint64_t seed, SplitLog* log) {
    const std::size_t total = corpus.examples.size();
    if (targets.test + targets.validation_unseen + targets.validation_seen > total)
        throw ConfigError("split targets exceed corpus size (" + std::to_string(total) +
                          " examples)");

    std::unordered_map<std::string, Task> group_task;
    for (const auto& h : corpus.hypotheses) group_task.emplace(h.group_id, h.task);

    std::map<std::string, GroupInfo> groups;
    std::map<Task, std::size_t> task_totals;
    for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
        const auto& e = corpus.examples[i];
        auto tit = group_task.find(e.hypothesis_group);
        if (tit == group_task.end())
            throw InvariantError("example " + e.example_id + " references unknown group " +
                                 e.hypothesis_group);
        auto& info = groups[e.hypothesis_group];
        info.group_id = e.hypothesis_group;
        info.task = tit->second;
        info.example_indices.push_back(i);
        ++task_totals[tit->second];
    }

    // Hashed group order under seed; stable tie-break by group id.
    std::map<Task, std::vector<const GroupInfo*>> per_task_order;
    for (const auto& [gid, info] : groups) per_task_order[info.task].push_back(&info);
    for (auto& [task, list] : per_task_order) {
        std::sort(list.begin(), list.end(), [&](const GroupInfo* a, const GroupInfo* b) {
            const auto ha = rng::derive(seed, "group-order", a->group_id);
            const auto hb = rng::derive(seed, "group-order", b->group_id);
            return ha != hb ? ha < hb : a->group_id < b->group_id;
        });
    }

    // Per-task quotas proportional to the task's share of examples.
    auto quota = [&](std::size_t target, Task task) -> std::size_t {
        const double share =
            static_cast<double>(task_totals[task]) / static_cast<double>(total);
        return static_cast<std::size_t>(std::llround(target * share));
    };

    corpus::SplitManifest manifest;
    manifest.seed = seed;

    // Greedy accumulation: whole groups until the per-task quota is met.
    auto accumulate = [&](std::size_t target, corpus::GroupSplit split_value,
                          std::map<Task, std::size_t>& cursors) {
        for (auto& [task, list] : per_task_order) {
            const std::size_t q = quota(target, task);
            std::size_t have = 0;
            auto& cursor = cursors[task];
            while (have < q) {
                if (cursor >= list.size())
                    throw ConfigError("split targets infeasible: task " + to_string(task) +
                                      " ran out of groups");
                const GroupInfo* g = list[cursor++];
                manifest.split_of[g->group_id] = split_value;
                have += g->example_indices.size();
                if (log && split_value == corpus::GroupSplit::test &&
                    g->example_indices.size() > targets.test)
                    log->oversized_groups.push_back(g->group_id);
            }
        }
    };

    std::map<Task, std::size_t> cursors;
    accumulate(targets.test, corpus::GroupSplit::test, cursors);
    accumulate(targets.validation_unseen, corpus::GroupSplit::validation, cursors);
    for (const auto& [gid, info] : groups) {
        if (manifest.split_of.count(gid) == 0)
            manifest.split_of[gid] = corpus::GroupSplit::train;
    }

    // Group-level assignment onto examples.
    for (auto& e : corpus.examples) {
        switch (manifest.split_of.at(e.hypothesis_group)) {
        case corpus::GroupSplit::test: e.split = Split::test; break;
        case corpus::GroupSplit::validation: e.split = Split::validation_unseen; break;
        case corpus::GroupSplit::train: e.split = Split::train; break;
        }
    }

    // Validation-seen: document-level samples whose groups stay in train.
    for (const auto& [task, count] : task_totals) {
        const std::size_t q = quota(targets.validation_seen, task);
        if (q == 0) continue;
        std::vector<std::size_t> train_pool;
        for (const auto* g : per_task_order[task]) {
            if (manifest.split_of.at(g->group_id) != corpus::GroupSplit::train) continue;
            train_pool.insert(train_pool.end(), g->example_indices.begin(),
                              g->example_indices.end());
        }
        if (train_pool.size() < q)
            throw ConfigError("split targets infeasible: not enough train examples for the "
                              "validation-seen slice of task " +
                              to_string(task));
        rng::DetRng r(rng::derive(seed, "validation-seen", to_string(task)));
        for (const auto pick : r.sample_without_replacement(train_pool.size(), q)) {
            auto& e = corpus.examples[train_pool[pick]];
            e.split = Split::validation_seen;
            manifest.validation_seen_groups.insert(e.hypothesis_group);
        }
    }

    std::map<std::string, std::size_t> counts;
    for (const auto& e : corpus.examples) ++counts[to_string(e.split)];
    for (const char* key : {"train", "validation_seen", "validation_unseen", "test"})
        counts.emplace(key, 0);
    manifest.counts = std::move(counts);

    corpus.split = manifest;
    return manifest;
}

LeakageReport verify_no_leakage(const corpus::Corpus& corpus,
                                const corpus::SplitManifest& manifest) {
    LeakageReport report;

    std::unordered_map<std::string, const corpus::HypothesisRecord*> records;
    for (const auto& h : corpus.hypotheses) records.emplace(h.group_id, &h);

    // Manifest must cover every group that examples reference.
    std::unordered_set<std::string> referenced;
    for (const auto& e : corpus.examples) referenced.insert(e.hypothesis_group);
    for (const auto& gid : referenced) {
        if (manifest.split_of.count(gid) == 0)
            report.violations.push_back("group not covered by manifest: " + gid);
    }

    // (b) No group straddles splits; every example sits in exactly one split
    // consistent with its group's assignment.
    for (const auto& e : corpus.examples) {
        auto it = manifest.split_of.find(e.hypothesis_group);
        if (it == manifest.split_of.end()) continue;
        const corpus::GroupSplit gs = it->second;
        const bool ok = (gs == corpus::GroupSplit::test && e.split == Split::test) ||
                        (gs == corpus::GroupSplit::validation &&
                         e.split == Split::validation_unseen) ||
                        (gs == corpus::GroupSplit::train &&
                         (e.split == Split::train || e.split == Split::validation_seen));
        if (e.split == Split::unassigned) {
            report.violations.push_back("example not assigned to any split: " + e.example_id);
        } else if (!ok) {
            report.violations.push_back("group " + e.hypothesis_group + " straddles splits (" +
                                        "example " + e.example_id + " is in " +
                                        to_string(e.split) + ")");
        }
    }

    // (a) String-level scan: no phrase from a test group's pool may appear
    // as a train example's hypothesis.
    std::unordered_set<std::string> test_phrases;
    for (const auto& [gid, gs] : manifest.split_of) {
        if (gs != corpus::GroupSplit::test) continue;
        auto rit = records.find(gid);
        if (rit == records.end()) continue;
        for (const auto& phrase : rit->second->phrase_pool()) test_phrases.insert(phrase);
    }
    for (const auto& e : corpus.examples) {
        if (e.split != Split::train) continue;
        if (test_phrases.count(e.hypothesis) != 0)
            report.violations.push_back("test-pool phrase used by train example " +
                                        e.example_id + ": \"" + e.hypothesis + "\"");
    }

    // Validation-seen groups must be train groups.
    for (const auto& gid : manifest.validation_seen_groups) {
        auto it = manifest.split_of.find(gid);
        if (it == manifest.split_of.end() || it->second != corpus::GroupSplit::train)
            report.violations.push_back("validation-seen group not assigned to train: " + gid);
    }

    return report;
}

} // namespace nlikit::split
