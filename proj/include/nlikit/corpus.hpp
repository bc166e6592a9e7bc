#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nlikit/types.hpp"

namespace nlikit::corpus {

struct Document {
    std::string id;
    std::string text; // the premise
    std::string source_dataset;
    Task task = Task::topic;
    std::string original_label;
    std::map<std::string, std::string> meta;

    bool operator==(const Document&) const = default;
};

// A canonical hypothesis plus its accepted paraphrases. All phrasings of
// one semantic hypothesis share a group_id; the group is the atomic unit
// for leak-free splitting.
struct HypothesisRecord {
    std::string hypothesis_id;
    std::string canonical_text;
    std::vector<std::string> variants; // reviewer-accepted paraphrases only
    std::string group_id;
    Task task = Task::topic;
    std::string target; // the topic/event/stance object the template was filled with

    std::vector<std::string> phrase_pool() const;
    bool in_pool(std::string_view phrase) const;

    bool operator==(const HypothesisRecord&) const = default;
};

struct NLIExample {
    std::string example_id;
    std::string document_id;
    std::string hypothesis_group;
    std::string premise;
    std::string hypothesis; // the phrasing actually paired
    Label label = Label::entail;
    Provenance provenance = Provenance::original;
    ValidationStatus validation_status = ValidationStatus::unvalidated;
    Split split = Split::unassigned;

    bool operator==(const NLIExample&) const = default;
};

// Group-level split assignment. Document-level validation-seen sampling is
// carried on the examples themselves (Split::validation_seen).
enum class GroupSplit { train, validation, test };

std::string to_string(GroupSplit s);
GroupSplit parse_group_split(std::string_view s);

struct SplitManifest {
    std::map<std::string, GroupSplit> split_of;
    std::set<std::string> validation_seen_groups;
    std::uint64_t seed = 0;
    std::map<std::string, std::size_t> counts; // per-split example totals

    bool operator==(const SplitManifest&) const = default;
};

struct Corpus {
    std::vector<Document> documents;
    std::vector<HypothesisRecord> hypotheses;
    std::vector<NLIExample> examples;
    std::optional<SplitManifest> split;

    const Document* find_document(std::string_view id) const;
    const HypothesisRecord* find_group(std::string_view group_id) const;
    std::map<Task, std::size_t> document_counts_by_task() const;
    std::map<Task, std::size_t> example_counts_by_task() const;

    bool operator==(const Corpus&) const = default;
};

// Checks every type invariant; throws InvariantError naming the first
// offending record id.
void validate(const Corpus& corpus);

// Writes documents.jsonl / hypotheses.jsonl / examples.jsonl plus
// manifest.json (and split_manifest.json when present) under `dir`.
// One sorted-key JSON object per line, UTF-8. Returns the manifest
// checksum (SHA-256 over the concatenated record files).
std::string save_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                        std::string_view stage = "unspecified");

// Loads a corpus directory, verifying the manifest checksum and re-checking
// all invariants. Throws CorruptionError on hash mismatch and SchemaError
// on malformed records.
Corpus load_corpus(const std::filesystem::path& dir);

// Checksum recorded in an existing corpus directory's manifest.
std::string manifest_checksum(const std::filesystem::path& dir);

} // namespace nlikit::corpus
