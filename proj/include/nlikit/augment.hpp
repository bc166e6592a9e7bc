#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlikit/corpus.hpp"
#include "nlikit/validation.hpp"

namespace nlikit::augment {

// Single-pass interpolation of the paraphrase-generation prompt.
std::string build_augmentation_prompt(std::string_view hypothesis);

// Parses a bracketed python-style list of quoted strings out of a service
// response. Throws SchemaError when no well-formed list is present.
std::vector<std::string> parse_python_list(std::string_view response);

struct VariantCandidates {
    std::string group_id;
    std::vector<std::string> candidates; // unreviewed
    bool flagged_for_manual = false;     // parse failure or item count != 3
};

// Asks the completion service for exactly 3 paraphrases of the canonical
// hypothesis. Anything else flags the record for manual authoring; nothing
// is partially accepted.
VariantCandidates generate_variants(const validation::AnnotatorConfig& cfg,
                                    const corpus::HypothesisRecord& record,
                                    validation::CompletionTransport& transport);

enum class Decision { accept, reject, undecided };

std::string to_string(Decision d);
Decision parse_decision(std::string_view s);

struct ReviewItem {
    std::string group_id;
    std::string candidate;
    Decision decision = Decision::undecided;

    bool operator==(const ReviewItem&) const = default;
};

// Appends the accepted candidates to the record's variant pool. Every
// candidate needs an accept/reject decision; undecided or missing entries
// are an error.
corpus::HypothesisRecord review_variants(const corpus::HypothesisRecord& record,
                                         std::span<const std::string> candidates,
                                         const std::map<std::string, Decision>& decisions);

// Review file: one tab-separated "group_id  decision  candidate" per line.
void write_review_file(const std::filesystem::path& file, std::span<const ReviewItem> items);
std::vector<ReviewItem> read_review_file(const std::filesystem::path& file);

struct SynonymPair {
    std::string word;
    std::string synonym;
};

// The two stock substitutions; callers may extend via config.
std::vector<SynonymPair> default_synonym_table();

// Independently swaps each whole-word occurrence of a table word with
// probability 0.5 under the seed, preserving the case of the first letter.
std::string substitute_synonyms(std::string_view phrase, std::span<const SynonymPair> table,
                                std::uint64_t seed);

// Sets every example's hypothesis to a uniform draw over its group's phrase
// pool, after seeded synonym substitution of the pooled phrases. New
// substituted phrasings are appended to the group's variants so examples
// stay inside their group pool. Labels and premises are untouched.
void assign_augmented(std::vector<corpus::NLIExample>& examples,
                      std::vector<corpus::HypothesisRecord>& records,
                      std::span<const SynonymPair> table, std::uint64_t seed);

} // namespace nlikit::augment
