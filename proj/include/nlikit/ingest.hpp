#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlikit/corpus.hpp"
#include "nlikit/types.hpp"

namespace nlikit::ingest {

enum class RuleKind { strip_prefix_pattern, strip_suffix_pattern, remove_pattern };

std::string to_string(RuleKind k);
RuleKind parse_rule_kind(std::string_view s);

// One regex-based cleaning rule. Only matched spans are removed; formatting,
// capitalization and punctuation outside the match are untouched.
struct CleaningRule {
    RuleKind kind = RuleKind::remove_pattern;
    std::string pattern;
};

// A hypothesis template with exactly one {placeholder} span.
struct HypothesisTemplate {
    std::string template_text;
    Task task = Task::topic;
};

// Declarative source-dataset adapter. New sources are config, not code.
struct AdapterSpec {
    std::string source_name;
    Task task = Task::topic;
    // role -> input column. "text" and "label" are required; "target" is an
    // optional column naming the per-document hypothesis target.
    std::map<std::string, std::string> field_map;
    std::vector<CleaningRule> cleaning_rules; // applied in declared order
    HypothesisTemplate hypothesis_template;
    // original label -> template target, for positive-only topic/event data.
    std::map<std::string, std::string> target_map;
    // Fallback target when label_to_entailment routes a label and no target
    // column is mapped (typical for per-dataset stance objects).
    std::string fixed_target;
};

// Applies each rule once, in order, then trims outer whitespace. Returns
// nullopt when the text is empty after cleaning (drop signal).
std::optional<std::string> clean_document(std::string_view text,
                                          std::span<const CleaningRule> rules);

// Fills the template placeholder. group_id is deterministic over
// (task, target, template), so re-ingesting reproduces identical groups.
corpus::HypothesisRecord instantiate_hypothesis(const HypothesisTemplate& tmpl,
                                                std::string_view target);

using RawRecord = std::map<std::string, std::string>;

struct DropLogEntry {
    std::string record_id;
    std::string reason;
};

// Raw rows -> cleaned Documents. Rows whose text is empty after cleaning are
// excluded and logged.
std::vector<corpus::Document> build_documents(std::span<const RawRecord> rows,
                                              const AdapterSpec& adapter,
                                              std::vector<DropLogEntry>* drop_log = nullptr);

struct ConversionResult {
    std::vector<corpus::NLIExample> examples;
    std::vector<corpus::HypothesisRecord> hypotheses;
};

// One NLIExample per (document, mapped hypothesis), provenance=original.
// Labels present in the adapter's target_map instantiate their own
// entailed hypothesis; labels present in label_to_entailment pair with the
// adapter-level target. Unmapped labels abort with the full list.
ConversionResult convert_to_nli(std::span<const corpus::Document> docs,
                                const AdapterSpec& adapter,
                                const std::map<std::string, Label>& label_to_entailment);

// Duplicates a seeded fraction of the entail examples, pairing each copy
// with a uniformly drawn hypothesis group other than its own and labeling it
// not_entail. floor(ratio * positives) negatives are produced.
std::vector<corpus::NLIExample> negative_sample(std::span<const corpus::NLIExample> examples,
                                                std::span<const corpus::HypothesisRecord> pool,
                                                double ratio, std::uint64_t seed);

} // namespace nlikit::ingest
