#include "nlikit/ingest.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <unordered_map>

#include "nlikit/errors.hpp"
#include "nlikit/rng.hpp"
#include "nlikit/text.hpp"

namespace nlikit::ingest {

std::string to_string(RuleKind k) {
    switch (k) {
    case RuleKind::strip_prefix_pattern: return "strip_prefix_pattern";
    case RuleKind::strip_suffix_pattern: return "strip_suffix_pattern";
    case RuleKind::remove_pattern: return "remove_pattern";
    }
    throw SchemaError("invalid RuleKind value");
}

RuleKind parse_rule_kind(std::string_view s) {
    if (s == "strip_prefix_pattern") return RuleKind::strip_prefix_pattern;
    if (s == "strip_suffix_pattern") return RuleKind::strip_suffix_pattern;
    if (s == "remove_pattern") return RuleKind::remove_pattern;
    throw SchemaError("unknown cleaning rule kind: '" + std::string(s) + "'");
}

namespace {

std::regex compile_rule(const CleaningRule& rule) {
    try {
        return std::regex(rule.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
        throw ConfigError("cleaning rule pattern does not compile: '" + rule.pattern +
                          "': " + e.what());
    }
}

std::string apply_rule(const std::string& input, const CleaningRule& rule) {
    const std::regex re = compile_rule(rule);
    switch (rule.kind) {
    case RuleKind::strip_prefix_pattern: {
        std::smatch m;
        if (std::regex_search(input, m, re, std::regex_constants::match_continuous))
            return input.substr(static_cast<std::size_t>(m.length(0)));
        return input;
    }
    case RuleKind::strip_suffix_pattern: {
        // Keep the last match only if it ends at the end of the string.
        auto begin = std::sregex_iterator(input.begin(), input.end(), re);
        auto end = std::sregex_iterator();
        for (auto it = begin; it != end; ++it) {
            const auto pos = static_cast<std::size_t>(it->position(0));
            const auto len = static_cast<std::size_t>(it->length(0));
            if (pos + len == input.size() && len > 0)
                return input.substr(0, pos);
        }
        return input;
    }
    case RuleKind::remove_pattern:
        return std::regex_replace(input, re, "");
    }
    return input;
}

} // namespace

std::optional<std::string> clean_document(std::string_view text,
                                          std::span<const CleaningRule> rules) {
    std::string cur(text);
    for (const auto& rule : rules) cur = apply_rule(cur, rule);
    cur = text::trim(cur);
    if (cur.empty()) return std::nullopt;
    return cur;
}

namespace {

// The placeholder is a single {...} span; its content is documentation only.
std::pair<std::size_t, std::size_t> find_placeholder(const std::string& tmpl) {
    std::size_t first = std::string::npos, len = 0;
    int count = 0;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] != '{') continue;
        const auto close = tmpl.find('}', i);
        if (close == std::string::npos)
            throw ConfigError("hypothesis template has an unterminated placeholder: " + tmpl);
        ++count;
        if (first == std::string::npos) {
            first = i;
            len = close - i + 1;
        }
        i = close;
    }
    if (count == 0)
        throw ConfigError("hypothesis template has no placeholder: " + tmpl);
    if (count > 1)
        throw ConfigError("hypothesis template must contain exactly one placeholder: " + tmpl);
    return {first, len};
}

} // namespace

corpus::HypothesisRecord instantiate_hypothesis(const HypothesisTemplate& tmpl,
                                                std::string_view target) {
    if (target.empty()) throw ConfigError("hypothesis target must be non-empty");
    const auto [pos, len] = find_placeholder(tmpl.template_text);
    corpus::HypothesisRecord rec;
    rec.canonical_text = tmpl.template_text.substr(0, pos) + std::string(target) +
                         tmpl.template_text.substr(pos + len);
    rec.task = tmpl.task;
    rec.target = std::string(target);
    const std::uint64_t gid =
        rng::derive(0, "hypothesis-group", to_string(tmpl.task), target, tmpl.template_text);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "g%016llx", static_cast<unsigned long long>(gid));
    rec.group_id = buf;
    rec.hypothesis_id = "h-" + rec.group_id;
    return rec;
}

std::vector<corpus::Document> build_documents(std::span<const RawRecord> rows,
                                              const AdapterSpec& adapter,
                                              std::vector<DropLogEntry>* drop_log) {
    const auto text_it = adapter.field_map.find("text");
    const auto label_it = adapter.field_map.find("label");
    if (text_it == adapter.field_map.end() || label_it == adapter.field_map.end())
        throw ConfigError("adapter field_map must cover the 'text' and 'label' roles");
    const auto target_it = adapter.field_map.find("target");
    const auto id_it = adapter.field_map.find("id");

    std::vector<corpus::Document> docs;
    docs.reserve(rows.size());
    std::size_t row_no = 0;
    for (const auto& row : rows) {
        ++row_no;
        auto field = [&](const std::string& column) -> const std::string& {
            auto it = row.find(column);
            if (it == row.end())
                throw SchemaError(adapter.source_name + " row " + std::to_string(row_no) +
                                  ": missing column '" + column + "'");
            return it->second;
        };
        corpus::Document d;
        d.id = id_it != adapter.field_map.end()
                   ? field(id_it->second)
                   : adapter.source_name + "-" + std::to_string(row_no);
        d.source_dataset = adapter.source_name;
        d.task = adapter.task;
        d.original_label = field(label_it->second);
        if (target_it != adapter.field_map.end()) d.meta["target"] = field(target_it->second);

        auto cleaned = clean_document(field(text_it->second), adapter.cleaning_rules);
        if (!cleaned) {
            if (drop_log)
                drop_log->push_back({d.id, "text empty after cleaning"});
            continue;
        }
        d.text = std::move(*cleaned);
        docs.push_back(std::move(d));
    }
    return docs;
}

ConversionResult convert_to_nli(std::span<const corpus::Document> docs,
                                const AdapterSpec& adapter,
                                const std::map<std::string, Label>& label_to_entailment) {
    // Every original label must be routable before any example is emitted.
    std::set<std::string> unmapped;
    for (const auto& d : docs) {
        if (adapter.target_map.count(d.original_label) == 0 &&
            label_to_entailment.count(d.original_label) == 0)
            unmapped.insert(d.original_label);
    }
    if (!unmapped.empty()) {
        std::string list;
        for (const auto& l : unmapped) {
            if (!list.empty()) list += ", ";
            list += "'" + l + "'";
        }
        throw InvariantError("conversion aborted; unmapped original labels: " + list);
    }

    ConversionResult out;
    std::unordered_map<std::string, std::size_t> group_index;
    auto intern_group = [&](std::string_view target) -> const corpus::HypothesisRecord& {
        auto rec = instantiate_hypothesis(adapter.hypothesis_template, target);
        auto [it, fresh] = group_index.emplace(rec.group_id, out.hypotheses.size());
        if (fresh) out.hypotheses.push_back(std::move(rec));
        return out.hypotheses[it->second];
    };

    for (const auto& d : docs) {
        const corpus::HypothesisRecord* group = nullptr;
        Label label = Label::entail;
        if (auto it = adapter.target_map.find(d.original_label); it != adapter.target_map.end()) {
            group = &intern_group(it->second);
        } else {
            label = label_to_entailment.at(d.original_label);
            auto meta_it = d.meta.find("target");
            const std::string& target =
                meta_it != d.meta.end() ? meta_it->second : adapter.fixed_target;
            if (target.empty())
                throw ConfigError("adapter for " + adapter.source_name +
                                  " routes label '" + d.original_label +
                                  "' through label_to_entailment but has no target");
            group = &intern_group(target);
        }

        corpus::NLIExample e;
        e.example_id = d.id + "#" + group->group_id;
        e.document_id = d.id;
        e.hypothesis_group = group->group_id;
        e.premise = d.text;
        e.hypothesis = group->canonical_text;
        e.label = label;
        e.provenance = Provenance::original;
        out.examples.push_back(std::move(e));
    }
    return out;
}

std::vector<corpus::NLIExample> negative_sample(std::span<const corpus::NLIExample> examples,
                                                std::span<const corpus::HypothesisRecord> pool,
                                                double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0) || ratio > 1.0)
        throw ConfigError("negative sampling ratio must be in (0, 1]");

    std::vector<const corpus::HypothesisRecord*> groups;
    std::set<std::string> seen_groups;
    for (const auto& h : pool) {
        if (seen_groups.insert(h.group_id).second) groups.push_back(&h);
    }
    if (groups.size() < 2)
        throw InvariantError("negative sampling needs at least 2 distinct hypothesis groups, got " +
                             std::to_string(groups.size()));

    std::vector<std::size_t> positives;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (examples[i].label == Label::entail &&
            examples[i].provenance == Provenance::original)
            positives.push_back(i);
    }

    const auto count = static_cast<std::size_t>(ratio * static_cast<double>(positives.size()));
    rng::DetRng selector(rng::derive(seed, "negative_sample/select"));
    std::vector<std::size_t> chosen = selector.sample_without_replacement(positives.size(), count);
    std::sort(chosen.begin(), chosen.end());

    std::vector<corpus::NLIExample> negatives;
    negatives.reserve(count);
    for (const std::size_t pick : chosen) {
        const auto& src = examples[positives[pick]];
        std::vector<const corpus::HypothesisRecord*> others;
        others.reserve(groups.size());
        for (const auto* g : groups)
            if (g->group_id != src.hypothesis_group) others.push_back(g);
        if (others.empty())
            throw InvariantError("no alternative hypothesis group for example " + src.example_id);

        // Per-example derived stream: assignment is stable under any
        // parallel partitioning of the loop.
        rng::DetRng assigner(rng::derive(seed, "negative_sample/assign", src.example_id));
        const auto* target = others[assigner.below(others.size())];

        corpus::NLIExample neg = src;
        neg.example_id = src.example_id + "#neg";
        neg.hypothesis_group = target->group_id;
        neg.hypothesis = target->canonical_text;
        neg.label = Label::not_entail;
        neg.provenance = Provenance::negative_sample;
        neg.validation_status = ValidationStatus::unvalidated;
        negatives.push_back(std::move(neg));
    }
    return negatives;
}

} // namespace nlikit::ingest
