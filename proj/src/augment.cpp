#include "nlikit/augment.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "nlikit/errors.hpp"
#include "nlikit/rng.hpp"
#include "nlikit/text.hpp"

namespace nlikit::augment {

std::string build_augmentation_prompt(std::string_view hypothesis) {
    if (hypothesis.empty())
        throw ConfigError("augmentation prompt needs a non-empty hypothesis");
    std::string out;
    out.reserve(96 + hypothesis.size());
    out += "Write 3 sentences that are synonymous to this sentence:\n";
    out += hypothesis;
    out += "\nFormat your output as a python list named `hypoths.'";
    return out;
}

std::vector<std::string> parse_python_list(std::string_view response) {
    const auto open = response.find('[');
    const auto close = response.rfind(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close <= open)
        throw SchemaError("response contains no bracketed list");

    std::vector<std::string> items;
    std::size_t i = open + 1;
    while (i < close) {
        while (i < close && (response[i] == ' ' || response[i] == ',' || response[i] == '\n' ||
                             response[i] == '\t' || response[i] == '\r'))
            ++i;
        if (i >= close) break;
        const char quote = response[i];
        if (quote != '\'' && quote != '"')
            throw SchemaError("list items must be quoted strings");
        ++i;
        std::string item;
        bool closed = false;
        while (i < close) {
            const char c = response[i];
            if (c == '\\' && i + 1 < close) {
                item.push_back(response[i + 1]);
                i += 2;
                continue;
            }
            if (c == quote) {
                closed = true;
                ++i;
                break;
            }
            item.push_back(c);
            ++i;
        }
        if (!closed) throw SchemaError("unterminated string in list");
        items.push_back(std::move(item));
    }
    if (items.empty()) throw SchemaError("bracketed list is empty");
    return items;
}

VariantCandidates generate_variants(const validation::AnnotatorConfig& cfg,
                                    const corpus::HypothesisRecord& record,
                                    validation::CompletionTransport& transport) {
    validation::check_config(cfg);
    validation::CompletionRequest request{cfg.model_name,
                                          cfg.system_message,
                                          build_augmentation_prompt(record.canonical_text),
                                          cfg.max_tokens,
                                          cfg.temperature,
                                          cfg.token_bias};
    VariantCandidates out;
    out.group_id = record.group_id;
    std::string response;
    try {
        response = transport.complete(request);
    } catch (const ServiceError&) {
        out.flagged_for_manual = true;
        return out;
    }
    try {
        auto items = parse_python_list(response);
        if (items.size() != 3) {
            out.flagged_for_manual = true;
            return out;
        }
        out.candidates = std::move(items);
    } catch (const SchemaError&) {
        out.flagged_for_manual = true;
    }
    return out;
}

std::string to_string(Decision d) {
    switch (d) {
    case Decision::accept: return "accept";
    case Decision::reject: return "reject";
    case Decision::undecided: return "undecided";
    }
    throw SchemaError("invalid Decision value");
}

Decision parse_decision(std::string_view s) {
    if (s == "accept") return Decision::accept;
    if (s == "reject") return Decision::reject;
    if (s == "undecided") return Decision::undecided;
    throw SchemaError("unknown review decision: '" + std::string(s) + "'");
}

corpus::HypothesisRecord review_variants(const corpus::HypothesisRecord& record,
                                         std::span<const std::string> candidates,
                                         const std::map<std::string, Decision>& decisions) {
    corpus::HypothesisRecord out = record;
    for (const auto& candidate : candidates) {
        auto it = decisions.find(candidate);
        if (it == decisions.end() || it->second == Decision::undecided)
            throw Error("missing review decision for candidate: '" + candidate + "'");
        if (it->second == Decision::accept && !out.in_pool(candidate))
            out.variants.push_back(candidate);
    }
    return out;
}

void write_review_file(const std::filesystem::path& file, std::span<const ReviewItem> items) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write review file: " + file.string());
    for (const auto& item : items) {
        if (item.candidate.find('\t') != std::string::npos ||
            item.candidate.find('\n') != std::string::npos)
            throw Error("review candidate contains tab or newline: " + item.candidate);
        out << item.group_id << '\t' << to_string(item.decision) << '\t' << item.candidate
            << '\n';
    }
}

std::vector<ReviewItem> read_review_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open review file: " + file.string());
    std::vector<ReviewItem> items;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw SchemaError(file.filename().string() + ":" + std::to_string(lineno) +
                              ": expected group_id<TAB>decision<TAB>candidate");
        ReviewItem item;
        item.group_id = line.substr(0, t1);
        item.decision = parse_decision(line.substr(t1 + 1, t2 - t1 - 1));
        item.candidate = line.substr(t2 + 1);
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<SynonymPair> default_synonym_table() {
    return {{"text", "document"}, {"supports", "endorses"}};
}

std::string substitute_synonyms(std::string_view phrase, std::span<const SynonymPair> table,
                                std::uint64_t seed) {
    rng::DetRng r(rng::derive(seed, "substitute_synonyms"));
    std::string cur(phrase);
    for (const auto& pair : table) {
        cur = text::replace_whole_word(cur, pair.word, pair.synonym,
                                       [&](std::size_t) { return r.bernoulli(0.5); });
    }
    return cur;
}

void assign_augmented(std::vector<corpus::NLIExample>& examples,
                      std::vector<corpus::HypothesisRecord>& records,
                      std::span<const SynonymPair> table, std::uint64_t seed) {
    struct PoolEntry {
        std::vector<std::string> assigned; // post-substitution image of the pool
    };
    std::unordered_map<std::string, PoolEntry> pools;

    for (auto& rec : records) {
        if (rec.canonical_text.empty())
            throw Error("hypothesis group has an empty phrase pool: " + rec.group_id);
        const auto pool = rec.phrase_pool();
        PoolEntry entry;
        entry.assigned.reserve(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const std::uint64_t phrase_seed = rng::derive(seed, "pool", rec.group_id, i);
            std::string substituted = substitute_synonyms(pool[i], table, phrase_seed);
            // Substituted phrasings join the group pool so every assigned
            // hypothesis stays traceable to its group.
            if (!rec.in_pool(substituted)) rec.variants.push_back(substituted);
            entry.assigned.push_back(std::move(substituted));
        }
        pools.emplace(rec.group_id, std::move(entry));
    }

    for (auto& e : examples) {
        auto it = pools.find(e.hypothesis_group);
        if (it == pools.end())
            throw Error("example " + e.example_id + " references group without phrase pool: " +
                        e.hypothesis_group);
        const auto& assigned = it->second.assigned;
        rng::DetRng r(rng::derive(seed, "assign", e.example_id));
        e.hypothesis = assigned[r.below(assigned.size())];
    }
}

} // namespace nlikit::augment
