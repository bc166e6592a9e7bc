#include "nlikit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "nlikit/errors.hpp"
#include "nlikit/sha256.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace nlikit::corpus {

std::vector<std::string> HypothesisRecord::phrase_pool() const {
    std::vector<std::string> pool;
    pool.reserve(1 + variants.size());
    pool.push_back(canonical_text);
    pool.insert(pool.end(), variants.begin(), variants.end());
    return pool;
}

bool HypothesisRecord::in_pool(std::string_view phrase) const {
    if (canonical_text == phrase) return true;
    return std::find(variants.begin(), variants.end(), phrase) != variants.end();
}

std::string to_string(GroupSplit s) {
    switch (s) {
    case GroupSplit::train: return "train";
    case GroupSplit::validation: return "validation";
    case GroupSplit::test: return "test";
    }
    throw SchemaError("invalid GroupSplit value");
}

GroupSplit parse_group_split(std::string_view s) {
    if (s == "train") return GroupSplit::train;
    if (s == "validation") return GroupSplit::validation;
    if (s == "test") return GroupSplit::test;
    throw SchemaError("unknown split value: '" + std::string(s) + "'");
}

const Document* Corpus::find_document(std::string_view id) const {
    for (const auto& d : documents)
        if (d.id == id) return &d;
    return nullptr;
}

const HypothesisRecord* Corpus::find_group(std::string_view group_id) const {
    for (const auto& h : hypotheses)
        if (h.group_id == group_id) return &h;
    return nullptr;
}

std::map<Task, std::size_t> Corpus::document_counts_by_task() const {
    std::map<Task, std::size_t> counts;
    for (const auto& d : documents) ++counts[d.task];
    return counts;
}

std::map<Task, std::size_t> Corpus::example_counts_by_task() const {
    std::unordered_map<std::string, Task> group_task;
    for (const auto& h : hypotheses) group_task[h.group_id] = h.task;
    std::map<Task, std::size_t> counts;
    for (const auto& e : examples) {
        auto it = group_task.find(e.hypothesis_group);
        if (it != group_task.end()) ++counts[it->second];
    }
    return counts;
}

void validate(const Corpus& corpus) {
    std::unordered_set<std::string> doc_ids;
    for (const auto& d : corpus.documents) {
        if (d.id.empty()) throw InvariantError("document with empty id");
        if (!doc_ids.insert(d.id).second)
            throw InvariantError("duplicate document id: " + d.id);
        if (d.text.empty())
            throw InvariantError("document has empty text after cleaning: " + d.id);
    }

    std::unordered_set<std::string> hyp_ids;
    std::unordered_map<std::string, const HypothesisRecord*> groups;
    for (const auto& h : corpus.hypotheses) {
        if (h.hypothesis_id.empty())
            throw InvariantError("hypothesis with empty id (group " + h.group_id + ")");
        if (!hyp_ids.insert(h.hypothesis_id).second)
            throw InvariantError("duplicate hypothesis id: " + h.hypothesis_id);
        if (h.canonical_text.empty())
            throw InvariantError("hypothesis has empty canonical text: " + h.hypothesis_id);
        auto [it, fresh] = groups.emplace(h.group_id, &h);
        if (!fresh) {
            // All phrasings within one group map to the same (task, target).
            if (it->second->task != h.task || it->second->target != h.target)
                throw InvariantError("group " + h.group_id +
                                     " maps to conflicting (task, target) pairs");
        }
    }

    std::unordered_set<std::string> example_ids;
    for (const auto& e : corpus.examples) {
        if (e.example_id.empty()) throw InvariantError("example with empty id");
        if (!example_ids.insert(e.example_id).second)
            throw InvariantError("duplicate example id: " + e.example_id);
        if (e.premise.empty())
            throw InvariantError("example has empty premise: " + e.example_id);
        if (!doc_ids.empty() && doc_ids.count(e.document_id) == 0)
            throw InvariantError("example " + e.example_id + " references unknown document " +
                                 e.document_id);
        auto git = groups.find(e.hypothesis_group);
        if (git == groups.end())
            throw InvariantError("example " + e.example_id + " references unknown group " +
                                 e.hypothesis_group);
        if (!git->second->in_pool(e.hypothesis))
            throw InvariantError("example " + e.example_id +
                                 " pairs a hypothesis outside its group's phrase pool");
        if (e.provenance == Provenance::negative_sample && e.label != Label::not_entail)
            throw InvariantError("negative-sample example must be labeled not_entail: " +
                                 e.example_id);
    }

    if (corpus.split) {
        const auto& m = *corpus.split;
        for (const auto& g : m.validation_seen_groups) {
            auto it = m.split_of.find(g);
            if (it == m.split_of.end() || it->second != GroupSplit::train)
                throw InvariantError("validation-seen group not assigned to train: " + g);
        }
        for (const auto& e : corpus.examples) {
            auto it = m.split_of.find(e.hypothesis_group);
            if (it == m.split_of.end())
                throw InvariantError("split manifest does not cover group " +
                                     e.hypothesis_group);
            const GroupSplit gs = it->second;
            switch (e.split) {
            case Split::test:
                if (gs != GroupSplit::test)
                    throw InvariantError("test example in non-test group: " + e.example_id);
                break;
            case Split::validation_unseen:
                if (gs != GroupSplit::validation)
                    throw InvariantError("validation-unseen example in non-validation group: " +
                                         e.example_id);
                break;
            case Split::train:
            case Split::validation_seen:
                if (gs != GroupSplit::train)
                    throw InvariantError("train-side example in non-train group: " +
                                         e.example_id);
                break;
            case Split::unassigned:
                throw InvariantError("example unassigned despite split manifest: " +
                                     e.example_id);
            }
        }
    }
}

namespace {

json document_to_json(const Document& d) {
    json meta = json::object();
    for (const auto& [k, v] : d.meta) meta[k] = v;
    return json{{"id", d.id},
                {"text", d.text},
                {"source_dataset", d.source_dataset},
                {"task", to_string(d.task)},
                {"original_label", d.original_label},
                {"meta", meta}};
}

json hypothesis_to_json(const HypothesisRecord& h) {
    return json{{"hypothesis_id", h.hypothesis_id},
                {"canonical_text", h.canonical_text},
                {"variants", h.variants},
                {"group_id", h.group_id},
                {"task", to_string(h.task)},
                {"target", h.target}};
}

json example_to_json(const NLIExample& e) {
    // Labels go out both as integer and name so a convention flip cannot
    // pass unnoticed.
    return json{{"example_id", e.example_id},
                {"document_id", e.document_id},
                {"hypothesis_group", e.hypothesis_group},
                {"premise", e.premise},
                {"hypothesis", e.hypothesis},
                {"label", static_cast<int>(e.label)},
                {"label_name", to_string(e.label)},
                {"provenance", to_string(e.provenance)},
                {"validation_status", to_string(e.validation_status)},
                {"split", to_string(e.split)}};
}

template <typename T>
const T& require(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end())
        throw SchemaError(where + ": missing field '" + key + "'");
    return *it;
}

std::string require_string(const json& j, const char* key, const std::string& where) {
    const json& v = require<json>(j, key, where);
    if (!v.is_string())
        throw SchemaError(where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

Document document_from_json(const json& j, const std::string& where) {
    Document d;
    d.id = require_string(j, "id", where);
    d.text = require_string(j, "text", where);
    d.source_dataset = require_string(j, "source_dataset", where);
    d.task = parse_task(require_string(j, "task", where));
    d.original_label = require_string(j, "original_label", where);
    if (auto it = j.find("meta"); it != j.end()) {
        if (!it->is_object()) throw SchemaError(where + ": field 'meta' must be an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string())
                throw SchemaError(where + ": meta values must be strings");
            d.meta[k] = v.get<std::string>();
        }
    }
    return d;
}

HypothesisRecord hypothesis_from_json(const json& j, const std::string& where) {
    HypothesisRecord h;
    h.hypothesis_id = require_string(j, "hypothesis_id", where);
    h.canonical_text = require_string(j, "canonical_text", where);
    const json& vars = require<json>(j, "variants", where);
    if (!vars.is_array()) throw SchemaError(where + ": field 'variants' must be an array");
    for (const auto& v : vars) {
        if (!v.is_string()) throw SchemaError(where + ": variants must be strings");
        h.variants.push_back(v.get<std::string>());
    }
    h.group_id = require_string(j, "group_id", where);
    h.task = parse_task(require_string(j, "task", where));
    h.target = require_string(j, "target", where);
    return h;
}

NLIExample example_from_json(const json& j, const std::string& where) {
    NLIExample e;
    e.example_id = require_string(j, "example_id", where);
    e.document_id = require_string(j, "document_id", where);
    e.hypothesis_group = require_string(j, "hypothesis_group", where);
    e.premise = require_string(j, "premise", where);
    e.hypothesis = require_string(j, "hypothesis", where);
    const json& lv = require<json>(j, "label", where);
    if (!lv.is_number_integer())
        throw SchemaError(where + ": field 'label' must be an integer");
    e.label = parse_label_value(lv.get<int>());
    const Label named = parse_label_name(require_string(j, "label_name", where));
    if (named != e.label)
        throw SchemaError(where + ": label and label_name disagree for " + e.example_id);
    e.provenance = parse_provenance(require_string(j, "provenance", where));
    e.validation_status = parse_validation_status(require_string(j, "validation_status", where));
    e.split = parse_split(require_string(j, "split", where));
    return e;
}

template <typename T, typename ToJson>
void write_jsonl(const fs::path& file, const std::vector<T>& records, ToJson to_json_fn) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + file.string());
    for (const auto& r : records) {
        out << to_json_fn(r).dump() << '\n';
    }
    if (!out) throw Error("write failed: " + file.string());
}

std::vector<json> read_jsonl(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open file: " + file.string());
    std::vector<json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw SchemaError(file.filename().string() + ":" + std::to_string(lineno) +
                              ": invalid JSON");
        out.push_back(std::move(j));
    }
    return out;
}

constexpr const char* kDocumentsFile = "documents.jsonl";
constexpr const char* kHypothesesFile = "hypotheses.jsonl";
constexpr const char* kExamplesFile = "examples.jsonl";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kSplitManifestFile = "split_manifest.json";

std::string record_files_checksum(const fs::path& dir) {
    Sha256 h;
    for (const char* name : {kDocumentsFile, kHypothesesFile, kExamplesFile}) {
        h.update_file(dir / name);
    }
    return h.hex_digest();
}

json split_manifest_to_json(const SplitManifest& m) {
    json split_of = json::object();
    for (const auto& [g, s] : m.split_of) split_of[g] = to_string(s);
    json counts = json::object();
    for (const auto& [k, v] : m.counts) counts[k] = v;
    return json{{"split_of", split_of},
                {"validation_seen_groups", m.validation_seen_groups},
                {"seed", m.seed},
                {"counts", counts}};
}

SplitManifest split_manifest_from_json(const json& j) {
    SplitManifest m;
    const std::string where = "split_manifest.json";
    const json& split_of = require<json>(j, "split_of", where);
    if (!split_of.is_object()) throw SchemaError(where + ": 'split_of' must be an object");
    for (const auto& [g, s] : split_of.items()) {
        if (!s.is_string()) throw SchemaError(where + ": split values must be strings");
        m.split_of[g] = parse_group_split(s.get<std::string>());
    }
    const json& seen = require<json>(j, "validation_seen_groups", where);
    if (!seen.is_array()) throw SchemaError(where + ": 'validation_seen_groups' must be an array");
    for (const auto& g : seen) m.validation_seen_groups.insert(g.get<std::string>());
    const json& seed = require<json>(j, "seed", where);
    if (!seed.is_number_unsigned() && !seed.is_number_integer())
        throw SchemaError(where + ": 'seed' must be an integer");
    m.seed = seed.get<std::uint64_t>();
    if (auto it = j.find("counts"); it != j.end() && it->is_object()) {
        for (const auto& [k, v] : it->items()) m.counts[k] = v.get<std::size_t>();
    }
    return m;
}

} // namespace

std::string save_corpus(const Corpus& corpus, const fs::path& dir, std::string_view stage) {
    validate(corpus);

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create corpus directory " + dir.string() + ": " + ec.message());

    write_jsonl(dir / kDocumentsFile, corpus.documents, document_to_json);
    write_jsonl(dir / kHypothesesFile, corpus.hypotheses, hypothesis_to_json);
    write_jsonl(dir / kExamplesFile, corpus.examples, example_to_json);

    json per_task_docs = json::object();
    for (const auto& [t, n] : corpus.document_counts_by_task()) per_task_docs[to_string(t)] = n;
    json per_task_examples = json::object();
    for (const auto& [t, n] : corpus.example_counts_by_task()) per_task_examples[to_string(t)] = n;
    json per_split = json::object();
    {
        std::map<std::string, std::size_t> split_counts;
        for (const auto& e : corpus.examples) ++split_counts[to_string(e.split)];
        for (const auto& [k, v] : split_counts) per_split[k] = v;
    }

    const std::string checksum = record_files_checksum(dir);
    json manifest{{"version", kToolkitVersion},
                  {"stage", std::string(stage)},
                  {"sha256", checksum},
                  {"counts",
                   json{{"documents", corpus.documents.size()},
                        {"hypotheses", corpus.hypotheses.size()},
                        {"examples", corpus.examples.size()},
                        {"documents_per_task", per_task_docs},
                        {"examples_per_task", per_task_examples},
                        {"examples_per_split", per_split}}}};
    {
        std::ofstream out(dir / kManifestFile, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write file: " + (dir / kManifestFile).string());
        out << manifest.dump(2) << '\n';
    }

    if (corpus.split) {
        std::ofstream out(dir / kSplitManifestFile, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write file: " + (dir / kSplitManifestFile).string());
        out << split_manifest_to_json(*corpus.split).dump(2) << '\n';
    }

    return checksum;
}

std::string manifest_checksum(const fs::path& dir) {
    std::ifstream in(dir / kManifestFile, std::ios::binary);
    if (!in) throw Error("missing manifest: " + (dir / kManifestFile).string());
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded()) throw SchemaError("manifest.json: invalid JSON");
    return require_string(manifest, "sha256", "manifest.json");
}

Corpus load_corpus(const fs::path& dir) {
    const std::string expected = manifest_checksum(dir);
    const std::string actual = record_files_checksum(dir);
    if (expected != actual)
        throw CorruptionError("corpus checksum mismatch in " + dir.string() + ": manifest " +
                              expected + " vs records " + actual);

    Corpus corpus;
    for (const auto& j : read_jsonl(dir / kDocumentsFile))
        corpus.documents.push_back(document_from_json(j, kDocumentsFile));
    for (const auto& j : read_jsonl(dir / kHypothesesFile))
        corpus.hypotheses.push_back(hypothesis_from_json(j, kHypothesesFile));
    for (const auto& j : read_jsonl(dir / kExamplesFile))
        corpus.examples.push_back(example_from_json(j, kExamplesFile));

    if (fs::exists(dir / kSplitManifestFile)) {
        std::ifstream in(dir / kSplitManifestFile, std::ios::binary);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw SchemaError("split_manifest.json: invalid JSON");
        corpus.split = split_manifest_from_json(j);
    }

    validate(corpus);
    return corpus;
}

} // namespace nlikit::corpus
