#include "nlikit/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nlikit/augment.hpp"
#include "nlikit/backend_lexical.hpp"
#include "nlikit/bench.hpp"
#include "nlikit/corpus.hpp"
#include "nlikit/engine.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/fewshot.hpp"
#include "nlikit/ingest.hpp"
#include "nlikit/metrics.hpp"
#include "nlikit/rng.hpp"
#include "nlikit/split.hpp"
#include "nlikit/text.hpp"
#include "nlikit/validation.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace nlikit::cli {

namespace {

// ---------------------------------------------------------------------------
// Config plumbing: typed access with field paths in every error.
// ---------------------------------------------------------------------------

json load_config(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + file.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + file.string());
    if (!j.is_object()) throw ConfigError("config root must be an object: " + file.string());
    return j;
}

const json* find_path(const json& root, const std::string& path) {
    const json* cur = &root;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (!cur->is_object()) return nullptr;
        auto it = cur->find(key);
        if (it == cur->end()) return nullptr;
        cur = &*it;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return cur;
}

template <typename T>
T require_field(const json& root, const std::string& path) {
    const json* v = find_path(root, path);
    if (!v) throw ConfigError("config field '" + path + "' is required");
    try {
        return v->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + path + "' has the wrong type");
    }
}

template <typename T>
T field_or(const json& root, const std::string& path, T fallback) {
    const json* v = find_path(root, path);
    if (!v) return fallback;
    try {
        return v->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + path + "' has the wrong type");
    }
}

void write_text(const fs::path& file, const std::string& body) {
    fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + file.string());
    out << body;
}

// Reproducibility record: config snapshot, seed, corpus checksums. No
// timestamps, so reruns are byte-identical.
void write_run_log(const fs::path& out_dir, const std::string& command, std::uint64_t seed,
                   const json& config_snapshot, const std::string& input_checksum,
                   const std::string& output_checksum) {
    json log{{"command", command},
             {"seed", seed},
             {"config", config_snapshot},
             {"input_corpus_sha256", input_checksum},
             {"output_corpus_sha256", output_checksum},
             {"toolkit_version", kToolkitVersion}};
    write_text(out_dir / "run_log.json", log.dump(2) + "\n");
}

struct CommonArgs {
    std::string corpus;
    std::string config;
    std::string out;
    std::uint64_t seed = 1;
};

fs::path need_corpus(const CommonArgs& args) {
    if (args.corpus.empty())
        throw ConfigError("--corpus is required for this command (missing upstream stage?)");
    if (!fs::exists(fs::path(args.corpus) / "manifest.json"))
        throw Error("missing upstream stage: no corpus manifest under " + args.corpus);
    return args.corpus;
}

fs::path need_out(const CommonArgs& args) {
    if (args.out.empty()) throw ConfigError("--out is required for this command");
    fs::create_directories(args.out);
    return args.out;
}

// ---------------------------------------------------------------------------
// Shared corpus views
// ---------------------------------------------------------------------------

struct CorpusIndex {
    std::map<std::string, Task> group_task;
    std::map<std::string, std::string> doc_source;
};

CorpusIndex index_corpus(const corpus::Corpus& c) {
    CorpusIndex idx;
    for (const auto& h : c.hypotheses) idx.group_task[h.group_id] = h.task;
    for (const auto& d : c.documents) idx.doc_source[d.id] = d.source_dataset;
    return idx;
}

std::vector<engine::LabeledPair> pairs_for_split(const corpus::Corpus& c, const CorpusIndex& idx,
                                                 std::initializer_list<Split> splits) {
    std::vector<engine::LabeledPair> out;
    for (const auto& e : c.examples) {
        bool wanted = false;
        for (const auto s : splits) wanted |= e.split == s;
        if (!wanted) continue;
        engine::LabeledPair pair;
        pair.premise = e.premise;
        pair.hypothesis = e.hypothesis;
        pair.label = e.label;
        auto tit = idx.group_task.find(e.hypothesis_group);
        pair.task = tit == idx.group_task.end() ? "" : to_string(tit->second);
        auto sit = idx.doc_source.find(e.document_id);
        pair.source_dataset = sit == idx.doc_source.end() ? "" : sit->second;
        out.push_back(std::move(pair));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Backend + annotator construction from config
// ---------------------------------------------------------------------------

std::unique_ptr<engine::NLIBackend> make_backend(const json& cfg) {
    const std::string type = field_or<std::string>(cfg, "type", "lexical");
    if (type == "lexical") {
        backend::LexicalBackend::Options opts;
        opts.hash_bits = field_or<int>(cfg, "hash_bits", opts.hash_bits);
        opts.max_tokens = field_or<std::size_t>(cfg, "max_tokens", opts.max_tokens);
        opts.pretrained_prior = field_or<bool>(cfg, "pretrained", opts.pretrained_prior);
        opts.default_lr = field_or<double>(cfg, "default_learning_rate", opts.default_lr);
        return std::make_unique<backend::LexicalBackend>(opts);
    }
    if (type == "checkpoint") {
        const std::string path = require_field<std::string>(cfg, "path");
        return std::make_unique<backend::LexicalBackend>(backend::LexicalBackend::load(path));
    }
    throw ConfigError("config field 'backend.type' must be 'lexical' or 'checkpoint', got '" +
                      type + "'");
}

validation::AnnotatorConfig annotator_from_config(const json& cfg) {
    validation::AnnotatorConfig a;
    a.endpoint = field_or<std::string>(cfg, "endpoint", "");
    a.model_name = field_or<std::string>(cfg, "model_name", "stub");
    a.system_message = field_or<std::string>(cfg, "system_message", a.system_message);
    a.max_tokens = field_or<int>(cfg, "max_tokens", a.max_tokens);
    a.temperature = field_or<double>(cfg, "temperature", a.temperature);
    a.max_concurrency = field_or<int>(cfg, "max_concurrency", a.max_concurrency);
    a.retry.max_retries = field_or<int>(cfg, "retry.max_retries", a.retry.max_retries);
    a.retry.backoff_base_seconds =
        field_or<double>(cfg, "retry.backoff_base_seconds", a.retry.backoff_base_seconds);
    a.api_key_env = field_or<std::string>(cfg, "api_key_env", "");
    if (const json* bias = find_path(cfg, "token_bias"); bias && bias->is_object()) {
        a.token_bias.clear();
        for (const auto& [k, v] : bias->items()) a.token_bias[k] = v.get<double>();
    }
    validation::check_config(a);
    return a;
}

// Deterministic offline transports. "stub_flip" answers with the example's
// stored label, flipped with the configured probability; the mapping is
// prompt-keyed so fan-out order cannot matter.
std::unique_ptr<validation::CompletionTransport> make_transport(
    const json& cfg, const validation::AnnotatorConfig& annotator,
    const corpus::Corpus& input, std::uint64_t seed) {
    const std::string kind = require_field<std::string>(cfg, "kind");
    if (kind == "http") {
        if (annotator.endpoint.empty())
            throw ConfigError("config field 'annotator.endpoint' is required for http transport");
        std::string key;
        if (!annotator.api_key_env.empty()) {
            const char* value = std::getenv(annotator.api_key_env.c_str());
            if (!value)
                throw ConfigError("environment variable '" + annotator.api_key_env +
                                  "' named by annotator.api_key_env is not set");
            key = value;
        }
        return std::make_unique<validation::HttpTransport>(annotator.endpoint, key);
    }
    if (kind == "stub_flip" || kind == "stub_echo") {
        const double flip_probability =
            kind == "stub_echo" ? 0.0 : require_field<double>(cfg, "flip_probability");
        auto responses = std::make_shared<std::map<std::string, std::string>>();
        for (const auto& e : input.examples) {
            const std::string prompt = validation::build_validation_prompt(e.hypothesis,
                                                                           e.premise);
            rng::DetRng r(rng::derive(seed, "stub-flip", e.example_id));
            const bool flip = r.bernoulli(flip_probability);
            const Label answer =
                flip ? (e.label == Label::entail ? Label::not_entail : Label::entail) : e.label;
            (*responses)[prompt] = std::to_string(static_cast<int>(answer));
        }
        return std::make_unique<validation::StubTransport>(
            [responses](const validation::CompletionRequest& request) -> std::string {
                auto it = responses->find(request.user_prompt);
                if (it == responses->end())
                    throw ServiceError("stub transport has no scripted response");
                return it->second;
            });
    }
    throw ConfigError("config field 'transport.kind' must be http, stub_flip or stub_echo");
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

ingest::AdapterSpec adapter_from_config(const json& cfg) {
    ingest::AdapterSpec a;
    a.source_name = require_field<std::string>(cfg, "source_name");
    a.task = parse_task(require_field<std::string>(cfg, "task"));
    const json* fm = find_path(cfg, "field_map");
    if (!fm || !fm->is_object())
        throw ConfigError("config field 'adapter.field_map' must be an object");
    for (const auto& [role, column] : fm->items()) {
        if (!column.is_string())
            throw ConfigError("config field 'adapter.field_map." + role + "' must be a string");
        a.field_map[role] = column.get<std::string>();
    }
    if (const json* rules = find_path(cfg, "cleaning_rules")) {
        if (!rules->is_array())
            throw ConfigError("config field 'adapter.cleaning_rules' must be an array");
        for (const auto& rule : *rules) {
            a.cleaning_rules.push_back(
                {ingest::parse_rule_kind(require_field<std::string>(rule, "kind")),
                 require_field<std::string>(rule, "pattern")});
        }
    }
    a.hypothesis_template.template_text = require_field<std::string>(cfg, "template.text");
    a.hypothesis_template.task = a.task;
    if (const json* tm = find_path(cfg, "target_map"); tm && tm->is_object()) {
        for (const auto& [label, target] : tm->items())
            a.target_map[label] = target.get<std::string>();
    }
    a.fixed_target = field_or<std::string>(cfg, "fixed_target", "");
    return a;
}

std::vector<ingest::RawRecord> read_raw_jsonl(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open input file: " + file.string());
    std::vector<ingest::RawRecord> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw SchemaError(file.filename().string() + ":" + std::to_string(lineno) +
                              ": not a JSON object");
        ingest::RawRecord row;
        for (const auto& [k, v] : j.items())
            row[k] = v.is_string() ? v.get<std::string>() : v.dump();
        rows.push_back(std::move(row));
    }
    return rows;
}

int cmd_ingest(const CommonArgs& args) {
    const json cfg = load_config(args.config);
    const fs::path out = need_out(args);
    const fs::path input = require_field<std::string>(cfg, "input");
    const json* adapter_cfg = find_path(cfg, "adapter");
    if (!adapter_cfg) throw ConfigError("config field 'adapter' is required");
    const ingest::AdapterSpec adapter = adapter_from_config(*adapter_cfg);

    std::map<std::string, Label> label_map;
    if (const json* lm = find_path(cfg, "label_to_entailment"); lm && lm->is_object()) {
        for (const auto& [label, value] : lm->items())
            label_map[label] = parse_label_name(value.get<std::string>());
    }

    std::vector<ingest::DropLogEntry> drops;
    auto rows = read_raw_jsonl(input);
    auto documents = ingest::build_documents(rows, adapter, &drops);
    auto converted = ingest::convert_to_nli(documents, adapter, label_map);

    corpus::Corpus result;
    result.documents = std::move(documents);
    result.hypotheses = std::move(converted.hypotheses);
    result.examples = std::move(converted.examples);

    if (const json* neg = find_path(cfg, "negative_sampling")) {
        const double ratio = field_or<double>(*neg, "ratio", 1.0);
        auto negatives = ingest::negative_sample(result.examples, result.hypotheses, ratio,
                                                 args.seed);
        result.examples.insert(result.examples.end(), negatives.begin(), negatives.end());
    }

    const std::string checksum = corpus::save_corpus(result, out, "ingest");
    if (!drops.empty()) {
        json drop_log = json::array();
        for (const auto& d : drops)
            drop_log.push_back(json{{"id", d.record_id}, {"reason", d.reason}});
        write_text(out / "drop_log.json", drop_log.dump(2) + "\n");
    }
    write_run_log(out, "ingest", args.seed, cfg, "", checksum);
    std::cout << "ingest: " << result.documents.size() << " documents, "
              << result.examples.size() << " examples -> " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const CommonArgs& args) {
    const json cfg = load_config(args.config);
    const fs::path in_dir = need_corpus(args);
    const fs::path out = need_out(args);
    corpus::Corpus input = corpus::load_corpus(in_dir);

    json annotator_cfg = json::object();
    if (const json* a = find_path(cfg, "annotator")) annotator_cfg = *a;
    const validation::AnnotatorConfig annotator = annotator_from_config(annotator_cfg);
    const json* transport_cfg = find_path(cfg, "transport");
    if (!transport_cfg) throw ConfigError("config field 'transport' is required");
    auto transport = make_transport(*transport_cfg, annotator, input, args.seed);

    auto results = validation::annotate_all(annotator, input.examples, *transport);
    auto outcome = validation::agreement_filter(input.examples, results);

    corpus::Corpus retained = input;
    retained.examples = outcome.retained;
    const std::string checksum = corpus::save_corpus(retained, out, "validate");

    std::map<std::string, const validation::ValidationResult*> by_id;
    for (const auto& r : results) by_id[r.example_id] = &r;
    auto dump_examples = [&](const std::vector<corpus::NLIExample>& list, const char* name) {
        json arr = json::array();
        for (const auto& e : list) {
            const auto* r = by_id.at(e.example_id);
            json row{{"example_id", e.example_id},
                     {"label", static_cast<int>(e.label)},
                     {"hypothesis", e.hypothesis},
                     {"raw_response", r->raw_response}};
            if (r->annotator_label)
                row["annotator_label"] = static_cast<int>(*r->annotator_label);
            arr.push_back(std::move(row));
        }
        write_text(out / name, arr.dump(2) + "\n");
    };
    dump_examples(outcome.removed, "removed.json");
    dump_examples(outcome.quarantined, "quarantined.json");

    write_run_log(out, "validate", args.seed, cfg, corpus::manifest_checksum(in_dir), checksum);
    std::cout << "validate: retained " << outcome.retained.size() << ", removed "
              << outcome.removed.size() << ", quarantined " << outcome.quarantined.size()
              << " -> " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

// Offline paraphrase stub: template rewrites plus synonym swaps, formatted
// exactly like the service output so the same parser handles both.
std::string stub_variant_response(const std::string& hypothesis) {
    auto swap_all = [](std::string s, std::string_view from, std::string_view to) {
        return text::replace_whole_word(s, from, to, [](std::size_t) { return true; });
    };
    std::string v1 = swap_all(hypothesis, "text", "document");
    if (v1 == hypothesis) v1 = swap_all(hypothesis, "document", "text");
    std::string v2 = swap_all(hypothesis, "supports", "endorses");
    if (v2 == hypothesis) v2 = "In other words, " + hypothesis;
    std::string v3 = "Put differently, " + hypothesis;
    auto quote = [](const std::string& s) {
        std::string q;
        for (char c : s) {
            if (c == '\'' || c == '\\') q.push_back('\\');
            q.push_back(c);
        }
        return q;
    };
    return "hypoths = ['" + quote(v1) + "', '" + quote(v2) + "', '" + quote(v3) + "']";
}

int cmd_augment(const CommonArgs& args) {
    const json cfg = load_config(args.config);
    const fs::path in_dir = need_corpus(args);
    const fs::path out = need_out(args);
    corpus::Corpus c = corpus::load_corpus(in_dir);

    std::vector<augment::SynonymPair> table = augment::default_synonym_table();
    if (const json* t = find_path(cfg, "synonym_table")) {
        if (!t->is_array()) throw ConfigError("config field 'synonym_table' must be an array");
        table.clear();
        for (const auto& pair : *t) {
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigError("config field 'synonym_table' entries must be [word, synonym]");
            table.push_back({pair[0].get<std::string>(), pair[1].get<std::string>()});
        }
    }

    const std::string mode = field_or<std::string>(cfg, "variants.mode", "none");
    std::vector<augment::VariantCandidates> generated;
    if (mode != "none") {
        json annotator_cfg = json::object();
        if (const json* a = find_path(cfg, "variants.annotator")) annotator_cfg = *a;
        validation::AnnotatorConfig annotator = annotator_from_config(annotator_cfg);
        annotator.max_tokens = std::max(annotator.max_tokens, 256);
        annotator.token_bias.clear(); // label bias has no place in generation

        std::unique_ptr<validation::CompletionTransport> transport;
        if (mode == "stub") {
            transport = std::make_unique<validation::StubTransport>(
                [](const validation::CompletionRequest& request) {
                    // The hypothesis is the middle line of the prompt.
                    const auto first = request.user_prompt.find('\n');
                    const auto last = request.user_prompt.rfind('\n');
                    return stub_variant_response(
                        request.user_prompt.substr(first + 1, last - first - 1));
                });
        } else if (mode == "service") {
            json tcfg{{"kind", "http"}};
            transport = make_transport(tcfg, annotator, c, args.seed);
        } else {
            throw ConfigError("config field 'variants.mode' must be none, stub or service");
        }
        for (const auto& record : c.hypotheses)
            generated.push_back(augment::generate_variants(annotator, record, *transport));
    }

    // Review routing: export for offline edit, or apply decisions now.
    if (const json* exp = find_path(cfg, "review.export")) {
        std::vector<augment::ReviewItem> items;
        for (const auto& g : generated)
            for (const auto& candidate : g.candidates)
                items.push_back({g.group_id, candidate, augment::Decision::undecided});
        write_review_file(exp->get<std::string>(), items);
        std::cout << "augment: exported " << items.size() << " candidates for review\n";
        return 0;
    }

    // The review file is the source of truth for candidates once it exists,
    // so import never depends on regenerating identical candidates.
    std::map<std::string, std::vector<std::string>> candidate_sets;
    std::map<std::string, std::map<std::string, augment::Decision>> decisions;
    std::size_t flagged = 0;
    if (const json* imp = find_path(cfg, "review.import")) {
        for (const auto& item : augment::read_review_file(imp->get<std::string>())) {
            candidate_sets[item.group_id].push_back(item.candidate);
            decisions[item.group_id][item.candidate] = item.decision;
        }
    } else if (field_or<bool>(cfg, "review.auto_accept", false)) {
        for (const auto& g : generated) {
            flagged += g.flagged_for_manual;
            candidate_sets[g.group_id] = g.candidates;
            for (const auto& candidate : g.candidates)
                decisions[g.group_id][candidate] = augment::Decision::accept;
        }
    } else if (!generated.empty()) {
        throw ConfigError("config must set review.export, review.import or review.auto_accept "
                          "when variants are generated");
    }

    for (auto& record : c.hypotheses) {
        auto it = candidate_sets.find(record.group_id);
        if (it == candidate_sets.end() || it->second.empty()) continue;
        record = augment::review_variants(record, it->second, decisions[record.group_id]);
    }

    augment::assign_augmented(c.examples, c.hypotheses, table, args.seed);
    const std::string checksum = corpus::save_corpus(c, out, "augment");
    write_run_log(out, "augment", args.seed, cfg, corpus::manifest_checksum(in_dir), checksum);
    std::cout << "augment: " << c.hypotheses.size() << " groups augmented";
    if (flagged > 0) std::cout << ", " << flagged << " flagged for manual authoring";
    std::cout << " -> " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// split / verify
// ---------------------------------------------------------------------------

int cmd_split(const CommonArgs& args) {
    const json cfg = load_config(args.config);
    const fs::path in_dir = need_corpus(args);
    const fs::path out = need_out(args);
    corpus::Corpus c = corpus::load_corpus(in_dir);

    split::SplitTargets targets;
    targets.test = require_field<std::size_t>(cfg, "test_target");
    targets.validation_unseen = require_field<std::size_t>(cfg, "validation_unseen_target");
    targets.validation_seen = require_field<std::size_t>(cfg, "validation_seen_target");

    split::SplitLog log;
    auto manifest = split::split_by_hypothesis(c, targets, args.seed, &log);
    auto report = split::verify_no_leakage(c, manifest);
    if (!report.clean()) {
        for (const auto& v : report.violations) std::cerr << "leakage: " << v << "\n";
        throw InvariantError("split produced " + std::to_string(report.violations.size()) +
                             " leakage violations");
    }

    const std::string checksum = corpus::save_corpus(c, out, "split");
    write_run_log(out, "split", args.seed, cfg, corpus::manifest_checksum(in_dir), checksum);
    std::cout << "split:";
    for (const auto& [name, count] : manifest.counts) std::cout << " " << name << "=" << count;
    for (const auto& g : log.oversized_groups)
        std::cout << "\n  note: group " << g << " alone exceeds the test target";
    std::cout << " -> " << out.string() << "\n";
    return 0;
}

int cmd_verify(const CommonArgs& args) {
    const fs::path in_dir = need_corpus(args);
    corpus::Corpus c = corpus::load_corpus(in_dir); // checksum + invariants
    std::size_t violations = 0;
    if (c.split) {
        auto report = split::verify_no_leakage(c, *c.split);
        for (const auto& v : report.violations) std::cerr << "violation: " << v << "\n";
        violations = report.violations.size();
    }
    std::cout << "verify: " << c.documents.size() << " documents, " << c.examples.size()
              << " examples, " << violations << " violations\n";
    if (violations > 0) throw InvariantError("corpus failed verification");
    return 0;
}

// ---------------------------------------------------------------------------
// train / evaluate
// ---------------------------------------------------------------------------

engine::TrainSpec train_spec_from_config(const json& cfg, std::uint64_t seed) {
    engine::TrainSpec spec;
    const std::string preset = field_or<std::string>(cfg, "preset", "base");
    if (preset == "base") {
        spec = engine::TrainSpec::base_defaults();
    } else if (preset == "large") {
        spec = engine::TrainSpec::large_defaults();
    } else {
        throw ConfigError("config field 'train_spec.preset' must be 'base' or 'large'");
    }
    spec.learning_rate = field_or<double>(cfg, "learning_rate", spec.learning_rate);
    spec.train_batch = field_or<int>(cfg, "train_batch", spec.train_batch);
    spec.eval_batch = field_or<int>(cfg, "eval_batch", spec.eval_batch);
    spec.grad_accumulation = field_or<int>(cfg, "grad_accumulation", spec.grad_accumulation);
    spec.epochs = field_or<int>(cfg, "epochs", spec.epochs);
    spec.warmup_ratio = field_or<double>(cfg, "warmup_ratio", spec.warmup_ratio);
    spec.weight_decay = field_or<double>(cfg, "weight_decay", spec.weight_decay);
    spec.mixed_precision = field_or<bool>(cfg, "mixed_precision", spec.mixed_precision);
    spec.seed = seed;
    engine::check_spec(spec);
    return spec;
}

int cmd_train(const CommonArgs& args) {
    const json cfg = load_config(args.config);
    const fs::path in_dir = need_corpus(args);
    const fs::path out = need_out(args);
    corpus::Corpus c = corpus::load_corpus(in_dir);
    if (!c.split)
        throw Error("missing upstream stage: train needs a split corpus (run 'split' first)");

    const CorpusIndex idx = index_corpus(c);
    auto train_pairs = pairs_for_split(c, idx, {Split::train});
    auto val_pairs = pairs_for_split(c, idx, {Split::validation_seen, Split::validation_unseen});
    if (train_pairs.empty()) throw Error("train split is empty");

    json backend_cfg = json::object();
    if (const json* b = find_path(cfg, "backend")) backend_cfg = *b;
    auto backend = make_backend(backend_cfg);

    json spec_cfg = json::object();
    if (const json* s = find_path(cfg, "train_spec")) spec_cfg = *s;
    const engine::TrainSpec spec = train_spec_from_config(spec_cfg, args.seed);

    auto records = engine::fine_tune(*backend, train_pairs, val_pairs, spec,
                                     out / "checkpoints");

    engine::RankWeights weights;
    weights.consistency_lambda =
        field_or<double>(cfg, "rank.consistency_lambda", weights.consistency_lambda);
    auto ranked = engine::rank_checkpoints(records, weights);

    json ranking = json::array();
    for (const auto& r : ranked) {
        ranking.push_back(json{{"epoch", r.record.epoch},
                               {"score", r.score},
                               {"task_spread", r.task_spread},
                               {"mcc", r.record.mcc},
                               {"val_loss", r.record.val_loss},
                               {"f1", r.record.f1},
                               {"accuracy", r.record.accuracy},
                               {"path", r.record.path}});
    }
    write_text(out / "ranking.json", ranking.dump(2) + "\n");
    write_run_log(out, "train", args.seed, cfg, corpus::manifest_checksum(in_dir), "");
    std::cout << "train: " << records.size() << " checkpoints; best epoch "
              << ranked.front().record.epoch << " (score " << ranked.front().score << ") -> "
              << out.string() << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& args) {
    const json cfg = load_config(args.config);
    const fs::path in_dir = need_corpus(args);
    const fs::path out = need_out(args);
    corpus::Corpus c = corpus::load_corpus(in_dir);
    if (!c.split)
        throw Error("missing upstream stage: evaluate needs a split corpus (run 'split' first)");

    const std::string which = field_or<std::string>(cfg, "split", "test");
    Split wanted;
    if (which == "test") wanted = Split::test;
    else if (which == "validation_seen") wanted = Split::validation_seen;
    else if (which == "validation_unseen") wanted = Split::validation_unseen;
    else throw ConfigError("config field 'split' must be test, validation_seen or "
                           "validation_unseen");

    json backend_cfg = json::object();
    if (const json* b = find_path(cfg, "backend")) backend_cfg = *b;
    auto backend = make_backend(backend_cfg);
    const double threshold = field_or<double>(cfg, "threshold", 0.5);

    const CorpusIndex idx = index_corpus(c);
    std::vector<metrics::PredictionRecord> predictions;
    for (const auto& e : c.examples) {
        if (e.split != wanted) continue;
        metrics::PredictionRecord p;
        p.example_id = e.example_id;
        auto tit = idx.group_task.find(e.hypothesis_group);
        p.task = tit == idx.group_task.end() ? Task::topic : tit->second;
        auto sit = idx.doc_source.find(e.document_id);
        p.source_dataset = sit == idx.doc_source.end() ? "unknown" : sit->second;
        p.truth = e.label;
        p.predicted = engine::classify(*backend, e.premise, e.hypothesis, threshold).label;
        predictions.push_back(std::move(p));
    }
    if (predictions.empty()) throw Error("evaluate: split '" + which + "' has no examples");

    metrics::ReportOptions opts;
    opts.bootstrap_samples = field_or<int>(cfg, "bootstrap_samples", opts.bootstrap_samples);
    opts.seed = args.seed;
    opts.model = backend->descriptor();
    auto report = metrics::report(predictions, opts);

    write_text(out / "eval_report.json", report.to_json_string() + "\n");
    write_text(out / "eval_report.txt", report.to_text());
    write_text(out / "eval_report.csv", report.to_csv());
    write_run_log(out, "evaluate", args.seed, cfg, corpus::manifest_checksum(in_dir), "");
    std::cout << "evaluate: split=" << which << " n=" << report.overall.n << " mcc="
              << report.overall.mcc << " (se " << report.overall.mcc_se << ") -> "
              << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fewshot / bench
// ---------------------------------------------------------------------------

int cmd_fewshot(const CommonArgs& args) {
    const json cfg = load_config(args.config);
    const fs::path out = need_out(args);

    const fs::path pool_file = require_field<std::string>(cfg, "pool");
    std::vector<fewshot::PoolDoc> pool;
    {
        std::ifstream in(pool_file, std::ios::binary);
        if (!in) throw Error("cannot open pool file: " + pool_file.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw SchemaError(pool_file.filename().string() + ":" +
                                  std::to_string(lineno) + ": invalid JSON");
            fewshot::PoolDoc doc;
            doc.text = require_field<std::string>(j, "text");
            const json* label = find_path(j, "label");
            if (!label) throw ConfigError("pool record missing 'label'");
            doc.label = label->is_string() ? parse_label_name(label->get<std::string>())
                                           : parse_label_value(label->get<int>());
            pool.push_back(std::move(doc));
        }
    }

    fewshot::FewShotSpec spec;
    spec.hypothesis = require_field<std::string>(cfg, "hypothesis");
    if (const json* sizes = find_path(cfg, "sample_sizes"))
        spec.sample_sizes = sizes->get<std::vector<std::size_t>>();
    spec.repeats = field_or<int>(cfg, "repeats", spec.repeats);
    spec.epochs = field_or<int>(cfg, "epochs", spec.epochs);
    spec.train_batch = field_or<int>(cfg, "train_batch", spec.train_batch);
    if (const json* lr = find_path(cfg, "learning_rate")) spec.learning_rate = lr->get<double>();
    spec.seed = args.seed;

    json backend_cfg = json::object();
    if (const json* b = find_path(cfg, "backend")) backend_cfg = *b;
    fewshot::BackendFactory factory = [backend_cfg] { return make_backend(backend_cfg); };

    auto report = fewshot::run_protocol(factory, pool, spec);
    write_text(out / "fewshot_report.json", report.to_json_string() + "\n");
    write_text(out / "fewshot_table.txt", report.to_text_table());
    write_run_log(out, "fewshot", args.seed, cfg, "", "");
    std::cout << report.to_text_table();
    return report.complete ? 0 : 3;
}

int cmd_bench(const CommonArgs& args) {
    const json cfg = load_config(args.config);
    const fs::path in_dir = need_corpus(args);
    const fs::path out = need_out(args);
    corpus::Corpus c = corpus::load_corpus(in_dir);

    std::vector<std::string> premises;
    premises.reserve(c.documents.size());
    for (const auto& d : c.documents) premises.push_back(d.text);
    if (premises.empty())
        for (const auto& e : c.examples) premises.push_back(e.premise);

    bench::TimingOptions options;
    options.batch_size = require_field<std::size_t>(cfg, "batch_size");
    options.n_docs = field_or<std::size_t>(cfg, "n_docs", options.n_docs);
    options.hypothesis = field_or<std::string>(cfg, "hypothesis", options.hypothesis);
    options.warmup_batches = field_or<std::size_t>(cfg, "warmup_batches", options.warmup_batches);
    options.hardware_override = field_or<std::string>(cfg, "hardware_override", "");
    options.precision_mode = field_or<std::string>(cfg, "precision_mode", options.precision_mode);
    options.seed = args.seed;

    json backend_cfg = json::object();
    if (const json* b = find_path(cfg, "backend")) backend_cfg = *b;
    auto backend = make_backend(backend_cfg);

    auto report = bench::run_timing(*backend, premises, options);
    write_text(out / "timing.json", report.to_json_string() + "\n");
    if (const json* ledger = find_path(cfg, "csv_ledger"))
        bench::append_csv_ledger(ledger->get<std::string>(), report);
    write_run_log(out, "bench", args.seed, cfg, corpus::manifest_checksum(in_dir), "");
    std::cout << "bench: " << report.docs_per_second << " docs/sec over "
              << report.docs_completed << " documents on " << report.hardware << "\n";
    return report.complete ? 0 : 3;
}

} // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"NLI classification dataset toolkit"};
    app.require_subcommand(1);

    std::map<std::string, std::function<int(const CommonArgs&)>> handlers{
        {"ingest", cmd_ingest},     {"validate", cmd_validate}, {"augment", cmd_augment},
        {"split", cmd_split},       {"train", cmd_train},       {"evaluate", cmd_evaluate},
        {"fewshot", cmd_fewshot},   {"bench", cmd_bench},       {"verify", cmd_verify},
    };
    const std::map<std::string, std::string> descriptions{
        {"ingest", "convert a labeled source dataset into NLI examples"},
        {"validate", "re-label examples via the annotator and drop disagreements"},
        {"augment", "expand hypothesis pools and assign augmented phrasings"},
        {"split", "partition the corpus by hypothesis group"},
        {"train", "fine-tune a backend with per-epoch checkpoints"},
        {"evaluate", "score a backend on a split with bootstrap errors"},
        {"fewshot", "run the repeated small-sample training protocol"},
        {"bench", "measure classification throughput"},
        {"verify", "re-check corpus invariants and split leakage"},
    };

    std::map<std::string, CommonArgs> sub_args;
    for (auto& [name, handler] : handlers) {
        CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
        CommonArgs& common = sub_args[name];
        sub->add_option("--corpus", common.corpus, "input corpus directory");
        sub->add_option("--config", common.config, "stage config file (JSON)");
        sub->add_option("--seed", common.seed, "random seed");
        sub->add_option("--out", common.out, "output directory");
    }

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("nlikit");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) { // --help
            std::cout << app.help();
            return 0;
        }
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    }

    try {
        for (const auto& [name, handler] : handlers) {
            if (app.get_subcommand(name)->parsed()) {
                const CommonArgs& common = sub_args.at(name);
                if ((name != "verify") && common.config.empty())
                    throw ConfigError("--config is required for '" + name + "'");
                return handler(common);
            }
        }
        throw ConfigError("no command given");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ServiceError& e) {
        std::cerr << "service error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace nlikit::cli
