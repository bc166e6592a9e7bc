#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nlikit/cli.hpp"
#include "nlikit/corpus.hpp"
#include "nlikit/rng.hpp"
#include "support.hpp"

using json = nlohmann::json;
using namespace nlikit;
using nlikit::cli::cli_main;
using testsupport::ScratchDir;

namespace {

void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << body;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Synthetic three-topic source dataset plus the full set of stage configs.
struct Workspace {
    ScratchDir dir{"cli"};

    std::filesystem::path path(const std::string& name) const { return dir.path() / name; }
    std::string str(const std::string& name) const { return path(name).string(); }

    void materialize(int docs = 240) {
        rng::DetRng r(rng::derive(1234, "cli-raw"));
        const std::map<std::string, std::string> topic_words{
            {"IMM", "immigration border visas"},
            {"HC", "healthcare hospitals insurance"},
            {"GUN", "firearms rifles holsters"}};
        std::ostringstream raw;
        auto it = topic_words.begin();
        for (int i = 0; i < docs; ++i) {
            if (++it == topic_words.end()) it = topic_words.begin();
            raw << json{{"body", "BREAKING — Lawmakers debate " + it->second +
                                     " policy in session " + std::to_string(i)},
                        {"topic_code", it->first}}
                       .dump()
                << "\n";
        }
        write_file(path("raw.jsonl"), raw.str());

        write_file(path("ingest.json"), json{
            {"input", str("raw.jsonl")},
            {"adapter",
             {{"source_name", "cli-topics"},
              {"task", "topic"},
              {"field_map", {{"text", "body"}, {"label", "topic_code"}}},
              {"cleaning_rules",
               json::array({{{"kind", "strip_prefix_pattern"}, {"pattern", "^BREAKING — "}}})},
              {"template", {{"text", "This text is about {X}"}}},
              {"target_map",
               {{"IMM", "immigration"}, {"HC", "healthcare"}, {"GUN", "firearms"}}}}},
            {"negative_sampling", {{"ratio", 1.0}}}}.dump());

        write_file(path("validate.json"),
                   json{{"transport", {{"kind", "stub_flip"}, {"flip_probability", 0.05}}}}
                       .dump());
        write_file(path("augment.json"),
                   json{{"variants", {{"mode", "stub"}}}, {"review", {{"auto_accept", true}}}}
                       .dump());
        write_file(path("split.json"), json{{"test_target", 90},
                                            {"validation_unseen_target", 60},
                                            {"validation_seen_target", 30}}
                                           .dump());
        write_file(path("eval.json"), json{{"backend", {{"type", "lexical"}}},
                                           {"split", "test"},
                                           {"bootstrap_samples", 200}}
                                          .dump());
    }

    int run_pipeline(const std::string& suffix, std::uint64_t seed) {
        int rc = cli_main({"ingest", "--config", str("ingest.json"), "--out",
                           str("c1" + suffix), "--seed", std::to_string(seed)});
        if (rc != 0) return rc;
        rc = cli_main({"validate", "--corpus", str("c1" + suffix), "--config",
                       str("validate.json"), "--out", str("c2" + suffix), "--seed",
                       std::to_string(seed)});
        if (rc != 0) return rc;
        rc = cli_main({"augment", "--corpus", str("c2" + suffix), "--config",
                       str("augment.json"), "--out", str("c3" + suffix), "--seed",
                       std::to_string(seed)});
        if (rc != 0) return rc;
        rc = cli_main({"split", "--corpus", str("c3" + suffix), "--config", str("split.json"),
                       "--out", str("c4" + suffix), "--seed", std::to_string(seed)});
        return rc;
    }
};

} // namespace

TEST_CASE("cli: full pipeline runs, verifies clean, and evaluates") {
    Workspace ws;
    ws.materialize();
    REQUIRE(ws.run_pipeline("", 7) == 0);
    CHECK(cli_main({"verify", "--corpus", ws.str("c4")}) == 0);
    CHECK(cli_main({"evaluate", "--corpus", ws.str("c4"), "--config", ws.str("eval.json"),
                    "--out", ws.str("eval"), "--seed", "7"}) == 0);
    const std::string report = read_file(ws.path("eval") / "eval_report.json");
    CHECK(report.find("\"overall\"") != std::string::npos);
    CHECK(std::filesystem::exists(ws.path("eval") / "eval_report.csv"));
    CHECK(std::filesystem::exists(ws.path("eval") / "eval_report.txt"));
    CHECK(std::filesystem::exists(ws.path("eval") / "run_log.json"));
}

TEST_CASE("cli: pipeline rerun with the same seed is byte-identical") {
    Workspace ws;
    ws.materialize();
    REQUIRE(ws.run_pipeline("a", 99) == 0);
    REQUIRE(ws.run_pipeline("b", 99) == 0);
    for (const char* stage : {"c1", "c2", "c3", "c4"}) {
        for (const char* file : {"documents.jsonl", "hypotheses.jsonl", "examples.jsonl",
                                 "manifest.json", "run_log.json"}) {
            const auto a = ws.path(std::string(stage) + "a") / file;
            const auto b = ws.path(std::string(stage) + "b") / file;
            INFO(stage << "/" << file);
            CHECK(read_file(a) == read_file(b));
        }
    }
    CHECK(read_file(ws.path("c4a") / "split_manifest.json") ==
          read_file(ws.path("c4b") / "split_manifest.json"));
}

TEST_CASE("cli: different seeds give different corpora") {
    Workspace ws;
    ws.materialize(240);
    REQUIRE(ws.run_pipeline("x", 1) == 0);
    REQUIRE(ws.run_pipeline("y", 2) == 0);
    CHECK(read_file(ws.path("c4x") / "examples.jsonl") !=
          read_file(ws.path("c4y") / "examples.jsonl"));
}

TEST_CASE("cli: config schema violations exit 2 with a field path") {
    Workspace ws;
    ws.materialize(60);
    write_file(ws.path("bad.json"), json{{"adapter", {{"task", "topic"}}}}.dump());
    CHECK(cli_main({"ingest", "--config", ws.str("bad.json"), "--out", ws.str("bad-out")}) == 2);
    // Unknown flag is also a usage error.
    CHECK(cli_main({"ingest", "--nope"}) == 2);
    // Missing --config.
    CHECK(cli_main({"ingest", "--out", ws.str("bad-out2")}) == 2);
}

TEST_CASE("cli: corrupted corpus fails verification with exit 1") {
    Workspace ws;
    ws.materialize(60);
    REQUIRE(cli_main({"ingest", "--config", ws.str("ingest.json"), "--out", ws.str("c1"),
                      "--seed", "3"}) == 0);
    CHECK(cli_main({"verify", "--corpus", ws.str("c1")}) == 0);
    std::ofstream(ws.path("c1") / "examples.jsonl", std::ios::app) << "tampered\n";
    CHECK(cli_main({"verify", "--corpus", ws.str("c1")}) == 1);
}

TEST_CASE("cli: missing upstream stage is an explicit dependency error") {
    Workspace ws;
    ws.materialize(60);
    REQUIRE(cli_main({"ingest", "--config", ws.str("ingest.json"), "--out", ws.str("c1"),
                      "--seed", "3"}) == 0);
    write_file(ws.path("train.json"), json{{"backend", {{"type", "lexical"}}},
                                           {"train_spec", {{"epochs", 1}}}}
                                          .dump());
    // No split stage yet: train must refuse.
    CHECK(cli_main({"train", "--corpus", ws.str("c1"), "--config", ws.str("train.json"),
                    "--out", ws.str("t1")}) == 1);
    // Nonexistent corpus directory.
    CHECK(cli_main({"verify", "--corpus", ws.str("nowhere")}) == 1);
}

TEST_CASE("cli: unreachable annotator endpoint exits 3") {
    Workspace ws;
    ws.materialize(30);
    REQUIRE(cli_main({"ingest", "--config", ws.str("ingest.json"), "--out", ws.str("c1"),
                      "--seed", "3"}) == 0);
    write_file(ws.path("validate-http.json"),
               json{{"annotator",
                     {{"endpoint", "http://127.0.0.1:9/unreachable"},
                      {"model_name", "m"},
                      {"retry", {{"max_retries", 0}, {"backoff_base_seconds", 0.0}}}}},
                    {"transport", {{"kind", "http"}}}}
                   .dump());
    CHECK(cli_main({"validate", "--corpus", ws.str("c1"), "--config",
                    ws.str("validate-http.json"), "--out", ws.str("c2")}) == 3);
}

TEST_CASE("cli: train and evaluate work on a split corpus") {
    Workspace ws;
    ws.materialize(240);
    REQUIRE(ws.run_pipeline("", 5) == 0);
    write_file(ws.path("train.json"),
               json{{"backend", {{"type", "lexical"}, {"hash_bits", 14}, {"pretrained", false}}},
                    {"train_spec",
                     {{"epochs", 3}, {"learning_rate", 0.2}, {"warmup_ratio", 0.0}}}}
                   .dump());
    REQUIRE(cli_main({"train", "--corpus", ws.str("c4"), "--config", ws.str("train.json"),
                      "--out", ws.str("t1"), "--seed", "5"}) == 0);
    CHECK(std::filesystem::exists(ws.path("t1") / "checkpoints" / "epoch-001" / "model.json"));
    CHECK(std::filesystem::exists(ws.path("t1") / "checkpoints" / "epoch-003" / "model.json"));
    CHECK(std::filesystem::exists(ws.path("t1") / "checkpoints" / "metrics.jsonl"));
    const json ranking = json::parse(read_file(ws.path("t1") / "ranking.json"));
    CHECK(ranking.size() == 3);

    // Evaluate the best checkpoint on the test split.
    write_file(ws.path("eval-ckpt.json"),
               json{{"backend",
                     {{"type", "checkpoint"},
                      {"path", ranking[0]["path"].get<std::string>()}}},
                    {"split", "test"},
                    {"bootstrap_samples", 150}}
                   .dump());
    CHECK(cli_main({"evaluate", "--corpus", ws.str("c4"), "--config", ws.str("eval-ckpt.json"),
                    "--out", ws.str("eval-ckpt"), "--seed", "5"}) == 0);
}

TEST_CASE("cli: fewshot command produces the protocol report") {
    Workspace ws;
    ws.materialize(30);
    std::ostringstream pool;
    rng::DetRng r(rng::derive(6, "pool"));
    for (int i = 0; i < 160; ++i) {
        const bool pos = r.bernoulli(0.5);
        pool << json{{"text", std::string(pos ? "campaign rally excitement" : "quiet town news") +
                                  " item " + std::to_string(i)},
                     {"label", pos ? 0 : 1}}
                    .dump()
             << "\n";
    }
    write_file(ws.path("pool.jsonl"), pool.str());
    write_file(ws.path("fewshot.json"), json{{"pool", ws.str("pool.jsonl")},
                                             {"hypothesis", "This text is about a campaign rally"},
                                             {"sample_sizes", {10, 25}},
                                             {"repeats", 3},
                                             {"epochs", 3},
                                             {"backend", {{"type", "lexical"}}}}
                                            .dump());
    REQUIRE(cli_main({"fewshot", "--config", ws.str("fewshot.json"), "--out", ws.str("fs"),
                      "--seed", "6"}) == 0);
    const json report = json::parse(read_file(ws.path("fs") / "fewshot_report.json"));
    CHECK(report["rows"].size() == 2);
    CHECK(report["rows"][0]["run_values"].size() == 3);
    CHECK(report["complete"].get<bool>());
}

TEST_CASE("cli: bench command writes the timing report and ledger") {
    Workspace ws;
    ws.materialize(150);
    REQUIRE(cli_main({"ingest", "--config", ws.str("ingest.json"), "--out", ws.str("c1"),
                      "--seed", "3"}) == 0);
    write_file(ws.path("bench.json"), json{{"batch_size", 16},
                                           {"n_docs", 100},
                                           {"warmup_batches", 1},
                                           {"backend", {{"type", "lexical"}}},
                                           {"hardware_override", "ci-rig"},
                                           {"csv_ledger", ws.str("ledger.csv")}}
                                          .dump());
    REQUIRE(cli_main({"bench", "--corpus", ws.str("c1"), "--config", ws.str("bench.json"),
                      "--out", ws.str("b1"), "--seed", "3"}) == 0);
    const json timing = json::parse(read_file(ws.path("b1") / "timing.json"));
    CHECK(timing["docs_completed"].get<int>() == 100);
    CHECK(timing["hardware"].get<std::string>() == "ci-rig");
    CHECK(read_file(ws.path("ledger.csv")).find("ci-rig") != std::string::npos);
    // batch_size is required config.
    write_file(ws.path("bench-bad.json"), json{{"n_docs", 10}}.dump());
    CHECK(cli_main({"bench", "--corpus", ws.str("c1"), "--config", ws.str("bench-bad.json"),
                    "--out", ws.str("b2")}) == 2);
}

TEST_CASE("cli: augment review export/import round trip") {
    Workspace ws;
    ws.materialize(60);
    REQUIRE(cli_main({"ingest", "--config", ws.str("ingest.json"), "--out", ws.str("c1"),
                      "--seed", "3"}) == 0);
    write_file(ws.path("augment-export.json"),
               json{{"variants", {{"mode", "stub"}}},
                    {"review", {{"export", ws.str("review.tsv")}}}}
                   .dump());
    REQUIRE(cli_main({"augment", "--corpus", ws.str("c1"), "--config",
                      ws.str("augment-export.json"), "--out", ws.str("c2"), "--seed", "3"}) == 0);
    // Export stops before writing a corpus.
    CHECK_FALSE(std::filesystem::exists(ws.path("c2") / "manifest.json"));

    // Accept everything and import.
    std::string review = read_file(ws.path("review.tsv"));
    std::string accepted;
    for (std::size_t pos = 0; pos < review.size();) {
        const auto next = review.find("\tundecided\t", pos);
        if (next == std::string::npos) {
            accepted += review.substr(pos);
            break;
        }
        accepted += review.substr(pos, next - pos) + "\taccept\t";
        pos = next + 11;
    }
    write_file(ws.path("review.tsv"), accepted);
    // Import takes candidates from the file itself; no regeneration needed.
    write_file(ws.path("augment-import.json"),
               json{{"variants", {{"mode", "none"}}},
                    {"review", {{"import", ws.str("review.tsv")}}}}
                   .dump());
    REQUIRE(cli_main({"augment", "--corpus", ws.str("c1"), "--config",
                      ws.str("augment-import.json"), "--out", ws.str("c3"), "--seed", "3"}) == 0);
    auto augmented = corpus::load_corpus(ws.path("c3"));
    for (const auto& h : augmented.hypotheses) CHECK(h.variants.size() >= 3);
}

TEST_CASE("cli: no command mutates its input directory") {
    Workspace ws;
    ws.materialize(60);
    REQUIRE(cli_main({"ingest", "--config", ws.str("ingest.json"), "--out", ws.str("c1"),
                      "--seed", "3"}) == 0);
    auto snapshot = [&] {
        std::map<std::string, std::string> files;
        for (const auto& entry : std::filesystem::directory_iterator(ws.path("c1")))
            files[entry.path().filename().string()] = read_file(entry.path());
        return files;
    };
    const auto before = snapshot();
    REQUIRE(cli_main({"validate", "--corpus", ws.str("c1"), "--config", ws.str("validate.json"),
                      "--out", ws.str("c2"), "--seed", "3"}) == 0);
    REQUIRE(cli_main({"verify", "--corpus", ws.str("c1")}) == 0);
    CHECK(snapshot() == before);
}
