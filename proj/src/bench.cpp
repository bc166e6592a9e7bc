#include "nlikit/bench.hpp"

#include <atomic>
#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nlikit/errors.hpp"
#include "nlikit/rng.hpp"
#include "nlikit/text.hpp"

using json = nlohmann::json;

namespace nlikit::bench {

std::string detect_hardware() {
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) return text::trim(line.substr(colon + 1));
        }
    }
    return "unknown-cpu";
}

namespace {

std::atomic<bool> g_benchmark_running{false};

// Releases the single-run guard on every exit path.
struct RunGuard {
    RunGuard() {
        bool expected = false;
        if (!g_benchmark_running.compare_exchange_strong(expected, true))
            throw Error("a timing benchmark is already running in this process");
    }
    ~RunGuard() { g_benchmark_running.store(false); }
};

} // namespace

TimingReport run_timing(const engine::NLIBackend& backend, std::span<const std::string> premises,
                        const TimingOptions& options) {
    if (options.batch_size == 0)
        throw ConfigError("timing benchmark: batch_size must be configured explicitly");
    if (options.n_docs == 0) throw ConfigError("timing benchmark: n_docs must be >= 1");
    if (premises.size() < options.n_docs)
        throw ConfigError("timing benchmark: corpus has " + std::to_string(premises.size()) +
                          " documents, need " + std::to_string(options.n_docs));
    RunGuard guard;

    rng::DetRng r(rng::derive(options.seed, "bench-sample"));
    const auto picks = r.sample_without_replacement(premises.size(), options.n_docs);

    TimingReport report;
    report.n_docs = options.n_docs;
    report.batch_size = options.batch_size;
    report.warmup_batches = options.warmup_batches;
    report.hardware =
        options.hardware_override.empty() ? detect_hardware() : options.hardware_override;
    report.backend = backend.descriptor();
    report.precision_mode = options.precision_mode;

    // Warmup runs over the head of the sample, excluded from timing.
    const std::size_t warmup_docs =
        std::min(options.warmup_batches * options.batch_size, picks.size());
    for (std::size_t i = 0; i < warmup_docs; ++i)
        engine::classify(backend, premises[picks[i]], options.hypothesis);

    const auto start = std::chrono::steady_clock::now();
    std::size_t done = 0;
    try {
        while (done < picks.size()) {
            const std::size_t end = std::min(picks.size(), done + options.batch_size);
            for (std::size_t i = done; i < end; ++i)
                engine::classify(backend, premises[picks[i]], options.hypothesis);
            done = end;
        }
    } catch (const std::exception&) {
        report.complete = false;
    }
    const auto stop = std::chrono::steady_clock::now();

    report.docs_completed = done;
    report.total_seconds = std::chrono::duration<double>(stop - start).count();
    report.docs_per_second = report.total_seconds > 0.0
                                 ? static_cast<double>(done) / report.total_seconds
                                 : 0.0;
    return report;
}

std::string TimingReport::to_json_string() const {
    return json{{"docs_per_second", docs_per_second},
                {"total_seconds", total_seconds},
                {"n_docs", n_docs},
                {"docs_completed", docs_completed},
                {"batch_size", batch_size},
                {"warmup_batches", warmup_batches},
                {"hardware", hardware},
                {"backend", backend},
                {"precision_mode", precision_mode},
                {"complete", complete}}
        .dump(2);
}

void append_csv_ledger(const std::filesystem::path& file, const TimingReport& report) {
    const bool fresh = !std::filesystem::exists(file);
    std::ofstream out(file, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to timing ledger: " + file.string());
    if (fresh)
        out << "backend,hardware,precision,batch_size,n_docs,docs_per_second,total_seconds,"
               "complete\n";
    out << report.backend << ',' << report.hardware << ',' << report.precision_mode << ','
        << report.batch_size << ',' << report.n_docs << ',' << report.docs_per_second << ','
        << report.total_seconds << ',' << (report.complete ? "true" : "false") << '\n';
}

} // namespace nlikit::bench
