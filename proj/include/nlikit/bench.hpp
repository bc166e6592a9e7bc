#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "nlikit/engine.hpp"

namespace nlikit::bench {

struct TimingOptions {
    std::size_t n_docs = 5000;
    std::string hypothesis = "This text is about politics";
    std::size_t batch_size = 0; // required; never defaulted silently
    std::size_t warmup_batches = 3;
    std::uint64_t seed = 1;
    std::string hardware_override;      // replaces the detected descriptor
    std::string precision_mode = "fp64"; // numeric mode recorded for comparisons
};

struct TimingReport {
    double docs_per_second = 0.0;
    double total_seconds = 0.0;
    std::size_t n_docs = 0;
    std::size_t docs_completed = 0;
    std::size_t batch_size = 0;
    std::size_t warmup_batches = 0;
    std::string hardware;
    std::string backend;
    std::string precision_mode;
    bool complete = true;

    std::string to_json_string() const;
};

// Best-effort host CPU/accelerator description.
std::string detect_hardware();

// Samples n_docs premises (seeded, without replacement), runs the warmup
// batches untimed, then times classification only. One benchmark may run per
// process at a time; a concurrent call throws. A backend failure mid-run
// produces a partial report flagged incomplete.
TimingReport run_timing(const engine::NLIBackend& backend, std::span<const std::string> premises,
                        const TimingOptions& options);

// Appends one row to the cross-run CSV ledger, writing the header first when
// the file is new.
void append_csv_ledger(const std::filesystem::path& file, const TimingReport& report);

} // namespace nlikit::bench
