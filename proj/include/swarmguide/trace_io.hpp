#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "swarmguide/sim.hpp"

namespace swarmguide {

inline constexpr int kTraceSchemaVersion = 1;
inline constexpr int kSummarySchemaVersion = 1;
inline constexpr const char* kTraceHeader =
    "step,hellinger,transitioning_fraction,cumulative_expense,max_path_flux,max_prob_flux";

// One row per sample, values printed with round-trip precision.
void write_trace_csv(std::ostream& os, const RunTrace& trace);
// Reads the series back; metadata (seed, digest) is not part of the CSV.
RunTrace read_trace_csv(std::istream& is);

nlohmann::json run_summary_json(const RunSummary& summary);
nlohmann::json batch_summary_json(const BatchSummary& summary);

}  // namespace swarmguide
