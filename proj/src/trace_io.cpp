#include "swarmguide/trace_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace swarmguide {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& cell, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("trace CSV line " + std::to_string(line) + ": bad number '" + cell + "'");
    }
}

nlohmann::json quantiles_json(const QuantileSummary& q) {
    return {{"count", q.count}, {"median", q.median}, {"q25", q.q25}, {"q75", q.q75}, {"min", q.min}, {"max", q.max}};
}

}  // namespace

void write_trace_csv(std::ostream& os, const RunTrace& trace) {
    os << kTraceHeader << '\n';
    for (std::size_t k = 0; k < trace.hellinger.size(); ++k) {
        os << k << ',' << fmt(trace.hellinger[k]) << ',' << fmt(trace.transitioning_fraction[k]) << ','
           << fmt(trace.cumulative_expense[k]) << ',' << fmt(trace.max_path_flux[k]) << ','
           << fmt(trace.max_prob_flux[k]) << '\n';
    }
}

RunTrace read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("trace CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceHeader) throw std::runtime_error("trace CSV header mismatch: '" + line + "'");
    RunTrace trace;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6) throw std::runtime_error("trace CSV line " + std::to_string(lineno) + ": expected 6 columns");
        const double step = parse_double(cells[0], lineno);
        if (step != static_cast<double>(trace.hellinger.size())) {
            throw std::runtime_error("trace CSV line " + std::to_string(lineno) + ": steps must count up from 0");
        }
        trace.hellinger.push_back(parse_double(cells[1], lineno));
        trace.transitioning_fraction.push_back(parse_double(cells[2], lineno));
        trace.cumulative_expense.push_back(parse_double(cells[3], lineno));
        trace.max_path_flux.push_back(parse_double(cells[4], lineno));
        trace.max_prob_flux.push_back(parse_double(cells[5], lineno));
    }
    if (trace.hellinger.empty()) throw std::runtime_error("trace CSV has no rows");
    trace.steps = static_cast<std::int64_t>(trace.hellinger.size()) - 1;
    return trace;
}

nlohmann::json run_summary_json(const RunSummary& s) {
    nlohmann::json thresholds = nlohmann::json::array();
    for (std::size_t t = 0; t < s.time_to_threshold.size(); ++t) {
        const auto& v = s.time_to_threshold[t];
        thresholds.push_back({{"threshold", kThresholds[t]}, {"step", v ? nlohmann::json(*v) : nlohmann::json(nullptr)}});
    }
    return {
        {"schema_version", kSummarySchemaVersion},
        {"seed", s.seed},
        {"config_digest", s.config_digest},
        {"steps", s.steps},
        {"initial_hellinger", s.initial_hellinger},
        {"final_hellinger", s.final_hellinger},
        {"min_hellinger", s.min_hellinger},
        {"total_expense", s.total_expense},
        {"mean_transitioning_fraction", s.mean_transitioning_fraction},
        {"time_to_threshold", thresholds},
        {"windows_checked", s.windows_checked},
        {"windows_connected", s.windows_connected},
    };
}

nlohmann::json batch_summary_json(const BatchSummary& b) {
    nlohmann::json thresholds = nlohmann::json::array();
    for (std::size_t t = 0; t < b.time_to_threshold.size(); ++t) {
        auto q = quantiles_json(b.time_to_threshold[t]);
        q["threshold"] = kThresholds[t];
        thresholds.push_back(q);
    }
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : b.runs) runs.push_back(run_summary_json(r));
    return {
        {"schema_version", kSummarySchemaVersion},
        {"n_runs", b.n_runs},
        {"time_to_threshold", thresholds},
        {"final_hellinger", quantiles_json(b.final_hellinger)},
        {"total_expense", quantiles_json(b.total_expense)},
        {"runs", runs},
    };
}

}  // namespace swarmguide
