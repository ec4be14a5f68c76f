#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "swarmguide/async.hpp"
#include "swarmguide/guidance.hpp"
#include "swarmguide/scenario.hpp"
#include "swarmguide/sim.hpp"
#include "swarmguide/trace_io.hpp"

namespace fs = std::filesystem;
using namespace swarmguide;

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::optional<std::int64_t> steps;
    std::optional<std::string> out;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--scenario", o.scenario, "preset name or scenario file")->required();
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("--steps", o.steps, "decision epochs per run");
    cmd->add_option("--set", o.sets, "override a scenario key, key=value")->take_all();
}

ScenarioSpec resolve(const CommonOptions& o) {
    ScenarioSpec spec = load_scenario(o.scenario);
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        apply_override(spec, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) spec.seed = *o.seed;
    if (o.runs) spec.n_runs = *o.runs;
    if (o.steps) spec.n_steps = *o.steps;
    if (o.out) spec.output_dir = *o.out;
    spec.validate();
    return spec;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void write_trace(const fs::path& path, const RunTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_trace_csv(out, trace);
    if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json provenance(const ScenarioSpec& spec, const std::string& command) {
    nlohmann::json seeds = nlohmann::json::array();
    for (int r = 0; r < spec.n_runs; ++r) seeds.push_back(spec.seed + static_cast<std::uint64_t>(r));
    return {
        {"schema_version", kSummarySchemaVersion},
        {"command", command},
        {"scenario", spec.name},
        {"config_digest", config_digest(spec.scenario)},
        {"base_seed", spec.seed},
        {"seeds", seeds},
        {"n_steps", spec.n_steps},
        {"build", build_identifier()},
    };
}

int cmd_run(const CommonOptions& o, unsigned threads) {
    const ScenarioSpec spec = resolve(o);
    const fs::path dir(spec.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_text(dir / "scenario.yaml", write_scenario(spec));

    if (spec.n_runs == 1) {
        const auto trace = run(spec.scenario, spec.seed, spec.n_steps);
        write_trace(dir / "trace.csv", trace);
        write_text(dir / "summary.json", run_summary_json(summarize_run(trace)).dump(2) + "\n");
        std::cout << "run " << spec.name << " seed " << spec.seed << ": " << trace.steps << " steps, final D_H "
                  << trace.hellinger.back() << "\n";
    } else {
        const auto mc = monte_carlo(spec.scenario, spec.n_runs, spec.seed, spec.n_steps, threads);
        fs::create_directories(dir / "traces", ec);
        if (ec) throw IoError("cannot create " + (dir / "traces").string() + ": " + ec.message());
        for (const auto& t : mc.traces) write_trace(dir / "traces" / ("trace_" + std::to_string(t.seed) + ".csv"), t);
        write_text(dir / "summary.json", batch_summary_json(mc.summary).dump(2) + "\n");
        std::cout << "ran " << spec.n_runs << " runs of " << spec.name << ", median final D_H "
                  << mc.summary.final_hellinger.median << "\n";
    }
    write_text(dir / "provenance.json", provenance(spec, "run").dump(2) + "\n");
    std::cout << "wrote " << dir.string() << "\n";
    return 0;
}

struct ValidationTally {
    std::int64_t steps = 0;
    std::int64_t r1 = 0, r2 = 0, r3 = 0, r4 = 0, r5 = 0, flux = 0, async = 0;
    double worst_row_error = 0.0;
    double worst_balance_error = 0.0;
    double worst_r5_excess = -1.0;
    double worst_flux = 0.0;
    std::vector<std::string> first_failures;

    void note(std::int64_t step, const std::string& what) {
        if (first_failures.size() < 10) first_failures.push_back("step " + std::to_string(step) + ": " + what);
    }
};

int cmd_validate(const CommonOptions& o, bool r5_monitor_only) {
    ScenarioSpec spec = resolve(o);
    const bool flux_policy = spec.scenario.policy == PolicyKind::p2 || spec.scenario.policy == PolicyKind::p2_quorum;
    const auto theta = scenario_theta(spec.scenario, spec.seed);
    const auto topo = build_grid(spec.scenario.grid_rows, spec.scenario.grid_cols, spec.scenario.max_hops);
    const double cap = spec.scenario.guidance.flux_cap;

    ValidationTally tally;
    const auto observer = [&](const StepRecord& rec) {
        const auto step = rec.state.step() + 1;
        ++tally.steps;
        const auto rep = validate_requirements(rec.outcome.unmasked, theta, topo, rec.outcome.gains);
        tally.worst_row_error = std::max(tally.worst_row_error, rep.max_row_sum_error);
        tally.worst_balance_error = std::max(tally.worst_balance_error, rep.max_balance_error);
        tally.worst_r5_excess = std::max(tally.worst_r5_excess, rep.max_r5_excess);
        const auto check = [&](bool ok, std::int64_t& count, const std::string& what) {
            if (ok) return;
            ++count;
            tally.note(step, what);
        };
        check(rep.r1_stochastic, tally.r1, "R1");
        check(rep.r2_positive_diagonal, tally.r2, "R2");
        check(rep.r3_detailed_balance, tally.r3, "R3");
        check(rep.r4_irreducible_support, tally.r4, "R4");
        check(rep.r5_settling_bound, tally.r5, "R5 (excess " + std::to_string(rep.max_r5_excess) + ")");
        if (flux_policy) {
            const double f = rec.outcome.metrics.max_prob_flux;
            tally.worst_flux = std::max(tally.worst_flux, f);
            check(f <= cap, tally.flux, "flux bound (" + std::to_string(f) + ")");
        }
        if (rec.mask) {
            const auto a = verify_async_properties(rec.outcome.primary, theta, topo, *rec.mask);
            check(a.stationarity_properties() && a.no_cross_boundary_flow, tally.async, "asynchronous matrix");
        }
    };
    run(spec.scenario, spec.seed, spec.n_steps, observer);

    const auto line = [&](const char* name, std::int64_t bad, bool counted = true) {
        std::cout << "  " << name << ": " << (bad == 0 ? "ok" : "VIOLATED in " + std::to_string(bad) + " steps")
                  << (counted ? "" : " (monitored only)") << "\n";
    };
    std::cout << "validate " << spec.name << " seed " << spec.seed << ", " << tally.steps << " steps\n";
    line("R1 row-stochastic", tally.r1);
    line("R2 positive diagonal", tally.r2);
    line("R3 detailed balance", tally.r3);
    line("R4 support = communication graph", tally.r4);
    line("R5 1 - P[i,i] <= gain", tally.r5, !r5_monitor_only);
    if (flux_policy) line("flux bound n[i]P[i,l] <= c", tally.flux);
    if (spec.scenario.blocking_fraction > 0.0) line("asynchronous matrix properties", tally.async);
    std::cout << "  worst row-sum error " << tally.worst_row_error << ", worst balance error "
              << tally.worst_balance_error << ", worst R5 excess " << tally.worst_r5_excess;
    if (flux_policy) std::cout << ", worst expected flux " << tally.worst_flux << " (cap " << cap << ")";
    std::cout << "\n";
    for (const auto& f : tally.first_failures) std::cout << "  " << f << "\n";

    const auto hard = tally.r1 + tally.r2 + tally.r3 + tally.r4 + tally.flux + tally.async + (r5_monitor_only ? 0 : tally.r5);
    std::cout << (hard == 0 ? "PASS" : "FAIL") << "\n";
    return hard == 0 ? 0 : kExitViolation;
}

int cmd_summarize(const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            for (const auto& e : fs::recursive_directory_iterator(p)) {
                if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
            }
        } else {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::invalid_argument("no trace CSV files found");
    std::vector<RunTrace> traces;
    for (std::size_t r = 0; r < files.size(); ++r) {
        std::ifstream in(files[r]);
        if (!in) throw IoError("cannot read " + files[r].string());
        auto t = read_trace_csv(in);
        t.seed = r;
        traces.push_back(std::move(t));
    }
    auto json = batch_summary_json(summarize_batch(traces));
    json["sources"] = nlohmann::json::array();
    for (const auto& f : files) json["sources"].push_back(f.string());
    const std::string text = json.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text(out, text);
        std::cout << "wrote " << out << " from " << files.size() << " traces\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Swarm distribution guidance simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", build_identifier());

    CommonOptions run_opts;
    unsigned threads = 0;
    auto* run_cmd = app.add_subcommand("run", "run one scenario or a Monte-Carlo batch");
    add_common(run_cmd, run_opts);
    run_cmd->add_option("--runs", run_opts.runs, "number of runs (seeds base, base+1, ...)");
    run_cmd->add_option("--out", run_opts.out, "output directory");
    run_cmd->add_option("--threads", threads, "worker threads for batches (0 = all cores)");

    CommonOptions val_opts;
    bool r5_monitor_only = false;
    auto* val_cmd = app.add_subcommand("validate", "check R1-R5, flux and asynchronous properties at every step");
    add_common(val_cmd, val_opts);
    val_cmd->add_flag("--r5-monitor-only", r5_monitor_only, "report R5 violations without failing");

    std::vector<std::string> inputs;
    std::string summary_out;
    auto* sum_cmd = app.add_subcommand("summarize", "re-aggregate existing trace CSVs");
    sum_cmd->add_option("inputs", inputs, "trace CSV files or directories")->required();
    sum_cmd->add_option("--out", summary_out, "write the summary JSON here instead of stdout");

    CommonOptions show_opts;
    auto* show_cmd = app.add_subcommand("show", "print the resolved scenario file");
    show_cmd->add_option("--scenario", show_opts.scenario, "preset name or scenario file")->required();
    show_cmd->add_option("--set", show_opts.sets, "override a scenario key, key=value")->take_all();
    auto* presets_cmd = app.add_subcommand("presets", "list preset names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(run_opts, threads);
        if (*val_cmd) return cmd_validate(val_opts, r5_monitor_only);
        if (*sum_cmd) return cmd_summarize(inputs, summary_out);
        if (*show_cmd) {
            std::cout << write_scenario(resolve(show_opts));
            return 0;
        }
        if (*presets_cmd) {
            for (const auto& n : preset_names()) std::cout << n << "\n";
            return 0;
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
