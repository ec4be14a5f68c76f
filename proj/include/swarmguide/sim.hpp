#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "swarmguide/async.hpp"
#include "swarmguide/guidance.hpp"
#include "swarmguide/policies.hpp"
#include "swarmguide/topology.hpp"

namespace swarmguide {

enum class PolicyKind { p1, p1_boosted, p2, p2_quorum, gica_baseline };

std::string_view policy_name(PolicyKind kind);
// Accepts "p1", "p1-boosted", "p2", "p2+quorum" (or "p2-quorum"), "gica-baseline".
PolicyKind parse_policy(std::string_view name);

// Whether the policy blends in a secondary matrix with nonzero weight.
bool has_secondary(PolicyKind kind);

struct Scenario {
    int grid_rows = 10;
    int grid_cols = 10;
    int max_hops = 3;
    int n_agents = 2000;
    int start_bin = 0;
    std::vector<double> theta;                // empty: drawn at random
    std::optional<std::uint64_t> theta_seed;  // seed for the random draw; run seed if unset
    PolicyKind policy = PolicyKind::p1_boosted;
    double blocking_fraction = 0.0;
    int connectivity_window = 50;
    std::optional<double> stop_hellinger;     // stop once D_H drops to this value
    GuidanceConfig guidance;

    // Throws std::invalid_argument naming the offending key.
    void validate() const;

    bool operator==(const Scenario&) const = default;
};

// SHA-256 over a canonical dump of every scenario field, as lowercase hex.
std::string config_digest(const Scenario& scenario);

// Hellinger distance between two distributions of equal length.
double hellinger(std::span<const double> theta, std::span<const double> mu);

// Counter-based per-agent uniforms: the value for (agent, step) depends only on
// the seed and those two numbers.
class AgentStreams {
public:
    explicit AgentStreams(std::uint64_t seed) : seed_(seed) {}
    double uniform(std::uint64_t agent, std::int64_t step) const;
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

struct StepMetrics {
    double hellinger = 0.0;
    double transitioning_fraction = 0.0;
    double expense = 0.0;          // expense accrued this step
    double max_path_flux = 0.0;    // largest realized count over directed edges
    double max_prob_flux = 0.0;    // max over edges of n[i] * P[i,l]
};

struct StepOutcome {
    SwarmState next;
    StepMetrics metrics;
    Eigen::MatrixXd primary;      // primary matrix actually used (after masking)
    Eigen::MatrixXd unmasked;     // primary matrix before masking
    std::vector<double> gains;    // primary gain per bin
    std::vector<double> omega;    // secondary weight per bin
};

// Per-run fixed data: topology, desired distribution and the matrices derived
// from them. Steps read a frozen state and never mutate the engine.
class GuidanceEngine {
public:
    GuidanceEngine(const Scenario& scenario, DesiredDistribution theta);

    const Scenario& scenario() const { return scenario_; }
    const BinTopology& topology() const { return topo_; }
    const DesiredDistribution& theta() const { return theta_; }
    const ExpenseModel& expense() const { return expense_; }

    // Primary gains and primary matrix for a state, before masking.
    std::vector<double> primary_gains(const SwarmState& state) const;
    Eigen::MatrixXd primary_matrix(const SwarmState& state, std::span<const double> gains) const;

    // One decision epoch. Decisions taken from a state at step s use time index s + 1.
    StepOutcome step(const SwarmState& state, const AgentStreams& streams, const ReadinessMask* mask = nullptr) const;

private:
    Scenario scenario_;
    BinTopology topo_;
    DesiredDistribution theta_;
    ExpenseModel expense_;
    ThetaBoost boost_;
    Eigen::MatrixXd caps_;
};

// Desired distribution for a run: the explicit list if given, else a seeded draw.
DesiredDistribution scenario_theta(const Scenario& scenario, std::uint64_t run_seed);

struct RunTrace {
    std::uint64_t seed = 0;
    std::string config_digest;
    std::int64_t steps = 0;  // decision epochs executed
    std::vector<double> hellinger;
    std::vector<double> transitioning_fraction;
    std::vector<double> cumulative_expense;
    std::vector<double> max_path_flux;
    std::vector<double> max_prob_flux;
    std::int64_t windows_checked = 0;
    std::int64_t windows_connected = 0;
};

// Called after every step with the state the decisions were taken from.
struct StepRecord {
    const SwarmState& state;
    const StepOutcome& outcome;
    const ReadinessMask* mask;
};
using StepObserver = std::function<void(const StepRecord&)>;

// Row 0 of every series is the initial state; row k follows the k-th step.
RunTrace run(const Scenario& scenario, std::uint64_t seed, std::int64_t n_steps, const StepObserver& observer = {});

inline constexpr double kThresholds[] = {0.30, 0.28, 0.26, 0.24, 0.22, 0.20, 0.18, 0.16, 0.14, 0.12, 0.10};

// First index at which the series is at or below the threshold.
std::optional<std::int64_t> first_at_or_below(std::span<const double> series, double threshold);

struct RunSummary {
    std::uint64_t seed = 0;
    std::string config_digest;
    std::int64_t steps = 0;
    double initial_hellinger = 0.0;
    double final_hellinger = 0.0;
    double min_hellinger = 0.0;
    double total_expense = 0.0;
    double mean_transitioning_fraction = 0.0;
    std::vector<std::optional<std::int64_t>> time_to_threshold;  // aligned with kThresholds
    std::int64_t windows_checked = 0;
    std::int64_t windows_connected = 0;
};

RunSummary summarize_run(const RunTrace& trace);

struct QuantileSummary {
    int count = 0;  // runs that reached the threshold
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct BatchSummary {
    int n_runs = 0;
    std::vector<RunSummary> runs;
    std::vector<QuantileSummary> time_to_threshold;  // aligned with kThresholds, over runs that reached it
    QuantileSummary final_hellinger;
    QuantileSummary total_expense;
};

BatchSummary summarize_batch(std::span<const RunTrace> traces);

// Linear-interpolation quantile of unsorted values, p in [0,1].
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);
QuantileSummary describe(std::vector<double> values);

struct MonteCarloResult {
    std::vector<RunTrace> traces;
    BatchSummary summary;
};

// Runs seeds base_seed + r for r in [0, n_runs). threads = 0 picks the hardware count.
MonteCarloResult monte_carlo(const Scenario& scenario, int n_runs, std::uint64_t base_seed, std::int64_t n_steps,
                             unsigned threads = 0);

// Per-run ratio of final cumulative expense, numerator over denominator, paired by index.
std::vector<double> expense_ratios(std::span<const RunTrace> numerator, std::span<const RunTrace> denominator);

}  // namespace swarmguide
