#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swarmguide/topology.hpp"

namespace swarmguide {

// Per-agent bin assignment at one time instant plus the derived per-bin counts.
class SwarmState {
public:
    SwarmState(int n_bins, std::vector<int> assignment, std::int64_t step = 0);

    static SwarmState all_in_bin(int n_bins, int n_agents, int bin);
    // Agents laid out bin by bin in ascending order.
    static SwarmState from_counts(std::span<const int> counts, std::int64_t step = 0);

    int n_bins() const { return static_cast<int>(counts_.size()); }
    int n_agents() const { return static_cast<int>(assignment_.size()); }
    std::int64_t step() const { return step_; }
    std::span<const int> assignment() const { return assignment_; }
    std::span<const int> counts() const { return counts_; }

    // Global swarm distribution mu*, all zeros when there are no agents.
    std::vector<double> distribution() const;

private:
    std::vector<int> assignment_;
    std::vector<int> counts_;
    std::int64_t step_;
};

// Design parameters shared by every policy. Defaults are the values used for
// the 10x10 travel-expense experiments.
struct GuidanceConfig {
    double alpha = 0.6;          // primary gain exponent
    double eps_xi = 1e-9;        // primary gain floor
    double eps_m = 1.0;          // off-diagonal scale, (0,1]
    double beta = 1.8e5;         // settling gain steepness
    double tau = 1e-6;           // decay rate of the secondary weight
    double gamma = 30.0;         // quorum logistic steepness
    double quorum = 1.3;         // quorum threshold q > 1
    double flux_cap = 20.0;      // per-edge one-way flux bound
    double expense_slope = 1.0;  // expense per hop
    double expense_offset = 0.5; // fixed expense per transition
    double eps_e = 0.1;          // expense normaliser offset
    bool use_theta_boost = false;

    // Throws std::invalid_argument naming the offending key.
    void validate() const;

    bool operator==(const GuidanceConfig&) const = default;
};

// What an agent in `bin` knows: its local density and target, and the same two
// quantities for each neighbour (each computed over that neighbour's own N(l)).
struct LocalView {
    int bin = 0;
    double local_density = 0.0;
    double local_target = 0.0;
    bool empty_neighborhood = false;
    std::vector<int> neighbors;  // N(bin), ascending, includes bin
    std::vector<double> neighbor_densities;
    std::vector<double> neighbor_targets;
    std::vector<int> neighbor_counts;
};

// Local densities and targets of every bin at one instant.
struct LocalField {
    std::vector<double> density;
    std::vector<double> target;
    std::vector<char> empty;

    LocalView view(const BinTopology& topo, std::span<const int> counts, int bin) const;
};

// Local density of bin i; 0 (and `empty` set) when nobody is in N(i).
double local_density(std::span<const int> counts, const BinTopology& topo, int i, bool* empty = nullptr);

LocalField local_field(std::span<const int> counts, const BinTopology& topo, const DesiredDistribution& theta);

LocalView local_view(const SwarmState& state, const BinTopology& topo, const DesiredDistribution& theta, int i);

// Primary local-feedback gain in [eps_xi, 1].
double primary_gain(double local_density, double local_target, const GuidanceConfig& cfg);
double primary_gain(const LocalView& view, const GuidanceConfig& cfg);

struct PolicyRow {
    std::vector<double> primary;
    std::vector<double> secondary;
    double omega = 0.0;
    std::vector<double> composed;
};

// omega = exp(-tau * step) * gain; composed = (1 - omega) primary + omega secondary.
// Throws std::invalid_argument when omega >= 1 or the inputs are malformed.
PolicyRow compose_row(std::vector<double> primary, std::vector<double> secondary, double gain,
                      std::int64_t step, const GuidanceConfig& cfg);

// Same blend with omega given directly.
std::vector<double> blend_rows(std::span<const double> primary, std::span<const double> secondary, double omega);

inline constexpr double kStochasticTolerance = 1e-12;

struct RequirementReport {
    bool r1_stochastic = true;
    bool r2_positive_diagonal = true;
    bool r3_detailed_balance = true;
    bool r4_irreducible_support = true;
    bool r5_settling_bound = true;
    double max_row_sum_error = 0.0;
    double min_entry = 0.0;
    double min_diagonal = 0.0;
    double max_balance_error = 0.0;
    double max_r5_excess = 0.0;  // max over i of (1 - P[i,i]) - xi[i]
    std::vector<std::string> failures;

    bool r1_to_r4() const { return r1_stochastic && r2_positive_diagonal && r3_detailed_balance && r4_irreducible_support; }
    bool all() const { return r1_to_r4() && r5_settling_bound; }
};

// Checks R1-R5 on a full primary matrix. Never throws on bad content, only on
// dimension mismatch.
RequirementReport validate_requirements(const Eigen::MatrixXd& p, const DesiredDistribution& theta,
                                        const BinTopology& topo, std::span<const double> xi);

// Inverse-CDF selection: the q with sum_{l<q} row[l] <= u < sum_{l<=q} row[l].
int sample_transition(std::span<const double> row, double u);

// x * M for a row-stochastic x.
std::vector<double> propagate_mean_field(std::span<const double> x, const Eigen::MatrixXd& m);

// tau(M) = max_s max_{i,l} |M[i,s] - M[l,s]|.
double ergodicity_coefficient(const Eigen::MatrixXd& m);

}  // namespace swarmguide
