#include "swarmguide/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace swarmguide {

namespace {

void require_positive(double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(key) + " must be > 0");
}

void require_non_negative(double v, const char* key) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(key) + " must be >= 0");
}

bool row_is_stochastic(std::span<const double> row) {
    double sum = 0.0;
    for (double v : row) {
        if (!(v >= 0.0)) return false;
        sum += v;
    }
    return std::abs(sum - 1.0) <= kStochasticTolerance;
}

}  // namespace

SwarmState::SwarmState(int n_bins, std::vector<int> assignment, std::int64_t step)
    : assignment_(std::move(assignment)), counts_(static_cast<std::size_t>(n_bins), 0), step_(step) {
    if (n_bins < 1) throw std::invalid_argument("swarm state needs at least one bin");
    if (step < 0) throw std::invalid_argument("step must be non-negative");
    for (int b : assignment_) {
        if (b < 0 || b >= n_bins) throw std::out_of_range("agent assigned to nonexistent bin " + std::to_string(b));
        ++counts_[static_cast<std::size_t>(b)];
    }
}

SwarmState SwarmState::all_in_bin(int n_bins, int n_agents, int bin) {
    if (n_agents < 0) throw std::invalid_argument("agent count must be non-negative");
    return SwarmState(n_bins, std::vector<int>(static_cast<std::size_t>(n_agents), bin));
}

SwarmState SwarmState::from_counts(std::span<const int> counts, std::int64_t step) {
    std::vector<int> assignment;
    for (std::size_t b = 0; b < counts.size(); ++b) {
        if (counts[b] < 0) throw std::invalid_argument("bin counts must be non-negative");
        assignment.insert(assignment.end(), static_cast<std::size_t>(counts[b]), static_cast<int>(b));
    }
    return SwarmState(static_cast<int>(counts.size()), std::move(assignment), step);
}

std::vector<double> SwarmState::distribution() const {
    std::vector<double> mu(counts_.size(), 0.0);
    if (assignment_.empty()) return mu;
    const double total = static_cast<double>(assignment_.size());
    for (std::size_t b = 0; b < counts_.size(); ++b) mu[b] = counts_[b] / total;
    return mu;
}

void GuidanceConfig::validate() const {
    require_positive(alpha, "alpha");
    require_positive(eps_xi, "eps_xi");
    if (eps_xi > 1.0) throw std::invalid_argument("eps_xi must be <= 1");
    if (!(eps_m > 0.0 && eps_m <= 1.0)) throw std::invalid_argument("eps_m must lie in (0,1]");
    require_non_negative(beta, "beta");
    require_non_negative(tau, "tau");
    require_positive(gamma, "gamma");
    if (!(quorum > 1.0) || !std::isfinite(quorum)) throw std::invalid_argument("quorum must be > 1");
    require_positive(flux_cap, "flux_cap");
    require_non_negative(expense_slope, "expense_slope");
    require_non_negative(expense_offset, "expense_offset");
    require_positive(eps_e, "eps_e");
}

double local_density(std::span<const int> counts, const BinTopology& topo, int i, bool* empty) {
    long long denom = 0;
    for (int l : topo.neighbors(i)) denom += counts[static_cast<std::size_t>(l)];
    if (empty) *empty = denom == 0;
    if (denom == 0) return 0.0;
    return static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(denom);
}

LocalField local_field(std::span<const int> counts, const BinTopology& topo, const DesiredDistribution& theta) {
    const int n = topo.n_bins();
    if (static_cast<int>(counts.size()) != n || theta.size() != n) {
        throw std::invalid_argument("counts/theta size does not match topology");
    }
    LocalField field;
    field.density.resize(static_cast<std::size_t>(n));
    field.target.resize(static_cast<std::size_t>(n));
    field.empty.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        bool empty = false;
        field.density[static_cast<std::size_t>(i)] = local_density(counts, topo, i, &empty);
        field.empty[static_cast<std::size_t>(i)] = empty;
        field.target[static_cast<std::size_t>(i)] = local_target(topo, theta, i);
    }
    return field;
}

LocalView LocalField::view(const BinTopology& topo, std::span<const int> counts, int bin) const {
    LocalView v;
    v.bin = bin;
    v.local_density = density[static_cast<std::size_t>(bin)];
    v.local_target = target[static_cast<std::size_t>(bin)];
    v.empty_neighborhood = empty[static_cast<std::size_t>(bin)] != 0;
    const auto nb = topo.neighbors(bin);
    v.neighbors.assign(nb.begin(), nb.end());
    v.neighbor_densities.reserve(nb.size());
    v.neighbor_targets.reserve(nb.size());
    v.neighbor_counts.reserve(nb.size());
    for (int l : nb) {
        v.neighbor_densities.push_back(density[static_cast<std::size_t>(l)]);
        v.neighbor_targets.push_back(target[static_cast<std::size_t>(l)]);
        v.neighbor_counts.push_back(counts[static_cast<std::size_t>(l)]);
    }
    return v;
}

LocalView local_view(const SwarmState& state, const BinTopology& topo, const DesiredDistribution& theta, int i) {
    if (i < 0 || i >= topo.n_bins()) throw std::out_of_range("bin index " + std::to_string(i) + " out of range");
    if (state.n_bins() != topo.n_bins() || theta.size() != topo.n_bins()) {
        throw std::invalid_argument("state/theta size does not match topology");
    }
    const auto counts = state.counts();
    LocalView v;
    v.bin = i;
    v.local_density = local_density(counts, topo, i, &v.empty_neighborhood);
    v.local_target = local_target(topo, theta, i);
    for (int l : topo.neighbors(i)) {
        v.neighbors.push_back(l);
        v.neighbor_densities.push_back(local_density(counts, topo, l));
        v.neighbor_targets.push_back(local_target(topo, theta, l));
        v.neighbor_counts.push_back(counts[static_cast<std::size_t>(l)]);
    }
    return v;
}

double primary_gain(double density, double target, const GuidanceConfig& cfg) {
    const double deviation = std::abs(target - density);
    if (deviation > target) return 1.0;
    const double shaped = std::pow(deviation / target, cfg.alpha);
    return shaped < cfg.eps_xi ? cfg.eps_xi : shaped;
}

double primary_gain(const LocalView& view, const GuidanceConfig& cfg) {
    return primary_gain(view.local_density, view.local_target, cfg);
}

std::vector<double> blend_rows(std::span<const double> primary, std::span<const double> secondary, double omega) {
    if (primary.size() != secondary.size()) throw std::invalid_argument("primary/secondary rows differ in length");
    std::vector<double> out(primary.size());
    for (std::size_t l = 0; l < primary.size(); ++l) out[l] = (1.0 - omega) * primary[l] + omega * secondary[l];
    return out;
}

PolicyRow compose_row(std::vector<double> primary, std::vector<double> secondary, double gain,
                      std::int64_t step, const GuidanceConfig& cfg) {
    if (!row_is_stochastic(primary)) throw std::invalid_argument("primary row is not stochastic");
    if (!row_is_stochastic(secondary)) throw std::invalid_argument("secondary row is not stochastic");
    if (!(gain >= 0.0 && gain <= 1.0)) throw std::invalid_argument("secondary gain must lie in [0,1]");
    if (step < 0) throw std::invalid_argument("step must be non-negative");
    const double omega = std::exp(-cfg.tau * static_cast<double>(step)) * gain;
    if (omega >= 1.0) throw std::invalid_argument("weighting factor omega reached 1 (need tau*step > 0 or gain < 1)");
    PolicyRow row;
    row.composed = blend_rows(primary, secondary, omega);
    row.primary = std::move(primary);
    row.secondary = std::move(secondary);
    row.omega = omega;
    return row;
}

RequirementReport validate_requirements(const Eigen::MatrixXd& p, const DesiredDistribution& theta,
                                        const BinTopology& topo, std::span<const double> xi) {
    const int n = topo.n_bins();
    if (p.rows() != n || p.cols() != n || theta.size() != n || static_cast<int>(xi.size()) != n) {
        throw std::invalid_argument("validate_requirements: dimension mismatch");
    }
    RequirementReport rep;
    rep.min_entry = p.minCoeff();
    rep.min_diagonal = p.diagonal().minCoeff();
    for (int i = 0; i < n; ++i) {
        rep.max_row_sum_error = std::max(rep.max_row_sum_error, std::abs(p.row(i).sum() - 1.0));
        const double excess = (1.0 - p(i, i)) - xi[static_cast<std::size_t>(i)];
        rep.max_r5_excess = i == 0 ? excess : std::max(rep.max_r5_excess, excess);
        for (int l = 0; l < n; ++l) {
            rep.max_balance_error = std::max(rep.max_balance_error, std::abs(theta[i] * p(i, l) - theta[l] * p(l, i)));
            if (l == i) continue;
            const bool positive = p(i, l) > 0.0;
            if (positive != topo.connected(i, l) || p(i, l) < 0.0) rep.r4_irreducible_support = false;
        }
    }
    rep.r1_stochastic = rep.min_entry >= 0.0 && rep.max_row_sum_error <= kStochasticTolerance;
    rep.r2_positive_diagonal = rep.min_diagonal > 0.0;
    rep.r3_detailed_balance = rep.max_balance_error <= kStochasticTolerance;
    rep.r5_settling_bound = rep.max_r5_excess <= kStochasticTolerance;
    if (!rep.r1_stochastic) rep.failures.emplace_back("R1: not row-stochastic");
    if (!rep.r2_positive_diagonal) rep.failures.emplace_back("R2: non-positive diagonal entry");
    if (!rep.r3_detailed_balance) rep.failures.emplace_back("R3: detailed balance violated");
    if (!rep.r4_irreducible_support) rep.failures.emplace_back("R4: support differs from communication graph");
    if (!rep.r5_settling_bound) rep.failures.emplace_back("R5: 1 - P[i,i] exceeds the primary gain");
    return rep;
}

int sample_transition(std::span<const double> row, double u) {
    if (row.empty()) throw std::invalid_argument("cannot sample from an empty row");
    double cumulative = 0.0;
    int last_positive = -1;
    for (std::size_t q = 0; q < row.size(); ++q) {
        if (row[q] <= 0.0) continue;
        cumulative += row[q];
        last_positive = static_cast<int>(q);
        if (u < cumulative) return last_positive;
    }
    // Rounding can leave the total a few ulps under u.
    if (last_positive < 0) throw std::invalid_argument("row has no positive entry");
    return last_positive;
}

std::vector<double> propagate_mean_field(std::span<const double> x, const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || static_cast<Eigen::Index>(x.size()) != m.rows()) {
        throw std::invalid_argument("propagate_mean_field: dimension mismatch");
    }
    const Eigen::Map<const Eigen::RowVectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::RowVectorXd out = xv * m;
    return {out.data(), out.data() + out.size()};
}

double ergodicity_coefficient(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return (m.colwise().maxCoeff() - m.colwise().minCoeff()).maxCoeff();
}

}  // namespace swarmguide
