#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "swarmguide/guidance.hpp"
#include "swarmguide/topology.hpp"

namespace swarmguide {

// Travel expense E[i,l] = slope * hops(i,l) + offset between communicating bins,
// zero on the diagonal and between bins that cannot reach each other.
struct ExpenseModel {
    Eigen::MatrixXd expense;
    double e_max = 0.0;
    double eps_e = 0.1;

    static ExpenseModel from_topology(const BinTopology& topo, double slope, double offset, double eps_e);
    static ExpenseModel from_config(const BinTopology& topo, const GuidanceConfig& cfg);

    // f(E[i,l]) = 1 - E[i,l] / (e_max + eps_e), in (0,1].
    double factor(int i, int l) const { return 1.0 - expense(i, l) / (e_max + eps_e); }
};

// Convergence-rate boost eps_theta(i,l) = min(1/m(i), 1/m(l)) where m(i) is the
// desired mass of N(i) without i. Disabled instances return 1 everywhere.
class ThetaBoost {
public:
    ThetaBoost() = default;
    ThetaBoost(const BinTopology& topo, const DesiredDistribution& theta, bool enabled = true);

    double operator()(int i, int l) const {
        if (inverse_mass_.empty()) return 1.0;
        return std::min(inverse_mass_[static_cast<std::size_t>(i)], inverse_mass_[static_cast<std::size_t>(l)]);
    }
    bool enabled() const { return !inverse_mass_.empty(); }

private:
    std::vector<double> inverse_mass_;
};

// Everything the expense-minimising kernel needs besides the gains.
struct ExpenseKernel {
    const BinTopology& topo;
    const DesiredDistribution& theta;
    const ExpenseModel& expense;
    const ThetaBoost& boost;
    double eps_m = 1.0;

    // Row i from gains indexed by bin. Only gains of N(i) are read.
    std::vector<double> row(int i, std::span<const double> gains) const;
    Eigen::MatrixXd matrix(std::span<const double> gains) const;
};

// Travel-expense-minimising primary row of the view's bin, built from the
// view's own gain and those of its neighbours.
std::vector<double> p1_row(const LocalView& view, const ExpenseKernel& kernel, const GuidanceConfig& cfg);
Eigen::MatrixXd p1_matrix(const LocalField& field, const ExpenseKernel& kernel, const GuidanceConfig& cfg);

// exp(beta (target - density)) / exp(beta |target - density|), evaluated in a
// single exponent so large beta cannot overflow.
double settling_gain(double density, double target, double beta);
double p1_secondary_gain(const LocalView& view, const GuidanceConfig& cfg);

std::vector<double> identity_row(int n_bins, int i);

// Primary gains computed from the global distribution instead of local densities.
std::vector<double> global_gains(std::span<const double> mu, const DesiredDistribution& theta, const GuidanceConfig& cfg);
std::vector<double> gica_row(std::span<const double> mu, int i, const ExpenseKernel& kernel, const GuidanceConfig& cfg);
Eigen::MatrixXd gica_matrix(std::span<const double> mu, const ExpenseKernel& kernel, const GuidanceConfig& cfg);
double gica_secondary_gain(std::span<const double> mu, const DesiredDistribution& theta, int i, const GuidanceConfig& cfg);

Eigen::MatrixXd uniform_flux_caps(const BinTopology& topo, double cap);

struct FluxLimitedPolicy {
    Eigen::MatrixXd p;  // primary matrix
    Eigen::MatrixXd q;  // symmetric weights, p[i,l] = theta[l] q[i,l]
};

// Flux-bounded convergence-rate policy for every bin at once. The two lowering
// passes need the lowering factors of neighbouring bins, so rows are not
// independent; `p2_row` extracts one row of this matrix.
FluxLimitedPolicy p2_matrix(std::span<const int> counts, std::span<const double> xi, const DesiredDistribution& theta,
                            const BinTopology& topo, const Eigen::MatrixXd& caps, const GuidanceConfig& cfg);
std::vector<double> p2_row(std::span<const int> counts, std::span<const double> xi, const DesiredDistribution& theta,
                           const BinTopology& topo, const Eigen::MatrixXd& caps, const GuidanceConfig& cfg, int i);

// Quorum secondary: uniform spread over N(i) and logistic gain in density/target.
double quorum_gain(double density, double target, const GuidanceConfig& cfg);
std::pair<std::vector<double>, double> quorum_secondary(const LocalView& view, const BinTopology& topo,
                                                        const GuidanceConfig& cfg);

}  // namespace swarmguide
