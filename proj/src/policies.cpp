#include "swarmguide/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace swarmguide {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void fill_diagonal_from_remainder(std::vector<double>& row, int i) {
    double off = 0.0;
    for (std::size_t l = 0; l < row.size(); ++l) {
        if (static_cast<int>(l) != i) off += row[l];
    }
    row[static_cast<std::size_t>(i)] = 1.0 - off;
}

void fill_diagonal_from_remainder(Eigen::MatrixXd& p) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        p(i, i) = 0.0;
        p(i, i) = 1.0 - p.row(i).sum();
    }
}

}  // namespace

ExpenseModel ExpenseModel::from_topology(const BinTopology& topo, double slope, double offset, double eps_e) {
    if (slope < 0.0 || offset < 0.0) throw std::invalid_argument("expense coefficients must be non-negative");
    if (!(eps_e > 0.0)) throw std::invalid_argument("eps_e must be > 0");
    const int n = topo.n_bins();
    ExpenseModel m;
    m.eps_e = eps_e;
    m.expense = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int l : topo.neighbors(i)) {
            if (l != i) m.expense(i, l) = slope * topo.hop_dist()(i, l) + offset;
        }
    }
    m.e_max = m.expense.maxCoeff();
    return m;
}

ExpenseModel ExpenseModel::from_config(const BinTopology& topo, const GuidanceConfig& cfg) {
    return from_topology(topo, cfg.expense_slope, cfg.expense_offset, cfg.eps_e);
}

ThetaBoost::ThetaBoost(const BinTopology& topo, const DesiredDistribution& theta, bool enabled) {
    if (!enabled) return;
    inverse_mass_.resize(static_cast<std::size_t>(topo.n_bins()));
    for (int i = 0; i < topo.n_bins(); ++i) {
        double mass = 0.0;
        for (int s : topo.neighbors(i)) {
            if (s != i) mass += theta[s];
        }
        inverse_mass_[static_cast<std::size_t>(i)] = 1.0 / mass;
    }
}

std::vector<double> ExpenseKernel::row(int i, std::span<const double> gains) const {
    std::vector<double> out(static_cast<std::size_t>(topo.n_bins()), 0.0);
    const double gi = gains[static_cast<std::size_t>(i)];
    for (int l : topo.neighbors(i)) {
        if (l == i) continue;
        const double g = std::max(gi, gains[static_cast<std::size_t>(l)]);
        out[static_cast<std::size_t>(l)] = boost(i, l) * eps_m * theta[l] * g * expense.factor(i, l);
    }
    fill_diagonal_from_remainder(out, i);
    return out;
}

Eigen::MatrixXd ExpenseKernel::matrix(std::span<const double> gains) const {
    const int n = topo.n_bins();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double gi = gains[static_cast<std::size_t>(i)];
        for (int l : topo.neighbors(i)) {
            if (l == i) continue;
            const double g = std::max(gi, gains[static_cast<std::size_t>(l)]);
            p(i, l) = boost(i, l) * eps_m * theta[l] * g * expense.factor(i, l);
        }
    }
    fill_diagonal_from_remainder(p);
    return p;
}

std::vector<double> p1_row(const LocalView& view, const ExpenseKernel& kernel, const GuidanceConfig& cfg) {
    std::vector<double> gains(static_cast<std::size_t>(kernel.topo.n_bins()), 0.0);
    for (std::size_t k = 0; k < view.neighbors.size(); ++k) {
        gains[static_cast<std::size_t>(view.neighbors[k])] =
            primary_gain(view.neighbor_densities[k], view.neighbor_targets[k], cfg);
    }
    gains[static_cast<std::size_t>(view.bin)] = primary_gain(view, cfg);
    return kernel.row(view.bin, gains);
}

Eigen::MatrixXd p1_matrix(const LocalField& field, const ExpenseKernel& kernel, const GuidanceConfig& cfg) {
    std::vector<double> gains(field.density.size());
    for (std::size_t i = 0; i < gains.size(); ++i) gains[i] = primary_gain(field.density[i], field.target[i], cfg);
    return kernel.matrix(gains);
}

double settling_gain(double density, double target, double beta) {
    const double d = target - density;
    return std::exp(beta * (d - std::abs(d)));
}

double p1_secondary_gain(const LocalView& view, const GuidanceConfig& cfg) {
    return settling_gain(view.local_density, view.local_target, cfg.beta);
}

std::vector<double> identity_row(int n_bins, int i) {
    std::vector<double> row(static_cast<std::size_t>(n_bins), 0.0);
    row[static_cast<std::size_t>(i)] = 1.0;
    return row;
}

std::vector<double> global_gains(std::span<const double> mu, const DesiredDistribution& theta, const GuidanceConfig& cfg) {
    if (static_cast<int>(mu.size()) != theta.size()) throw std::invalid_argument("mu/theta size mismatch");
    std::vector<double> gains(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double t = theta[static_cast<int>(i)];
        const double shaped = std::pow(std::abs(t - mu[i]) / t, cfg.alpha);
        gains[i] = std::clamp(shaped, cfg.eps_xi, 1.0);
    }
    return gains;
}

std::vector<double> gica_row(std::span<const double> mu, int i, const ExpenseKernel& kernel, const GuidanceConfig& cfg) {
    return kernel.row(i, global_gains(mu, kernel.theta, cfg));
}

Eigen::MatrixXd gica_matrix(std::span<const double> mu, const ExpenseKernel& kernel, const GuidanceConfig& cfg) {
    return kernel.matrix(global_gains(mu, kernel.theta, cfg));
}

double gica_secondary_gain(std::span<const double> mu, const DesiredDistribution& theta, int i, const GuidanceConfig& cfg) {
    return settling_gain(mu[static_cast<std::size_t>(i)], theta[i], cfg.beta);
}

Eigen::MatrixXd uniform_flux_caps(const BinTopology& topo, double cap) {
    if (!(cap > 0.0)) throw std::invalid_argument("flux cap must be > 0");
    const int n = topo.n_bins();
    Eigen::MatrixXd caps = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int l : topo.neighbors(i)) {
            if (l != i) caps(i, l) = cap;
        }
    }
    return caps;
}

FluxLimitedPolicy p2_matrix(std::span<const int> counts, std::span<const double> xi, const DesiredDistribution& theta,
                            const BinTopology& topo, const Eigen::MatrixXd& caps, const GuidanceConfig& cfg) {
    const int n = topo.n_bins();
    if (static_cast<int>(counts.size()) != n || static_cast<int>(xi.size()) != n || theta.size() != n ||
        caps.rows() != n || caps.cols() != n) {
        throw std::invalid_argument("p2_matrix: dimension mismatch");
    }
    const auto count = [&](int b) { return static_cast<double>(counts[static_cast<std::size_t>(b)]); };

    // Largest symmetric weight the one-way flux bounds allow. An empty bin puts no
    // bound on its outflow; with both ends empty the weight starts at 1 and is
    // left to the lowering passes.
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int l : topo.neighbors(i)) {
            if (l == i) continue;
            if (!(caps(i, l) > 0.0)) throw std::invalid_argument("flux cap missing for a communicating pair");
            const double from_i = count(i) > 0 ? caps(i, l) / (count(i) * theta[l]) : kInf;
            const double from_l = count(l) > 0 ? caps(l, i) / (count(l) * theta[i]) : kInf;
            const double bound = std::min(from_i, from_l);
            q(i, l) = std::isinf(bound) ? 1.0 : bound;
        }
    }

    // Outflow allowed from bin i. Capped strictly below one so the diagonal
    // stays positive when the gain saturates.
    const double margin = std::max(cfg.eps_xi, 1e-12);
    const auto target = [&](int i) { return std::min(xi[static_cast<std::size_t>(i)], 1.0 - margin); };
    const auto lowering = [&](const Eigen::MatrixXd& w) {
        std::vector<double> factor(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            double outflow = 0.0;
            for (int l : topo.neighbors(i)) {
                if (l != i) outflow += theta[l] * w(i, l);
            }
            factor[static_cast<std::size_t>(i)] = outflow > 0.0 ? std::min(target(i) / outflow, 1.0) : 1.0;
        }
        return factor;
    };

    const auto first = lowering(q);
    for (int i = 0; i < n; ++i) {
        for (int l : topo.neighbors(i)) {
            if (l != i) q(i, l) *= std::max(first[static_cast<std::size_t>(i)], first[static_cast<std::size_t>(l)]);
        }
    }
    const auto second = lowering(q);
    for (int i = 0; i < n; ++i) {
        for (int l : topo.neighbors(i)) {
            if (l != i) q(i, l) *= std::min(second[static_cast<std::size_t>(i)], second[static_cast<std::size_t>(l)]);
        }
    }

    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int l : topo.neighbors(i)) {
            if (l == i) continue;
            double v = theta[l] * q(i, l);
            // n[i] * P[i,l] <= c must hold in floating point, not just algebraically.
            while (count(i) * v > caps(i, l)) v = std::nextafter(v, 0.0);
            p(i, l) = v;
        }
    }
    fill_diagonal_from_remainder(p);
    return {std::move(p), std::move(q)};
}

std::vector<double> p2_row(std::span<const int> counts, std::span<const double> xi, const DesiredDistribution& theta,
                           const BinTopology& topo, const Eigen::MatrixXd& caps, const GuidanceConfig& cfg, int i) {
    if (i < 0 || i >= topo.n_bins()) throw std::out_of_range("bin index out of range");
    const auto policy = p2_matrix(counts, xi, theta, topo, caps, cfg);
    const Eigen::RowVectorXd r = policy.p.row(i);
    return {r.data(), r.data() + r.size()};
}

double quorum_gain(double density, double target, const GuidanceConfig& cfg) {
    return 1.0 / (1.0 + std::exp(cfg.gamma * (cfg.quorum - density / target)));
}

std::pair<std::vector<double>, double> quorum_secondary(const LocalView& view, const BinTopology& topo,
                                                        const GuidanceConfig& cfg) {
    std::vector<double> s(static_cast<std::size_t>(topo.n_bins()), 0.0);
    const auto nb = topo.neighbors(view.bin);
    const double share = 1.0 / static_cast<double>(nb.size());
    for (int l : nb) s[static_cast<std::size_t>(l)] = share;
    return {std::move(s), quorum_gain(view.local_density, view.local_target, cfg)};
}

}  // namespace swarmguide
