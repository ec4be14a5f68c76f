#include "swarmguide/async.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "swarmguide/guidance.hpp"

namespace swarmguide {

ReadinessMask ReadinessMask::all_ready(int n_bins) {
    return ReadinessMask{std::vector<char>(static_cast<std::size_t>(n_bins), 1)};
}

ReadinessMask ReadinessMask::random_blocked(int n_bins, double fraction, std::mt19937_64& rng) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("blocking fraction must lie in [0,1]");
    auto mask = all_ready(n_bins);
    const auto blocked = static_cast<std::size_t>(std::lround(fraction * n_bins));
    if (blocked == 0) return mask;
    std::vector<int> bins(static_cast<std::size_t>(n_bins));
    std::iota(bins.begin(), bins.end(), 0);
    std::vector<int> chosen;
    chosen.reserve(blocked);
    std::sample(bins.begin(), bins.end(), std::back_inserter(chosen), static_cast<std::ptrdiff_t>(blocked), rng);
    for (int b : chosen) mask.ready[static_cast<std::size_t>(b)] = 0;
    return mask;
}

std::vector<double> async_primary_row(std::span<const double> base_row, int i, const ReadinessMask& mask,
                                      const BinTopology& topo) {
    const int n = topo.n_bins();
    if (static_cast<int>(base_row.size()) != n || mask.size() != n) throw std::invalid_argument("async row: dimension mismatch");
    std::vector<double> row(static_cast<std::size_t>(n), 0.0);

    bool has_ready_neighbor = false;
    for (int l : topo.neighbors(i)) {
        if (l != i && mask.is_ready(l)) has_ready_neighbor = true;
    }
    if (!mask.is_ready(i) || !has_ready_neighbor) {
        row[static_cast<std::size_t>(i)] = 1.0;
        return row;
    }
    double off = 0.0;
    for (int l : topo.neighbors(i)) {
        if (l == i || !mask.is_ready(l)) continue;
        row[static_cast<std::size_t>(l)] = base_row[static_cast<std::size_t>(l)];
        off += base_row[static_cast<std::size_t>(l)];
    }
    row[static_cast<std::size_t>(i)] = 1.0 - off;
    return row;
}

Eigen::MatrixXd async_primary_matrix(const Eigen::MatrixXd& base, const ReadinessMask& mask, const BinTopology& topo) {
    const int n = topo.n_bins();
    if (base.rows() != n || base.cols() != n) throw std::invalid_argument("async matrix: dimension mismatch");
    Eigen::MatrixXd out(n, n);
    std::vector<double> base_row(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < n; ++l) base_row[static_cast<std::size_t>(l)] = base(i, l);
        const auto row = async_primary_row(base_row, i, mask, topo);
        for (int l = 0; l < n; ++l) out(i, l) = row[static_cast<std::size_t>(l)];
    }
    return out;
}

AsyncReport verify_async_properties(const Eigen::MatrixXd& pbar, const DesiredDistribution& theta,
                                    const BinTopology& topo, const ReadinessMask& mask) {
    const int n = topo.n_bins();
    if (pbar.rows() != n || pbar.cols() != n || theta.size() != n || mask.size() != n) {
        throw std::invalid_argument("verify_async_properties: dimension mismatch");
    }
    AsyncReport rep;
    for (int i = 0; i < n; ++i) {
        rep.max_row_sum_error = std::max(rep.max_row_sum_error, std::abs(pbar.row(i).sum() - 1.0));
        if (!(pbar(i, i) > 0.0)) rep.nonnegative_positive_diagonal = false;
        for (int l = 0; l < n; ++l) {
            if (pbar(i, l) < 0.0) rep.nonnegative_positive_diagonal = false;
            if (l != i && mask.is_ready(i) != mask.is_ready(l) && pbar(i, l) != 0.0) rep.no_cross_boundary_flow = false;
        }
    }
    const Eigen::Map<const Eigen::RowVectorXd> th(theta.values().data(), n);
    rep.max_stationarity_error = ((th * pbar) - th).cwiseAbs().maxCoeff();
    rep.row_stochastic = rep.max_row_sum_error <= kStochasticTolerance;
    rep.theta_stationary = rep.max_stationarity_error <= kStochasticTolerance;
    return rep;
}

ConnectivityMonitor::ConnectivityMonitor(const BinTopology& topo, int window)
    : topo_(&topo), window_(window), edge_hits_(Eigen::MatrixXi::Zero(topo.n_bins(), topo.n_bins())) {
    if (window < 1) throw std::invalid_argument("connectivity window must be >= 1");
}

void ConnectivityMonitor::apply(const ReadinessMask& mask, int delta) {
    const int n = topo_->n_bins();
    for (int i = 0; i < n; ++i) {
        if (!mask.is_ready(i)) continue;
        for (int l : topo_->neighbors(i)) {
            if (l != i && mask.is_ready(l)) edge_hits_(i, l) += delta;
        }
    }
}

void ConnectivityMonitor::push(const ReadinessMask& mask) {
    history_.push_back(mask);
    apply(mask, +1);
    if (static_cast<int>(history_.size()) > window_) {
        apply(history_.front(), -1);
        history_.pop_front();
    }
    if (static_cast<int>(history_.size()) < window_) return;

    const int n = topo_->n_bins();
    BinMatrix graph = BinMatrix::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < n; ++l) {
            if (edge_hits_(i, l) > 0) graph(i, l) = 1;
        }
    }
    ++checked_;
    if (is_strongly_connected(graph)) ++connected_;
}

}  // namespace swarmguide
