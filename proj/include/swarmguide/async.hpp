#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "swarmguide/topology.hpp"

namespace swarmguide {

// Which bins can use their local information at this instant.
struct ReadinessMask {
    std::vector<char> ready;

    static ReadinessMask all_ready(int n_bins);
    // Blocks round(fraction * n_bins) bins chosen uniformly at random.
    static ReadinessMask random_blocked(int n_bins, double fraction, std::mt19937_64& rng);

    int size() const { return static_cast<int>(ready.size()); }
    bool is_ready(int i) const { return ready[static_cast<std::size_t>(i)] != 0; }
};

// Asynchronous primary row: unready bins and ready bins without a ready
// neighbour keep everyone in place; otherwise transitions into unready
// neighbours fold onto the diagonal.
std::vector<double> async_primary_row(std::span<const double> base_row, int i, const ReadinessMask& mask,
                                      const BinTopology& topo);
Eigen::MatrixXd async_primary_matrix(const Eigen::MatrixXd& base, const ReadinessMask& mask, const BinTopology& topo);

struct AsyncReport {
    bool row_stochastic = true;
    bool nonnegative_positive_diagonal = true;
    bool theta_stationary = true;
    bool no_cross_boundary_flow = true;
    double max_row_sum_error = 0.0;
    double max_stationarity_error = 0.0;

    bool stationarity_properties() const { return row_stochastic && nonnegative_positive_diagonal && theta_stationary; }
};

AsyncReport verify_async_properties(const Eigen::MatrixXd& pbar, const DesiredDistribution& theta,
                                    const BinTopology& topo, const ReadinessMask& mask);

// Tracks whether the union of the asynchronous matrices' graphs over the last
// `window` instants is strongly connected. Monitoring only; nothing enforces it.
class ConnectivityMonitor {
public:
    ConnectivityMonitor(const BinTopology& topo, int window);

    // Records one instant; once `window` instants exist, checks their union.
    void push(const ReadinessMask& mask);

    std::int64_t windows_checked() const { return checked_; }
    std::int64_t windows_connected() const { return connected_; }

private:
    void apply(const ReadinessMask& mask, int delta);

    const BinTopology* topo_;
    int window_;
    std::deque<ReadinessMask> history_;
    Eigen::MatrixXi edge_hits_;
    std::int64_t checked_ = 0;
    std::int64_t connected_ = 0;
};

}  // namespace swarmguide
