#include "swarmguide/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>

namespace swarmguide {

namespace {

constexpr double kRankTolerance = 1e-9;

std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj, int source) {
    std::vector<int> dist(adj.size(), -1);
    std::queue<int> frontier;
    dist[static_cast<std::size_t>(source)] = 0;
    frontier.push(source);
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (int v : adj[static_cast<std::size_t>(u)]) {
            if (dist[static_cast<std::size_t>(v)] < 0) {
                dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                frontier.push(v);
            }
        }
    }
    return dist;
}

bool reaches_all(const BinMatrix& m, bool transpose) {
    const auto n = m.rows();
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index visited = 1;
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (Eigen::Index v = 0; v < n; ++v) {
            const bool edge = transpose ? m(v, u) != 0 : m(u, v) != 0;
            if (edge && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++visited;
                stack.push_back(v);
            }
        }
    }
    return visited == n;
}

std::string at(Eigen::Index i, Eigen::Index l) {
    return "[" + std::to_string(i) + "," + std::to_string(l) + "]";
}

}  // namespace

bool is_strongly_connected(const BinMatrix& adjacency) {
    if (adjacency.rows() == 0) return false;
    return reaches_all(adjacency, false) && reaches_all(adjacency, true);
}

BinTopology::BinTopology(BinMatrix motion, BinMatrix comm, HopMatrix hop_dist)
    : motion_(std::move(motion)), comm_(std::move(comm)), hop_dist_(std::move(hop_dist)) {
    const auto n = motion_.rows();
    if (n < 2) throw std::invalid_argument("topology needs at least 2 bins");
    if (motion_.cols() != n || comm_.rows() != n || comm_.cols() != n || hop_dist_.rows() != n ||
        hop_dist_.cols() != n) {
        throw std::invalid_argument("topology matrices must all be n_bins x n_bins");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (motion_(i, i) != 1) throw std::invalid_argument("motion matrix needs A" + at(i, i) + " = 1");
        if (comm_(i, i) != 1) throw std::invalid_argument("comm matrix needs C" + at(i, i) + " = 1");
        if (hop_dist_(i, i) != 0) throw std::invalid_argument("hop distance must be 0 on the diagonal");
        for (Eigen::Index l = 0; l < n; ++l) {
            if (motion_(i, l) > 1 || comm_(i, l) > 1) throw std::invalid_argument("A and C must be binary");
            if (motion_(i, l) != motion_(l, i)) throw std::invalid_argument("A not symmetric at " + at(i, l));
            if (comm_(i, l) != comm_(l, i)) throw std::invalid_argument("C not symmetric at " + at(i, l));
            if (comm_(i, l) != motion_(i, l)) {
                throw std::invalid_argument("C must equal A (C" + at(i, l) + " differs)");
            }
            if (hop_dist_(i, l) != hop_dist_(l, i) || hop_dist_(i, l) < 0) {
                throw std::invalid_argument("hop distance invalid at " + at(i, l));
            }
        }
    }
    if (!is_strongly_connected(motion_)) throw std::invalid_argument("motion matrix is not irreducible");

    neighbors_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index l = 0; l < n; ++l) {
            if (comm_(i, l)) neighbors_[static_cast<std::size_t>(i)].push_back(static_cast<int>(l));
        }
    }
}

BinTopology BinTopology::from_edges(int n_bins, std::span<const Edge> edges, int max_hops) {
    if (n_bins < 2) throw std::invalid_argument("topology needs at least 2 bins");
    if (max_hops < 1) throw std::invalid_argument("max_hops must be >= 1");
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_bins));
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= n_bins || b >= n_bins || a == b) {
            throw std::invalid_argument("bad edge (" + std::to_string(a) + "," + std::to_string(b) + ")");
        }
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    }

    HopMatrix hops(n_bins, n_bins);
    BinMatrix motion = BinMatrix::Zero(n_bins, n_bins);
    for (int s = 0; s < n_bins; ++s) {
        const auto dist = bfs_distances(adj, s);
        for (int t = 0; t < n_bins; ++t) {
            const int d = dist[static_cast<std::size_t>(t)];
            if (d < 0) throw std::invalid_argument("base graph is not connected");
            hops(s, t) = d;
            motion(s, t) = d <= max_hops ? 1 : 0;
        }
    }
    BinMatrix comm = motion;
    return BinTopology(std::move(motion), std::move(comm), std::move(hops));
}

std::span<const int> BinTopology::neighbors(int i) const {
    return neighbors_[static_cast<std::size_t>(i)];
}

BinTopology build_grid(int rows, int cols, int max_hops) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("grid dimensions must be positive");
    if (rows * cols < 2) throw std::invalid_argument("grid must contain at least 2 bins");
    std::vector<Edge> edges;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int id = r * cols + c;
            if (c + 1 < cols) edges.emplace_back(id, id + 1);
            if (r + 1 < rows) edges.emplace_back(id, id + cols);
        }
    }
    auto topo = BinTopology::from_edges(rows * cols, edges, max_hops);
    topo.grid_rows_ = rows;
    topo.grid_cols_ = cols;
    return topo;
}

std::vector<int> neighbor_set(const BinTopology& topo, int i) {
    if (i < 0 || i >= topo.n_bins()) throw std::out_of_range("bin index " + std::to_string(i) + " out of range");
    const auto nb = topo.neighbors(i);
    return {nb.begin(), nb.end()};
}

void write_edge_list(std::ostream& os, const BinTopology& topo) {
    for (int i = 0; i < topo.n_bins(); ++i) {
        for (int l = i + 1; l < topo.n_bins(); ++l) {
            if (topo.motion()(i, l)) os << i << ' ' << l << '\n';
        }
    }
}

DesiredDistribution::DesiredDistribution(std::vector<double> theta) : theta_(std::move(theta)) {
    if (theta_.size() < 2) throw std::invalid_argument("desired distribution needs at least 2 entries");
    double sum = 0.0;
    for (double v : theta_) {
        if (!(v > 0.0) || v > 1.0) throw std::invalid_argument("desired distribution entries must lie in (0,1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("desired distribution must sum to 1");
}

DesiredDistribution DesiredDistribution::random(int n_bins, std::mt19937_64& rng) {
    if (n_bins < 2) throw std::invalid_argument("desired distribution needs at least 2 entries");
    // uniform_real_distribution draws [0,1); 1 - u lies in (0,1].
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(n_bins));
    for (auto& x : v) x = 1.0 - unif(rng);
    const double sum = std::accumulate(v.begin(), v.end(), 0.0);
    for (auto& x : v) x /= sum;
    return DesiredDistribution(std::move(v));
}

DesiredDistribution DesiredDistribution::uniform(int n_bins) {
    return DesiredDistribution(std::vector<double>(static_cast<std::size_t>(n_bins), 1.0 / n_bins));
}

double local_target(const BinTopology& topo, const DesiredDistribution& theta, int i) {
    double denom = 0.0;
    for (int l : topo.neighbors(i)) denom += theta[l];
    return theta[i] / denom;
}

Eigen::MatrixXd b_matrix(const BinTopology& topo, const DesiredDistribution& theta) {
    const int n = topo.n_bins();
    if (theta.size() != n) throw std::invalid_argument("theta size does not match topology");
    Eigen::MatrixXd b = topo.comm().cast<double>();
    for (int i = 0; i < n; ++i) b(i, i) -= 1.0 / local_target(topo, theta, i);
    return b;
}

int b_matrix_rank(const BinTopology& topo, const DesiredDistribution& theta) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(b_matrix(topo, theta));
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double cutoff = kRankTolerance * sv(0);
    return static_cast<int>((sv.array() > cutoff).count());
}

}  // namespace swarmguide
