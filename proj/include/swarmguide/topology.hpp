#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace swarmguide {

using BinMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using HopMatrix = Eigen::MatrixXi;
using Edge = std::pair<int, int>;

// Bin environment: motion constraints A, communication connectivity C and
// shortest-path hop counts over the base graph. Immutable after construction.
//
// Invariants checked on construction: A and C symmetric with unit diagonal,
// A irreducible, C[i,l] = 1 exactly where A[i,l] = 1.
class BinTopology {
public:
    // Base graph given as undirected edges; motion is allowed between bins at
    // most `max_hops` base edges apart. C is set equal to A.
    static BinTopology from_edges(int n_bins, std::span<const Edge> edges, int max_hops = 1);

    // Explicit matrices. Validates every invariant, throws std::invalid_argument.
    BinTopology(BinMatrix motion, BinMatrix comm, HopMatrix hop_dist);

    int n_bins() const { return static_cast<int>(motion_.rows()); }
    const BinMatrix& motion() const { return motion_; }
    const BinMatrix& comm() const { return comm_; }
    const HopMatrix& hop_dist() const { return hop_dist_; }

    bool connected(int i, int l) const { return comm_(i, l) != 0; }

    // N(i): every l with C[i,l] = 1, ascending, always containing i.
    std::span<const int> neighbors(int i) const;

    // Grid metadata, zero for non-grid topologies.
    int grid_rows() const { return grid_rows_; }
    int grid_cols() const { return grid_cols_; }

private:
    friend BinTopology build_grid(int rows, int cols, int max_hops);

    BinMatrix motion_;
    BinMatrix comm_;
    HopMatrix hop_dist_;
    std::vector<std::vector<int>> neighbors_;
    int grid_rows_ = 0;
    int grid_cols_ = 0;
};

// Row-major rows x cols grid with 4-neighbour base adjacency.
BinTopology build_grid(int rows, int cols, int max_hops);

// Same as BinTopology::neighbors but throws std::out_of_range on a bad index.
std::vector<int> neighbor_set(const BinTopology& topo, int i);

// True if every node reaches every other along non-zero off-diagonal entries.
bool is_strongly_connected(const BinMatrix& adjacency);

// One "i l" line per undirected motion edge with i < l.
void write_edge_list(std::ostream& os, const BinTopology& topo);

// Strictly positive target distribution summing to one.
class DesiredDistribution {
public:
    explicit DesiredDistribution(std::vector<double> theta);

    // n i.i.d. uniform(0,1] draws, normalised.
    static DesiredDistribution random(int n_bins, std::mt19937_64& rng);
    static DesiredDistribution uniform(int n_bins);

    int size() const { return static_cast<int>(theta_.size()); }
    double operator[](int i) const { return theta_[static_cast<std::size_t>(i)]; }
    std::span<const double> values() const { return theta_; }

private:
    std::vector<double> theta_;
};

// Locally-desired density: theta[i] normalised over N(i).
double local_target(const BinTopology& topo, const DesiredDistribution& theta, int i);

// Numerical rank of B = C - X, diag(X) = 1/local target. Singular values
// below 1e-9 times the largest are treated as zero.
int b_matrix_rank(const BinTopology& topo, const DesiredDistribution& theta);

Eigen::MatrixXd b_matrix(const BinTopology& topo, const DesiredDistribution& theta);

}  // namespace swarmguide
