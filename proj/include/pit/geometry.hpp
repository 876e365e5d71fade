#pragma once

#include <cstdint>
#include <vector>

#include "pit/tensor.hpp"

namespace pit {

// A set of sampling points in R^d. Structured grids remember their per-axis
// sizes and enumerate points in row-major axis order; point clouds have an
// empty shape. Meshes are value types but carry an identity token assigned at
// construction so distance matrices can be cached per mesh pair; treat a mesh
// as immutable once built.
struct Mesh {
    int dim = 0;
    Tensor2 points;               // N x dim
    std::vector<int> grid_shape;  // empty for point clouds
    uint64_t id = 0;

    int size() const { return points.rows; }
    bool is_grid() const { return !grid_shape.empty(); }
};

Mesh make_point_cloud(Tensor2 points);
Mesh make_grid_mesh(Tensor2 points, std::vector<int> shape);

// Uniform periodic grid on [0,1): x_i = i/n (1D). Suits periodic operators.
Mesh periodic_grid_1d(int n);
// Uniform grid on [0,1]^2 including the boundary, shape nx x ny, row-major
// with the x axis slowest.
Mesh bounded_grid_2d(int nx, int ny);

// Squared Euclidean distances; rows index the query mesh, columns the source
// mesh: sq(i,j) = |query_i - source_j|^2.
struct PairwiseDistances {
    Tensor2 sq;
    uint64_t source_id = 0;
    uint64_t query_id = 0;
};

PairwiseDistances pairwise_sq_dist(const Mesh& source, const Mesh& query);

// Per-query-row receptive field: radius_sq[i] is the q-quantile (linear
// interpolation between order statistics) of row i of the distance matrix,
// and neighbors[i] lists every source k with D_ik <= radius_sq[i] (boundary
// inclusive). The nearest source point is always a member, so no field is
// ever empty.
struct ReceptiveField {
    double quantile = 1.0;
    std::vector<double> radius_sq;
    std::vector<std::vector<int>> neighbors;
};

ReceptiveField quantile_radii(const PairwiseDistances& d, double q);

// q-quantile of arbitrary values by linear interpolation between the closest
// order statistics (continuous in q).
double quantile_linear(std::vector<double> values, double q);

// Strided subsample of a structured grid: keeps indices 0, f, 2f, ... along
// each axis.
Mesh pool_grid(const Mesh& m, const std::vector<int>& factor_per_axis);

// Greedy farthest point sampling. The starting point is seed % N, so seed 0
// starts from index 0; ties in the max-min distance pick the lowest index.
Mesh farthest_point_sample(const Mesh& m, int n_points, uint64_t seed);

}  // namespace pit
