#include "pit/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pit {

namespace {

std::atomic<uint64_t> g_mesh_counter{1};

uint64_t next_mesh_id() { return g_mesh_counter.fetch_add(1); }

}  // namespace

Mesh make_point_cloud(Tensor2 points) {
    if (points.rows < 1) throw std::invalid_argument("mesh needs at least one point");
    if (!points.all_finite()) throw std::invalid_argument("mesh coordinates must be finite");
    Mesh m;
    m.dim = points.cols;
    m.points = std::move(points);
    m.id = next_mesh_id();
    return m;
}

Mesh make_grid_mesh(Tensor2 points, std::vector<int> shape) {
    long prod = 1;
    for (int s : shape) prod *= s;
    if (prod != points.rows) throw std::invalid_argument("grid shape product must equal point count");
    Mesh m = make_point_cloud(std::move(points));
    m.grid_shape = std::move(shape);
    return m;
}

Mesh periodic_grid_1d(int n) {
    if (n < 1) throw std::invalid_argument("periodic_grid_1d: n >= 1");
    Tensor2 pts(n, 1);
    for (int i = 0; i < n; ++i) pts.at(i, 0) = static_cast<double>(i) / n;
    return make_grid_mesh(std::move(pts), {n});
}

Mesh bounded_grid_2d(int nx, int ny) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("bounded_grid_2d: axis sizes >= 2");
    Tensor2 pts(nx * ny, 2);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const int r = i * ny + j;
            pts.at(r, 0) = static_cast<double>(i) / (nx - 1);
            pts.at(r, 1) = static_cast<double>(j) / (ny - 1);
        }
    return make_grid_mesh(std::move(pts), {nx, ny});
}

PairwiseDistances pairwise_sq_dist(const Mesh& source, const Mesh& query) {
    if (source.dim != query.dim) throw std::invalid_argument("pairwise_sq_dist: dimension mismatch");
    const int nq = query.size(), ns = source.size(), d = source.dim;
    PairwiseDistances out;
    out.sq = Tensor2(nq, ns);
    out.source_id = source.id;
    out.query_id = query.id;
    const bool self = source.id == query.id;
    for (int i = 0; i < nq; ++i) {
        const double* qi = &query.points.data[static_cast<size_t>(i) * d];
        for (int j = 0; j < ns; ++j) {
            if (self && i == j) {
                out.sq.at(i, j) = 0.0;
                continue;
            }
            const double* sj = &source.points.data[static_cast<size_t>(j) * d];
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = qi[k] - sj[k];
                s += diff * diff;
            }
            out.sq.at(i, j) = s;
        }
    }
    return out;
}

double quantile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile_linear: empty input");
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_linear: q must be in (0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * (values.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

ReceptiveField quantile_radii(const PairwiseDistances& d, double q) {
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_radii: q must be in (0, 1]");
    const int nq = d.sq.rows, ns = d.sq.cols;
    ReceptiveField rf;
    rf.quantile = q;
    rf.radius_sq.resize(nq);
    rf.neighbors.resize(nq);
    std::vector<double> row(ns);
    for (int i = 0; i < nq; ++i) {
        for (int j = 0; j < ns; ++j) row[j] = d.sq.at(i, j);
        const double r2 = quantile_linear(row, q);
        rf.radius_sq[i] = r2;
        auto& nb = rf.neighbors[i];
        int nearest = 0;
        for (int j = 0; j < ns; ++j) {
            if (d.sq.at(i, j) <= r2) nb.push_back(j);
            if (d.sq.at(i, j) < d.sq.at(i, nearest)) nearest = j;
        }
        if (nb.empty()) nb.push_back(nearest);
    }
    return rf;
}

Mesh pool_grid(const Mesh& m, const std::vector<int>& factor_per_axis) {
    if (!m.is_grid()) throw std::invalid_argument("pool_grid: mesh is not a structured grid");
    if (factor_per_axis.size() != m.grid_shape.size())
        throw std::invalid_argument("pool_grid: one factor per axis required");
    const int naxes = static_cast<int>(m.grid_shape.size());
    std::vector<int> out_shape(naxes);
    for (int a = 0; a < naxes; ++a) {
        if (factor_per_axis[a] < 1) throw std::invalid_argument("pool_grid: factors must be >= 1");
        out_shape[a] = (m.grid_shape[a] + factor_per_axis[a] - 1) / factor_per_axis[a];
    }
    long n_out = 1;
    for (int s : out_shape) n_out *= s;

    Tensor2 pts(static_cast<int>(n_out), m.dim);
    std::vector<int> idx(naxes, 0);
    for (long r = 0; r < n_out; ++r) {
        long flat = 0;
        for (int a = 0; a < naxes; ++a) flat = flat * m.grid_shape[a] + idx[a] * factor_per_axis[a];
        for (int k = 0; k < m.dim; ++k) pts.at(static_cast<int>(r), k) = m.points.at(static_cast<int>(flat), k);
        for (int a = naxes - 1; a >= 0; --a) {
            if (++idx[a] < out_shape[a]) break;
            idx[a] = 0;
        }
    }
    return make_grid_mesh(std::move(pts), out_shape);
}

Mesh farthest_point_sample(const Mesh& m, int n_points, uint64_t seed) {
    const int n = m.size();
    if (n_points < 1 || n_points > n)
        throw std::invalid_argument("farthest_point_sample: need 1 <= n_points <= mesh size");
    std::vector<int> chosen;
    chosen.reserve(n_points);
    std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());
    std::vector<char> taken(n, 0);
    int current = static_cast<int>(seed % static_cast<uint64_t>(n));
    chosen.push_back(current);
    taken[current] = 1;
    const int d = m.dim;
    for (int it = 1; it < n_points; ++it) {
        int best = -1;
        double best_d = -1.0;
        const double* c = &m.points.data[static_cast<size_t>(current) * d];
        for (int j = 0; j < n; ++j) {
            const double* pj = &m.points.data[static_cast<size_t>(j) * d];
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = c[k] - pj[k];
                s += diff * diff;
            }
            if (s < min_sq[j]) min_sq[j] = s;
            if (!taken[j] && min_sq[j] > best_d) {
                best_d = min_sq[j];
                best = j;
            }
        }
        current = best;
        chosen.push_back(current);
        taken[current] = 1;
    }
    Tensor2 pts(n_points, d);
    for (int i = 0; i < n_points; ++i)
        for (int k = 0; k < d; ++k) pts.at(i, k) = m.points.at(chosen[i], k);
    return make_point_cloud(std::move(pts));
}

}  // namespace pit
