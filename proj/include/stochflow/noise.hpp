#pragma once

// Driving noises: Wiener families, the Brownian sheet and the trigonometric
// spatially homogeneous field. All generation is counter-based, so path k
// depends only on (seed, k) and dyadic grid refinements reproduce the
// coarse values exactly.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace stochflow {

/// Uniform grid s = t_0 < t_1 < ... < t_N = t_end.
class TimeGrid {
public:
    TimeGrid(double s, double t_end, std::size_t steps);

    double start() const noexcept { return s_; }
    double end() const noexcept { return t_end_; }
    std::size_t steps() const noexcept { return steps_; }
    double dt() const noexcept { return (t_end_ - s_) / static_cast<double>(steps_); }
    double point(std::size_t i) const;
    std::vector<double> points() const;

    /// Grid [t_from, t_end] with the same spacing.
    TimeGrid tail_from(std::size_t from_index) const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double s_;
    double t_end_;
    std::size_t steps_;
};

/// K discretized Brownian paths W_k(t) - W_k(s) on a shared grid, row-major K x (N+1).
/// Path indices are 0-based here; the noise operator B_k (k >= 1) is driven by path k-1.
class WienerPaths {
public:
    WienerPaths(TimeGrid grid, std::size_t count, std::uint64_t seed, std::vector<double> values,
                std::size_t origin = 0);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t count() const noexcept { return count_; }
    std::uint64_t seed() const noexcept { return seed_; }
    /// Offset of grid point 0 inside the grid the paths were originally sampled on.
    std::size_t origin() const noexcept { return origin_; }

    double value(std::size_t k, std::size_t i) const { return values_[k * (grid_.steps() + 1) + i]; }
    double increment(std::size_t k, std::size_t i) const { return value(k, i + 1) - value(k, i); }
    std::span<const double> path(std::size_t k) const {
        return {values_.data() + k * (grid_.steps() + 1), grid_.steps() + 1};
    }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Same noise restarted at grid index `from`: W(t) - W(t_from) on [t_from, t_end].
    WienerPaths restart_from(std::size_t from) const;

    /// First `count` paths.
    WienerPaths first(std::size_t count) const;

private:
    TimeGrid grid_;
    std::size_t count_;
    std::uint64_t seed_;
    std::vector<double> values_;
    std::size_t origin_;
};

WienerPaths sample_wiener(const TimeGrid& grid, std::size_t count, std::uint64_t seed);

/// W_k(s + delta) - W_k(s) for path k; equals sample_wiener(...).value(k, N) on every grid
/// over an interval of length delta whose step count is a power of two.
double terminal_increment(std::uint64_t seed, std::size_t k, double delta);

/// Little-endian dump: seed, N, K (u64), dt (f64 bits), then K x (N+1) doubles row-major.
void write_paths_binary(const WienerPaths& paths, std::ostream& out);
WienerPaths read_paths_binary(std::istream& in, double start = 0.0);

/// Regular spatial grid over [0, L)^d with `points` nodes per axis at xi = i L / points.
struct SpatialGrid {
    std::size_t dimension = 1;
    std::size_t points = 8;
    double length = 1.0;

    double spacing() const { return length / static_cast<double>(points); }
    std::size_t node_count() const;
    /// Coordinates of flat node index (axis 0 fastest).
    std::vector<double> node(std::size_t flat) const;
};

struct SheetSample {
    TimeGrid time;
    SpatialGrid space;
    std::uint64_t seed;
    /// (N+1) x node_count, row-major in time.
    std::vector<double> values;

    double at(std::size_t time_index, std::size_t node) const {
        return values[time_index * space.node_count() + node];
    }
};

/// Brownian sheet on the product grid with covariance (t ^ s) prod_i (xi_i ^ eta_i) at nodes.
SheetSample sample_brownian_sheet(const TimeGrid& tgrid, const SpatialGrid& sgrid, std::uint64_t seed);

struct FieldSample {
    TimeGrid time;
    std::size_t point_count;
    /// (N+1) x point_count.
    std::vector<double> values;

    double at(std::size_t time_index, std::size_t point) const { return values[time_index * point_count + point]; }
};

/// W(t, xi) = sum_k a_k (W_k(t) cos<xi, eta_k> + W~_k(t) sin<xi, eta_k>), W_k = path 2k, W~_k = path 2k+1.
FieldSample sample_homogeneous_field(std::span<const double> amplitudes,
                                     const std::vector<std::vector<double>>& frequencies, const TimeGrid& tgrid,
                                     const std::vector<std::vector<double>>& points, std::uint64_t seed);

/// max_k transform(k, values[k-1]) with 1-based k.
double sup_statistic(std::span<const double> values, const std::function<double(std::size_t, double)>& transform);

/// Jarque-Bera statistic of a sample; asymptotically chi-square with 2 degrees of freedom.
double jarque_bera(std::span<const double> sample);

}  // namespace stochflow
