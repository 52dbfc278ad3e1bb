#include "stochflow/noise.hpp"

#include "stochflow/errors.hpp"
#include "stochflow/parallel.hpp"
#include "stochflow/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

namespace stochflow {

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid::TimeGrid(double s, double t_end, std::size_t steps) : s_(s), t_end_(t_end), steps_(steps) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("time grid start must be finite and >= 0");
    if (!(t_end > s) || !std::isfinite(t_end)) throw DomainError("time grid needs t_end > s");
    if (steps == 0) throw DomainError("time grid needs at least one step");
}

double TimeGrid::point(std::size_t i) const {
    if (i == steps_) return t_end_;
    return s_ + (t_end_ - s_) * static_cast<double>(i) / static_cast<double>(steps_);
}

std::vector<double> TimeGrid::points() const {
    std::vector<double> out(steps_ + 1);
    for (std::size_t i = 0; i <= steps_; ++i) out[i] = point(i);
    return out;
}

TimeGrid TimeGrid::tail_from(std::size_t from_index) const {
    if (from_index >= steps_) throw DomainError("restart index must lie strictly before the last grid point");
    return TimeGrid(point(from_index), t_end_, steps_ - from_index);
}

// ---------------------------------------------------------------------------
// WienerPaths

WienerPaths::WienerPaths(TimeGrid grid, std::size_t count, std::uint64_t seed, std::vector<double> values,
                         std::size_t origin)
    : grid_(grid), count_(count), seed_(seed), values_(std::move(values)), origin_(origin) {
    if (values_.size() != count_ * (grid_.steps() + 1)) {
        throw DimensionMismatch("path storage does not match K x (N+1)");
    }
}

WienerPaths WienerPaths::restart_from(std::size_t from) const {
    const TimeGrid tail = grid_.tail_from(from);
    const std::size_t n_new = tail.steps() + 1;
    std::vector<double> out(count_ * n_new);
    for (std::size_t k = 0; k < count_; ++k) {
        const double base = value(k, from);
        for (std::size_t i = 0; i < n_new; ++i) out[k * n_new + i] = value(k, from + i) - base;
    }
    return WienerPaths(tail, count_, seed_, std::move(out), origin_ + from);
}

WienerPaths WienerPaths::first(std::size_t count) const {
    if (count > count_) throw PathShortfall("requested more paths than available");
    std::vector<double> out(values_.begin(),
                            values_.begin() + static_cast<std::ptrdiff_t>(count * (grid_.steps() + 1)));
    return WienerPaths(grid_, count, seed_, std::move(out), origin_);
}

namespace {

void fill_path(double horizon, std::size_t steps, std::uint64_t seed, std::size_t k, double* v) {
    // steps = odd * 2^levels: independent coarse increments, then Brownian-bridge midpoints.
    const int levels = std::countr_zero(steps);
    const std::size_t odd = steps >> levels;
    const std::size_t stride = std::size_t{1} << levels;
    const double coarse_sd = std::sqrt(horizon / static_cast<double>(odd));
    v[0] = 0.0;
    for (std::size_t i = 0; i < odd; ++i) {
        const double z = rng::standard_normal(seed, {rng::Stream::wiener, k, 0, static_cast<std::uint32_t>(i)});
        v[(i + 1) * stride] = v[i * stride] + coarse_sd * z;
    }
    for (int level = 1; level <= levels; ++level) {
        const std::size_t width = stride >> (level - 1);
        const std::size_t intervals = odd << (level - 1);
        const double length = horizon * static_cast<double>(width) / static_cast<double>(steps);
        const double sd = std::sqrt(length / 4.0);
        for (std::size_t j = 0; j < intervals; ++j) {
            const std::size_t a = j * width;
            const double z = rng::standard_normal(
                seed, {rng::Stream::wiener, k, static_cast<std::uint32_t>(level), static_cast<std::uint32_t>(j)});
            v[a + width / 2] = 0.5 * (v[a] + v[a + width]) + sd * z;
        }
    }
}

}  // namespace

WienerPaths sample_wiener(const TimeGrid& grid, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw DomainError("sample_wiener needs K >= 1");
    const std::size_t n1 = grid.steps() + 1;
    std::vector<double> values(count * n1);
    const double horizon = grid.end() - grid.start();
    const auto kcount = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static) num_threads(parallel::threads()) if (kcount > 1)
    for (std::int64_t k = 0; k < kcount; ++k) {
        fill_path(horizon, grid.steps(), seed, static_cast<std::size_t>(k), values.data() + k * n1);
    }
    return WienerPaths(grid, count, seed, std::move(values));
}

double terminal_increment(std::uint64_t seed, std::size_t k, double delta) {
    return std::sqrt(delta) * rng::standard_normal(seed, {rng::Stream::wiener, k, 0, 0});
}

// ---------------------------------------------------------------------------
// Binary dump

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw Error("truncated path dump");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void write_paths_binary(const WienerPaths& paths, std::ostream& out) {
    put_u64(out, paths.seed());
    put_u64(out, paths.grid().steps());
    put_u64(out, paths.count());
    put_u64(out, std::bit_cast<std::uint64_t>(paths.grid().dt()));
    for (double v : paths.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

WienerPaths read_paths_binary(std::istream& in, double start) {
    const std::uint64_t seed = get_u64(in);
    const std::uint64_t steps = get_u64(in);
    const std::uint64_t count = get_u64(in);
    const double dt = std::bit_cast<double>(get_u64(in));
    std::vector<double> values(count * (steps + 1));
    for (auto& v : values) v = std::bit_cast<double>(get_u64(in));
    TimeGrid grid(start, start + dt * static_cast<double>(steps), steps);
    return WienerPaths(grid, count, seed, std::move(values));
}

// ---------------------------------------------------------------------------
// Brownian sheet

std::size_t SpatialGrid::node_count() const {
    std::size_t n = 1;
    for (std::size_t a = 0; a < dimension; ++a) n *= points;
    return n;
}

std::vector<double> SpatialGrid::node(std::size_t flat) const {
    std::vector<double> xi(dimension);
    for (std::size_t a = 0; a < dimension; ++a) {
        xi[a] = spacing() * static_cast<double>(flat % points);
        flat /= points;
    }
    return xi;
}

SheetSample sample_brownian_sheet(const TimeGrid& tgrid, const SpatialGrid& sgrid, std::uint64_t seed) {
    if (!std::isfinite(sgrid.length) || !(sgrid.length > 0.0)) {
        throw DomainError("Brownian sheet needs a bounded domain [0, L)^d with 0 < L < infinity");
    }
    if (sgrid.dimension == 0 || sgrid.points < 2) throw DomainError("spatial grid needs d >= 1 and >= 2 points");
    const std::size_t nodes = sgrid.node_count();
    const std::size_t nt = tgrid.steps() + 1;
    std::vector<double> v(nt * nodes, 0.0);

    double cell_volume = tgrid.dt();
    for (std::size_t a = 0; a < sgrid.dimension; ++a) cell_volume *= sgrid.spacing();
    const double sd = std::sqrt(cell_volume);
    const std::size_t cells_per_axis = sgrid.points - 1;

    // Increment of cell (i, j) is stored at node (i+1, j+1); prefix sums along every axis follow.
    for (std::size_t node = 0; node < nodes; ++node) {
        std::size_t rest = node;
        std::size_t cell = 0;
        std::size_t scale = 1;
        bool on_boundary = false;
        for (std::size_t a = 0; a < sgrid.dimension; ++a) {
            const std::size_t idx = rest % sgrid.points;
            rest /= sgrid.points;
            if (idx == 0) on_boundary = true;
            else cell += (idx - 1) * scale;
            scale *= cells_per_axis;
        }
        if (on_boundary) continue;
        for (std::size_t i = 1; i < nt; ++i) {
            v[i * nodes + node] =
                sd * rng::standard_normal(seed, {rng::Stream::sheet, cell, 0, static_cast<std::uint32_t>(i - 1)});
        }
    }
    for (std::size_t i = 1; i < nt; ++i) {
        for (std::size_t node = 0; node < nodes; ++node) v[i * nodes + node] += v[(i - 1) * nodes + node];
    }
    std::size_t axis_stride = 1;
    for (std::size_t a = 0; a < sgrid.dimension; ++a) {
        for (std::size_t i = 0; i < nt; ++i) {
            double* slice = v.data() + i * nodes;
            for (std::size_t node = 0; node < nodes; ++node) {
                if ((node / axis_stride) % sgrid.points != 0) slice[node] += slice[node - axis_stride];
            }
        }
        axis_stride *= sgrid.points;
    }
    return SheetSample{tgrid, sgrid, seed, std::move(v)};
}

// ---------------------------------------------------------------------------
// Homogeneous field

FieldSample sample_homogeneous_field(std::span<const double> amplitudes,
                                     const std::vector<std::vector<double>>& frequencies, const TimeGrid& tgrid,
                                     const std::vector<std::vector<double>>& points, std::uint64_t seed) {
    if (amplitudes.size() != frequencies.size()) {
        throw DimensionMismatch("one frequency vector is needed per amplitude");
    }
    const std::size_t terms = amplitudes.size();
    const std::size_t nt = tgrid.steps() + 1;
    FieldSample out{tgrid, points.size(), std::vector<double>(nt * points.size(), 0.0)};
    if (terms == 0) return out;
    const WienerPaths paths = sample_wiener(tgrid, 2 * terms, seed);
    for (std::size_t p = 0; p < points.size(); ++p) {
        for (std::size_t k = 0; k < terms; ++k) {
            if (frequencies[k].size() != points[p].size()) throw DimensionMismatch("frequency/point dimension");
            double phase = 0.0;
            for (std::size_t a = 0; a < points[p].size(); ++a) phase += points[p][a] * frequencies[k][a];
            const double c = amplitudes[k] * std::cos(phase);
            const double s = amplitudes[k] * std::sin(phase);
            for (std::size_t i = 0; i < nt; ++i) {
                out.values[i * points.size() + p] += c * paths.value(2 * k, i) + s * paths.value(2 * k + 1, i);
            }
        }
    }
    return out;
}

double sup_statistic(std::span<const double> values, const std::function<double(std::size_t, double)>& transform) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < values.size(); ++k) best = std::max(best, transform(k + 1, values[k]));
    return best;
}

double jarque_bera(std::span<const double> sample) {
    const double n = static_cast<double>(sample.size());
    double mean = 0.0;
    for (double x : sample) mean += x;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : sample) {
        const double d = x - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    return n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
}

}  // namespace stochflow
