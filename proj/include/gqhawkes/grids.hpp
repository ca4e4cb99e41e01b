#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gqh::grids {

/// Disjoint, sorted lag bins. A lag x falls in bin b when lo[b] <= x < hi[b];
/// a bin starting at 0 also holds lag 0 exactly.
struct Bins {
    std::vector<double> lo;
    std::vector<double> hi;

    [[nodiscard]] std::size_t size() const noexcept { return lo.size(); }
    [[nodiscard]] double width(std::size_t b) const noexcept { return hi[b] - lo[b]; }
    [[nodiscard]] double center(std::size_t b) const noexcept { return 0.5 * (lo[b] + hi[b]); }
    [[nodiscard]] double max_lag() const noexcept { return hi.empty() ? 0.0 : hi.back(); }

    /// Throws DataError unless bins are non-empty, positive width, sorted
    /// and pairwise disjoint.
    void validate() const;
};

/// Linear interpolation from bin centers onto an arbitrary set of points.
/// Each target is a two-term combination of bin values.
struct InterpolationMap {
    std::vector<std::array<std::size_t, 2>> index;
    std::vector<std::array<double, 2>> weight;

    [[nodiscard]] std::size_t size() const noexcept { return index.size(); }
    [[nodiscard]] std::vector<double> apply(std::span<const double> bin_values) const;
};

/// Build the interpolation map from `centers` (strictly increasing, >= 2)
/// onto `targets`. Targets outside the center range are linearly
/// extrapolated from the two nearest centers.
[[nodiscard]] InterpolationMap make_interpolation(std::span<const double> centers,
                                                  std::span<const double> targets);

struct DisjointIntervals {
    /// Boundaries b_0 = 0 < b_1 < ... ; bin n is [b_n, b_{n+1}).
    std::vector<double> boundaries;
    Bins bins;
    /// Maps per-bin estimates back onto the original points.
    InterpolationMap to_points;
};

/// Turn a quadrature point set into disjoint estimation intervals: the gaps
/// between consecutive points (the first measured from 0) are sorted
/// ascending and accumulated into interval boundaries.
[[nodiscard]] DisjointIntervals to_disjoint_intervals(std::span<const double> points);

struct GridSpec {
    double t_min{0.0};
    double t_switch{0.0};
    double t_max{0.0};
    std::size_t n_linear{0};
    std::size_t n_log{0};

    /// [0.002 s, 200 s], 10 linear points up to 0.1 s, then 30 log points.
    [[nodiscard]] static GridSpec hawkes_default() noexcept { return {0.002, 0.1, 200.0, 10, 30}; }
    /// [0.1 s, 1000 s], 8 linear points up to 2 s, then 32 log points.
    [[nodiscard]] static GridSpec price_default() noexcept { return {0.1, 2.0, 1000.0, 8, 32}; }

    /// Same layout with every count multiplied by `factor`.
    [[nodiscard]] GridSpec refined(std::size_t factor) const noexcept {
        return {t_min, t_switch, t_max, n_linear * factor, n_log * factor};
    }
};

/// Quadrature points with midpoint-rule weights and the matching disjoint
/// estimation bins.
///
/// Quadrature cells split (0, t_max] at the midpoints between consecutive
/// points, so the weights sum to t_max. `nodes()` prepends t = 0 to the
/// points: kernel and covariance curves are stored on those nodes and
/// linearly interpolated between them (zero beyond the last node).
class TimeGrid {
public:
    TimeGrid() = default;

    [[nodiscard]] static TimeGrid build(const GridSpec& spec);
    /// Grid from explicit points (strictly increasing, > 0).
    [[nodiscard]] static TimeGrid from_points(std::vector<double> points);

    [[nodiscard]] std::span<const double> points() const noexcept { return points_; }
    [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
    [[nodiscard]] std::span<const double> nodes() const noexcept { return nodes_; }
    [[nodiscard]] const Bins& bins() const noexcept { return intervals_.bins; }
    [[nodiscard]] const DisjointIntervals& intervals() const noexcept { return intervals_; }
    [[nodiscard]] const GridSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] double t_max() const noexcept { return points_.empty() ? 0.0 : points_.back(); }

    /// Weights of the quadrature cells clipped to [lo, hi]. Used for
    /// cut-off norms and for integrals over sub-ranges.
    [[nodiscard]] std::vector<double> weights_within(double lo, double hi) const;

    /// Map from per-bin estimates onto nodes() (node 0 is extrapolated).
    [[nodiscard]] const InterpolationMap& bins_to_nodes() const noexcept { return bins_to_nodes_; }

    /// CSV with columns t_n,w_n,lo,hi (one row per point, lo/hi being the
    /// estimation bin of the same rank).
    [[nodiscard]] std::string to_csv() const;
    [[nodiscard]] static TimeGrid from_csv(const std::string& text);
    /// Hex SHA-256 of to_csv().
    [[nodiscard]] std::string hash() const;

private:
    GridSpec spec_{};
    std::vector<double> points_;
    std::vector<double> weights_;
    std::vector<double> cell_bounds_;
    std::vector<double> nodes_;
    DisjointIntervals intervals_;
    InterpolationMap bins_to_nodes_;

    void finish();
};

/// Sum of f(t_n) w_n.
[[nodiscard]] double quad_integrate(std::span<const double> samples, std::span<const double> weights);
[[nodiscard]] double quad_integrate(std::span<const double> samples, const TimeGrid& grid);
/// Integral restricted to (0, cutoff].
[[nodiscard]] double quad_integrate(std::span<const double> samples, const TimeGrid& grid, double cutoff);

/// Piecewise-C1 rule: sum over segments of (t_{n+1} - t_n)/2 * [f(t_n+) + f(t_{n+1}-)].
/// `right_limits[n]` holds f(t_n+), `left_limits[n]` holds f(t_n-); both
/// have one entry per node (right_limits.back() and left_limits.front()
/// are unused).
[[nodiscard]] double c1_integrate(std::span<const double> nodes,
                                  std::span<const double> right_limits,
                                  std::span<const double> left_limits);

/// Linear interpolation of node values at t; zero outside [nodes.front(), nodes.back()].
[[nodiscard]] double interpolate(std::span<const double> nodes, std::span<const double> values, double t) noexcept;

/// Trapezoid integral of node values (exact for the piecewise-linear interpolant).
[[nodiscard]] double trapezoid(std::span<const double> nodes, std::span<const double> values) noexcept;

} // namespace gqh::grids
