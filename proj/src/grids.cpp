#include "gqhawkes/grids.hpp"

#include "gqhawkes/error.hpp"
#include "gqhawkes/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gqh::grids {

void Bins::validate() const {
    if (lo.empty() || lo.size() != hi.size()) {
        throw DataError("bins: empty or mismatched bounds");
    }
    for (std::size_t b = 0; b < lo.size(); ++b) {
        if (!(lo[b] >= 0.0) || !(hi[b] > lo[b])) {
            throw DataError(fmt::format("bins: bin {} has zero or negative width", b));
        }
        if (b > 0 && lo[b] < hi[b - 1]) {
            throw DataError(fmt::format("bins: bin {} overlaps its predecessor", b));
        }
    }
}

std::vector<double> InterpolationMap::apply(std::span<const double> bin_values) const {
    std::vector<double> out(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        out[i] = weight[i][0] * bin_values[index[i][0]] + weight[i][1] * bin_values[index[i][1]];
    }
    return out;
}

InterpolationMap make_interpolation(std::span<const double> centers, std::span<const double> targets) {
    InterpolationMap map;
    map.index.reserve(targets.size());
    map.weight.reserve(targets.size());
    if (centers.empty()) {
        throw DataError("interpolation needs at least one center");
    }
    if (centers.size() == 1) {
        for (std::size_t i = 0; i < targets.size(); ++i) {
            map.index.push_back({0, 0});
            map.weight.push_back({1.0, 0.0});
        }
        return map;
    }
    for (const double t : targets) {
        // segment [k, k+1] containing t, clamped to the outermost segments
        auto it = std::upper_bound(centers.begin(), centers.end(), t);
        std::size_t k = it == centers.begin() ? 0 : static_cast<std::size_t>(it - centers.begin()) - 1;
        k = std::min(k, centers.size() - 2);
        const double a = centers[k];
        const double b = centers[k + 1];
        const double u = (t - a) / (b - a);
        map.index.push_back({k, k + 1});
        map.weight.push_back({1.0 - u, u});
    }
    return map;
}

DisjointIntervals to_disjoint_intervals(std::span<const double> points) {
    if (points.empty()) {
        throw DataError("to_disjoint_intervals: no points");
    }
    std::vector<double> gaps(points.size());
    double previous = 0.0;
    for (std::size_t n = 0; n < points.size(); ++n) {
        const double gap = points[n] - previous;
        if (gap == 0.0) {
            throw DataError(fmt::format("to_disjoint_intervals: duplicate point {}", points[n]));
        }
        if (!(gap > 0.0)) {
            throw DataError("to_disjoint_intervals: points must be positive and strictly increasing");
        }
        gaps[n] = gap;
        previous = points[n];
    }
    std::sort(gaps.begin(), gaps.end());

    DisjointIntervals out;
    out.boundaries.resize(gaps.size() + 1);
    out.boundaries[0] = 0.0;
    for (std::size_t n = 0; n < gaps.size(); ++n) {
        out.boundaries[n + 1] = out.boundaries[n] + gaps[n];
    }
    out.bins.lo.assign(out.boundaries.begin(), out.boundaries.end() - 1);
    out.bins.hi.assign(out.boundaries.begin() + 1, out.boundaries.end());
    std::vector<double> centers(out.bins.size());
    for (std::size_t b = 0; b < centers.size(); ++b) {
        centers[b] = out.bins.center(b);
    }
    out.to_points = make_interpolation(centers, points);
    return out;
}

TimeGrid TimeGrid::build(const GridSpec& spec) {
    if (!(spec.t_min > 0.0) || !(spec.t_switch > spec.t_min) || !(spec.t_max >= spec.t_switch)) {
        throw ConfigError(fmt::format("grid: need 0 < t_min < t_switch <= t_max, got {}, {}, {}",
                                      spec.t_min, spec.t_switch, spec.t_max));
    }
    if (spec.n_linear == 0) {
        throw ConfigError("grid: n_linear must be at least 1");
    }
    if (spec.n_log > 0 && !(spec.t_max > spec.t_switch)) {
        throw ConfigError("grid: log section needs t_max > t_switch");
    }
    std::vector<double> points;
    points.reserve(spec.n_linear + spec.n_log);
    if (spec.n_linear == 1) {
        points.push_back(spec.t_min);
    } else {
        const double step = (spec.t_switch - spec.t_min) / static_cast<double>(spec.n_linear - 1);
        for (std::size_t k = 0; k < spec.n_linear; ++k) {
            points.push_back(k + 1 == spec.n_linear ? spec.t_switch : spec.t_min + step * static_cast<double>(k));
        }
    }
    const double log_span = std::log(spec.t_max / spec.t_switch);
    for (std::size_t k = 1; k <= spec.n_log; ++k) {
        points.push_back(k == spec.n_log
                             ? spec.t_max
                             : spec.t_switch * std::exp(log_span * static_cast<double>(k) / static_cast<double>(spec.n_log)));
    }
    TimeGrid grid;
    grid.spec_ = spec;
    grid.points_ = std::move(points);
    grid.finish();
    return grid;
}

TimeGrid TimeGrid::from_points(std::vector<double> points) {
    if (points.empty()) {
        throw ConfigError("grid: no points");
    }
    for (std::size_t n = 0; n < points.size(); ++n) {
        if (!(points[n] > (n == 0 ? 0.0 : points[n - 1]))) {
            throw ConfigError("grid: points must be positive and strictly increasing");
        }
    }
    TimeGrid grid;
    grid.spec_ = {points.front(), points.back(), points.back(), points.size(), 0};
    grid.points_ = std::move(points);
    grid.finish();
    return grid;
}

void TimeGrid::finish() {
    const std::size_t n = points_.size();
    cell_bounds_.resize(n + 1);
    cell_bounds_[0] = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        cell_bounds_[k] = 0.5 * (points_[k - 1] + points_[k]);
    }
    cell_bounds_[n] = points_.back();
    weights_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        weights_[k] = cell_bounds_[k + 1] - cell_bounds_[k];
    }
    nodes_.resize(n + 1);
    nodes_[0] = 0.0;
    std::copy(points_.begin(), points_.end(), nodes_.begin() + 1);
    intervals_ = to_disjoint_intervals(points_);
    std::vector<double> centers(intervals_.bins.size());
    for (std::size_t b = 0; b < centers.size(); ++b) {
        centers[b] = intervals_.bins.center(b);
    }
    bins_to_nodes_ = make_interpolation(centers, nodes_);
}

std::vector<double> TimeGrid::weights_within(double lo, double hi) const {
    std::vector<double> w(points_.size(), 0.0);
    for (std::size_t k = 0; k < points_.size(); ++k) {
        const double a = std::max(lo, cell_bounds_[k]);
        const double b = std::min(hi, cell_bounds_[k + 1]);
        w[k] = b > a ? b - a : 0.0;
    }
    return w;
}

std::string TimeGrid::to_csv() const {
    std::string out = "t_n,w_n,lo,hi\n";
    for (std::size_t k = 0; k < points_.size(); ++k) {
        out += fmt::format("{},{},{},{}\n", io::format_double(points_[k]), io::format_double(weights_[k]),
                           io::format_double(intervals_.bins.lo[k]), io::format_double(intervals_.bins.hi[k]));
    }
    return out;
}

TimeGrid TimeGrid::from_csv(const std::string& text) {
    const auto table = io::parse_csv(text);
    const auto col = table.column("t_n");
    std::vector<double> points;
    points.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        points.push_back(io::parse_double(row.at(col), "t_n"));
    }
    return from_points(std::move(points));
}

std::string TimeGrid::hash() const {
    return io::sha256_hex(to_csv());
}

double quad_integrate(std::span<const double> samples, std::span<const double> weights) {
    if (samples.size() != weights.size()) {
        throw DataError(fmt::format("quad_integrate: {} samples for {} weights", samples.size(), weights.size()));
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        sum += samples[k] * weights[k];
    }
    return sum;
}

double quad_integrate(std::span<const double> samples, const TimeGrid& grid) {
    return quad_integrate(samples, grid.weights());
}

double quad_integrate(std::span<const double> samples, const TimeGrid& grid, double cutoff) {
    const auto w = grid.weights_within(0.0, cutoff);
    return quad_integrate(samples, w);
}

double c1_integrate(std::span<const double> nodes, std::span<const double> right_limits,
                    std::span<const double> left_limits) {
    if (right_limits.size() != nodes.size() || left_limits.size() != nodes.size()) {
        throw DataError("c1_integrate: one-sided limits must have one entry per node");
    }
    double sum = 0.0;
    for (std::size_t n = 0; n + 1 < nodes.size(); ++n) {
        sum += 0.5 * (nodes[n + 1] - nodes[n]) * (right_limits[n] + left_limits[n + 1]);
    }
    return sum;
}

double interpolate(std::span<const double> nodes, std::span<const double> values, double t) noexcept {
    if (nodes.empty() || t < nodes.front() || t > nodes.back()) {
        return 0.0;
    }
    auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
    if (it == nodes.end()) {
        return values.back();
    }
    const auto k = static_cast<std::size_t>(it - nodes.begin());
    const double a = nodes[k - 1];
    const double b = nodes[k];
    const double u = (t - a) / (b - a);
    return values[k - 1] + u * (values[k] - values[k - 1]);
}

double trapezoid(std::span<const double> nodes, std::span<const double> values) noexcept {
    double sum = 0.0;
    for (std::size_t n = 0; n + 1 < nodes.size(); ++n) {
        sum += 0.5 * (nodes[n + 1] - nodes[n]) * (values[n] + values[n + 1]);
    }
    return sum;
}

} // namespace gqh::grids
