#pragma once

#include "gqhawkes/grids.hpp"
#include "gqhawkes/moments.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace gqh::testing {

/// Stationary covariance density (self pair removed) of a 1-d Hawkes
/// process with kernel alpha beta exp(-beta t) and mean rate lambda.
inline double exp_hawkes_covariance(double lambda, double alpha, double beta, double t) {
    return lambda * alpha * beta * (2.0 - alpha) / (2.0 * (1.0 - alpha)) * std::exp(-beta * (1.0 - alpha) * std::abs(t));
}

inline std::vector<double> sample_nodes(const grids::TimeGrid& grid, const std::function<double(double)>& f) {
    std::vector<double> out;
    for (const double t : grid.nodes()) {
        out.push_back(f(t));
    }
    return out;
}

/// sqrt(sum w (a - b)^2 / sum w b^2) over the grid points; node vectors.
inline double grid_l2_error(const grids::TimeGrid& grid, const std::vector<double>& estimate,
                            const std::vector<double>& truth) {
    const auto w = grid.weights();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double d = estimate[n + 1] - truth[n + 1];
        num += w[n] * d * d;
        den += w[n] * truth[n + 1] * truth[n + 1];
    }
    return std::sqrt(num / den);
}

/// Curves container with every moment zero on the given grids.
inline moments::MomentCurves zero_curves(std::size_t dim, const grids::TimeGrid& hawkes, const grids::TimeGrid& price) {
    moments::MomentCurves c;
    c.dim = dim;
    c.duration = 1.0;
    c.lambda.assign(dim, 1.0);
    c.delta = {0.0, 0.0, 1.0, 0.0, 1.0};
    c.hawkes_grid = hawkes;
    c.price_grid = price;
    const std::size_t nh = hawkes.nodes().size();
    const std::size_t np = price.nodes().size();
    c.nn.assign(dim * dim, std::vector<double>(nh, 0.0));
    c.np.assign(dim, std::vector<double>(np, 0.0));
    c.np2.assign(dim, std::vector<double>(np, 0.0));
    c.npp.assign(dim, moments::Surface(np, np));
    c.p2p2.assign(np, 0.0);
    return c;
}

} // namespace gqh::testing
