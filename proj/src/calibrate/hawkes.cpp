#include "gqhawkes/calibrate.hpp"

#include "gqhawkes/error.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <cmath>

namespace gqh::calibrate {

double HawkesKernel::operator()(std::size_t i, std::size_t k, double t) const noexcept {
    return grids::interpolate(grid.nodes(), at(i, k), t);
}

HawkesKernel solve_hawkes(const grids::TimeGrid& grid, const std::vector<std::vector<double>>& chi_nn,
                          std::span<const double> lambda, const SolveOptions& options) {
    const std::size_t dim = lambda.size();
    const auto nodes = grid.nodes();
    const std::size_t m1 = nodes.size();
    if (chi_nn.size() != dim * dim) {
        throw DataError(fmt::format("solve_hawkes: {} covariance curves for dimension {}", chi_nn.size(), dim));
    }
    for (const auto& c : chi_nn) {
        if (c.size() != m1) {
            throw DataError("solve_hawkes: covariance curves must be sampled on the grid nodes");
        }
    }
    // chi^{kj} at signed lag x; at x == 0 the side is chosen by the caller
    auto chi = [&](std::size_t k, std::size_t j, double x) {
        return x >= 0.0 ? grids::interpolate(nodes, chi_nn[k * dim + j], x)
                        : grids::interpolate(nodes, chi_nn[j * dim + k], -x);
    };

    const auto n = static_cast<Eigen::Index>(dim * m1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < dim; ++k) {
        for (std::size_t j = 0; j < dim; ++j) {
            for (std::size_t m = 0; m < m1; ++m) {
                const auto row = static_cast<Eigen::Index>(k * m1 + m);
                for (std::size_t q = 0; q < m1; ++q) {
                    const auto col = static_cast<Eigen::Index>(j * m1 + q);
                    const double lag = nodes[q] - nodes[m];
                    double coef = 0.0;
                    if (m + 1 < m1) {
                        // segment [u_m, u_m+1], s -> u_m from above: lag approached from below
                        const double h = nodes[m + 1] - nodes[m];
                        const double v = m == q ? chi_nn[j * dim + k][0] : chi(k, j, lag);
                        coef += 0.5 * h * v;
                    }
                    if (m > 0) {
                        // segment [u_m-1, u_m], s -> u_m from below: lag approached from above
                        const double h = nodes[m] - nodes[m - 1];
                        const double v = m == q ? chi_nn[k * dim + j][0] : chi(k, j, lag);
                        coef += 0.5 * h * v;
                    }
                    if (k == j && m == q) {
                        coef += lambda[j];
                    }
                    a(row, col) = coef;
                }
            }
        }
    }

    Eigen::MatrixXd rhs(n, static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            for (std::size_t q = 0; q < m1; ++q) {
                rhs(static_cast<Eigen::Index>(j * m1 + q), static_cast<Eigen::Index>(i)) = chi_nn[i * dim + j][q];
            }
        }
    }

    const Eigen::MatrixXd at = a.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(at);
    HawkesKernel kernel;
    kernel.dim = dim;
    kernel.grid = grid;
    kernel.rcond = lu.rcond();
    Eigen::MatrixXd sol;
    if (options.ridge > 0.0) {
        const Eigen::MatrixXd normal = a * at + options.ridge * Eigen::MatrixXd::Identity(n, n);
        sol = normal.fullPivLu().solve(a * rhs);
    } else {
        if (!lu.isInvertible() || !(kernel.rcond > 1e-15)) {
            throw NumericalError(
                fmt::format("solve_hawkes: singular system (rank {} of {}, rcond {:.3e})", lu.rank(), n, kernel.rcond));
        }
        sol = lu.solve(rhs);
    }
    const double scale = rhs.norm();
    kernel.residual = (at * sol - rhs).norm() / (scale > 0.0 ? scale : 1.0);

    kernel.values.assign(dim * dim, std::vector<double>(m1, 0.0));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t k = 0; k < dim; ++k) {
            for (std::size_t m = 0; m < m1; ++m) {
                kernel.values[i * dim + k][m] = sol(static_cast<Eigen::Index>(k * m1 + m), static_cast<Eigen::Index>(i));
            }
        }
    }
    return kernel;
}

HawkesKernel solve_hawkes(const moments::MomentCurves& curves, const SolveOptions& options) {
    return solve_hawkes(curves.hawkes_grid, curves.nn, curves.lambda, options);
}

double kernel_norm(const grids::TimeGrid& grid, std::span<const double> node_values, double cutoff) {
    const auto w = grid.weights_within(0.0, cutoff);
    return grids::quad_integrate(node_values.subspan(1), w);
}

Eigen::MatrixXd norm_matrix(const HawkesKernel& phi, double cutoff) {
    const auto d = static_cast<Eigen::Index>(phi.dim);
    Eigen::MatrixXd norms(d, d);
    for (std::size_t i = 0; i < phi.dim; ++i) {
        for (std::size_t k = 0; k < phi.dim; ++k) {
            norms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = kernel_norm(phi.grid, phi.at(i, k), cutoff);
        }
    }
    return norms;
}

double spectral_radius(const Eigen::MatrixXd& norms) {
    if (norms.size() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(norms, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius(const HawkesKernel& phi, double cutoff) {
    return spectral_radius(norm_matrix(phi, cutoff));
}

} // namespace gqh::calibrate
