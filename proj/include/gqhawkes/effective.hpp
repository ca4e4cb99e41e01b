#pragma once

#include "gqhawkes/calibrate.hpp"
#include "gqhawkes/grids.hpp"
#include "gqhawkes/moments.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace gqh::effective {

/// R = sum_{n >= 1} phi^{*n}, summed in a piecewise-constant representation
/// on the segments between grid nodes (segment averages of the linear
/// kernel). Convolutions in that representation are exact and the
/// projection back onto segments preserves mass, so norms of R and phi
/// obey the geometric-series identity up to truncation.
struct Resolvent {
    std::size_t dim{0};
    grids::TimeGrid grid;
    /// Segment averages, [i * dim + k][segment].
    std::vector<std::vector<double>> averages;
    /// Values on the grid nodes from R = phi + R * phi.
    std::vector<std::vector<double>> values;
    /// Integrals of R and phi in the same representation.
    Eigen::MatrixXd norms;
    Eigen::MatrixXd phi_norms;
    /// Highest convolution power included.
    std::size_t order{0};
    /// Norm of the last term relative to the partial sum.
    double last_term{0.0};

    [[nodiscard]] const std::vector<double>& at(std::size_t i, std::size_t k) const { return values[i * dim + k]; }
};

/// Stops once the relative norm of the added term drops below `tolerance`.
/// Throws NumericalError when the spectral radius of the norm matrix is >= 1.
[[nodiscard]] Resolvent resolvent(const calibrate::HawkesKernel& phi, double tolerance = 1e-6,
                                  std::size_t max_order = 100000);

/// Effective L and diagonal K from the simplified equations (no Hawkes terms).
[[nodiscard]] calibrate::PriceKernels solve_effective_l_kd(const moments::MomentCurves& curves,
                                                           const calibrate::SolveOptions& options = {});

/// chi_NPP / (2 D2^2), per type.
[[nodiscard]] std::vector<moments::Surface> effective_k(const moments::MomentCurves& curves);

/// 3x3 median filter on the off-diagonal entries (the diagonal is left
/// untouched and excluded from every window).
[[nodiscard]] moments::Surface median_smooth_off_diagonal(const moments::Surface& surface);

struct ZumbachOptions {
    std::size_t max_iterations{500};
    double tolerance{1e-10};
    /// Leading eigenvectors tried as starting points.
    std::size_t starts{4};
};

/// Rank-one plus diagonal split of one quadratic kernel:
/// K(s, u) ~ k1 Z(s) Z(u) off the diagonal, K(t, t) = kd psi(t) + k1 Z(t)^2.
struct ZumbachDecomposition {
    double kd{0.0};
    double k1{0.0};
    /// Sampled on the grid points.
    std::vector<double> z;
    std::vector<double> psi;
    /// Indices of points where psi < 0.
    std::vector<std::size_t> negative_psi;
    /// Weighted off-diagonal objective at the optimum and its RMS form.
    double objective{0.0};
    double residual_rms{0.0};
    /// Largest |eigenvalue| of the residual over the fitted one (rank check).
    double next_eigen_ratio{0.0};
    double gradient_norm{0.0};
    std::size_t iterations{0};
    /// Objective after each iteration.
    std::vector<double> history;
};

/// Minimize sum_{n != m} w_n w_m (M_nm - c z_n z_m)^2 over (c, z), then
/// normalize so that sum w Z^2 = 1 and sum w psi = 1 with Z(t_1) >= 0.
/// `surface` is n x n on the grid points; `diagonal` holds K(t_n, t_n).
[[nodiscard]] ZumbachDecomposition zumbach_decompose(const moments::Surface& surface,
                                                     std::span<const double> diagonal,
                                                     std::span<const double> weights,
                                                     const ZumbachOptions& options = {});

/// Convenience overload for node-sampled kernels on `grid`: node 0 is
/// dropped and the weights are the quadrature weights up to `cutoff`.
[[nodiscard]] ZumbachDecomposition zumbach_decompose(const grids::TimeGrid& grid, const moments::Surface& surface,
                                                     std::span<const double> diagonal, double cutoff,
                                                     const ZumbachOptions& options = {});

/// Weighted off-diagonal objective of a candidate (c, z) for `surface`.
[[nodiscard]] double rank_one_objective(const moments::Surface& surface, std::span<const double> weights, double c,
                                        std::span<const double> z);

struct BareStrengths {
    double kd{0.0};
    double k1{0.0};
};

/// K_1 = (1 - ||phi||) K1_bar and K_d = (1 - ||phi||) Kd_bar.
[[nodiscard]] BareStrengths bare_from_effective(const ZumbachDecomposition& effective, double phi_norm);

/// L = L_bar - phi * L_bar, per type, on the price-grid nodes.
[[nodiscard]] std::vector<std::vector<double>> bare_l_from_effective(const calibrate::PriceKernels& effective,
                                                                     const calibrate::HawkesKernel& phi);

} // namespace gqh::effective
