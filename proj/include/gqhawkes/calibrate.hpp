#pragma once

#include "gqhawkes/grids.hpp"
#include "gqhawkes/moments.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace gqh::calibrate {

/// Hawkes kernel phi^{ik} sampled on the nodes of a grid (t = 0 and the
/// grid points), linear in between and zero beyond the last node.
struct HawkesKernel {
    std::size_t dim{0};
    grids::TimeGrid grid;
    /// values[i * dim + k][m] = phi^{ik}(node m).
    std::vector<std::vector<double>> values;
    /// Reciprocal condition estimate of the discretized system.
    double rcond{0.0};
    /// ||A^T phi - chi|| / ||chi|| of the discretized system.
    double residual{0.0};

    [[nodiscard]] const std::vector<double>& at(std::size_t i, std::size_t k) const { return values[i * dim + k]; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t k, double t) const noexcept;
};

struct SolveOptions {
    /// Tikhonov weight; 0 gives the plain direct solve.
    double ridge{0.0};
};

/// Solve chi^{ij}(t) = Lambda^j phi^{ij}(t) + sum_k int phi^{ik}(s) chi^{kj}(t - s) ds
/// on the grid nodes. `chi_nn[i * dim + j]` holds chi^{ij} on the nodes for
/// t >= 0; negative lags use chi^{ij}(-t) = chi^{ji}(t). The convolution
/// uses the trapezoid rule with one-sided limits at lag 0.
[[nodiscard]] HawkesKernel solve_hawkes(const grids::TimeGrid& grid,
                                        const std::vector<std::vector<double>>& chi_nn,
                                        std::span<const double> lambda, const SolveOptions& options = {});
[[nodiscard]] HawkesKernel solve_hawkes(const moments::MomentCurves& curves, const SolveOptions& options = {});

/// ||phi^{ik}|| integrated up to `cutoff` with the grid quadrature.
[[nodiscard]] Eigen::MatrixXd norm_matrix(const HawkesKernel& phi, double cutoff);
[[nodiscard]] double spectral_radius(const Eigen::MatrixXd& norms);
[[nodiscard]] double spectral_radius(const HawkesKernel& phi, double cutoff);

/// Price feedback kernels on the price-grid nodes.
struct PriceKernels {
    std::size_t dim{0};
    grids::TimeGrid grid;
    std::vector<std::vector<double>> l;
    /// Diagonal K(t, t) of the quadratic kernel.
    std::vector<std::vector<double>> kd;
    /// Two-argument quadratic kernels, nodes x nodes. Empty until solved.
    std::vector<moments::Surface> k;
    double rcond{0.0};
    std::vector<double> residual;
};

/// int_0^{min(t, reach)} phi(s) f(t - s) ds, with f zero at negative lags.
/// phi and f are node-sampled piecewise-linear curves on their own nodes.
[[nodiscard]] double causal_convolution(std::span<const double> phi_nodes, std::span<const double> phi,
                                        std::span<const double> f_nodes, std::span<const double> f, double t);

/// Eliminate L with the first-moment equation and solve the linear
/// integral equation for K_d:
///   (D4 - D3^2/D2) K_d(t) + int chi_P2P2(|t - s|) K_d(s) ds = g2(t) - (D3/D2) g1(t)
///   L(t) = (g1(t) - D3 K_d(t)) / D2
/// with g1 = chi_NP - phi * chi_NP and g2 = chi_NP2 - phi * chi_NP2. With
/// `phi == nullptr` the convolution terms vanish, which gives the effective
/// kernels.
[[nodiscard]] PriceKernels solve_l_kd(const moments::MomentCurves& curves, const HawkesKernel* phi,
                                      const SolveOptions& options = {});

/// K(t, x) = [chi_NPP(t, x) - sum_k int phi^{ik}(s) chi_NPP^k(t - s, x - s) ds] / (2 D2^2),
/// exactly symmetric. `phi == nullptr` gives chi_NPP / (2 D2^2).
[[nodiscard]] std::vector<moments::Surface> solve_full_k(const moments::MomentCurves& curves,
                                                         const HawkesKernel* phi);

/// Bilinear interpolation on nodes x nodes; zero outside the node square.
[[nodiscard]] double bilinear(std::span<const double> nodes, const moments::Surface& surface, double t,
                              double x) noexcept;

/// ||f|| = sum_n f(t_n) w_n over the grid points up to `cutoff`; `node_values`
/// are sampled on the grid nodes (node 0 is ignored).
[[nodiscard]] double kernel_norm(const grids::TimeGrid& grid, std::span<const double> node_values, double cutoff);

/// alpha_0^i = Lambda^i - sum_k ||phi^{ik}|| Lambda^k - ||K_d^i|| D2.
[[nodiscard]] std::vector<double> solve_base_rate(std::span<const double> lambda, const Eigen::MatrixXd& phi_norms,
                                                  std::span<const double> kd_norms, double delta2);

/// sum_i ||K_d^i|| D2 / sum_{i,k} ||phi^{ik}|| Lambda^k.
[[nodiscard]] double decoupling_diagnostic(const Eigen::MatrixXd& phi_norms, std::span<const double> kd_norms,
                                           std::span<const double> lambda, double delta2);

/// Relative size of the price-feedback terms dropped from the event-event
/// equation, per (i, j): RMS over Hawkes nodes of
///   int L^i(s) chi_NP^j(s - t) ds + int K_d^i(s) chi_NP2^j(s - t) ds
///   + iint_{s,u >= t} K^i(s, u) chi_NPP^j(s - t, u - t) ds du
/// divided by the RMS of chi_NN^{ij}.
[[nodiscard]] Eigen::MatrixXd dropped_terms_ratio(const moments::MomentCurves& curves, const PriceKernels& kernels);

/// Everything the full calibration route produces.
struct Calibration {
    HawkesKernel phi;
    PriceKernels price;
    std::vector<double> alpha0;
    double cutoff{1000.0};
    Eigen::MatrixXd phi_norms;
    double spectral_radius{0.0};
    std::vector<double> l_norms;
    std::vector<double> kd_norms;
    double decoupling{0.0};
    Eigen::MatrixXd dropped_terms;
};

struct CalibrationOptions {
    double cutoff{1000.0};
    SolveOptions solve{};
    bool full_k{true};
};

[[nodiscard]] Calibration calibrate(const moments::MomentCurves& curves, const CalibrationOptions& options = {});

} // namespace gqh::calibrate
