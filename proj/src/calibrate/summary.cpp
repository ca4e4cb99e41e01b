#include "gqhawkes/calibrate.hpp"

#include "gqhawkes/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace gqh::calibrate {

std::vector<double> solve_base_rate(std::span<const double> lambda, const Eigen::MatrixXd& phi_norms,
                                    std::span<const double> kd_norms, double delta2) {
    const std::size_t dim = lambda.size();
    std::vector<double> alpha(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        double hawkes = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            hawkes += phi_norms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * lambda[k];
        }
        alpha[i] = lambda[i] - hawkes - kd_norms[i] * delta2;
    }
    return alpha;
}

double decoupling_diagnostic(const Eigen::MatrixXd& phi_norms, std::span<const double> kd_norms,
                             std::span<const double> lambda, double delta2) {
    double quadratic = 0.0;
    double hawkes = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        quadratic += kd_norms[i] * delta2;
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            hawkes += phi_norms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * lambda[k];
        }
    }
    if (hawkes == 0.0) {
        throw NumericalError("decoupling diagnostic: Hawkes contribution is zero");
    }
    return quadratic / hawkes;
}

Eigen::MatrixXd dropped_terms_ratio(const moments::MomentCurves& curves, const PriceKernels& kernels) {
    const std::size_t dim = curves.dim;
    const auto hn = curves.hawkes_grid.nodes();
    const auto pn = curves.price_grid.nodes();
    std::vector<double> tau(pn.size(), 0.0);
    for (std::size_t m = 0; m + 1 < pn.size(); ++m) {
        tau[m] += 0.5 * (pn[m + 1] - pn[m]);
        tau[m + 1] += 0.5 * (pn[m + 1] - pn[m]);
    }
    const bool with_k = kernels.k.size() == dim && curves.npp.size() == dim;
    Eigen::MatrixXd ratio = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            double extra_sq = 0.0;
            double chi_sq = 0.0;
            for (std::size_t n = 0; n < hn.size(); ++n) {
                const double t = hn[n];
                double extra = 0.0;
                for (std::size_t a = 0; a < pn.size(); ++a) {
                    extra += tau[a] * (grids::interpolate(pn, kernels.l[i], t + pn[a]) * curves.np[j][a] +
                                       grids::interpolate(pn, kernels.kd[i], t + pn[a]) * curves.np2[j][a]);
                    if (with_k) {
                        for (std::size_t b = 0; b < pn.size(); ++b) {
                            extra += tau[a] * tau[b] * bilinear(pn, kernels.k[i], t + pn[a], t + pn[b]) *
                                     curves.npp[j](a, b);
                        }
                    }
                }
                extra_sq += extra * extra;
                const double chi = curves.chi_nn(i, j)[n];
                chi_sq += chi * chi;
            }
            ratio(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                chi_sq > 0.0 ? std::sqrt(extra_sq / chi_sq) : 0.0;
        }
    }
    return ratio;
}

Calibration calibrate(const moments::MomentCurves& curves, const CalibrationOptions& options) {
    Calibration out;
    out.cutoff = options.cutoff;
    out.phi = solve_hawkes(curves, options.solve);
    out.price = solve_l_kd(curves, &out.phi, options.solve);
    if (options.full_k) {
        out.price.k = solve_full_k(curves, &out.phi);
    }
    out.phi_norms = norm_matrix(out.phi, options.cutoff);
    out.spectral_radius = spectral_radius(out.phi_norms);
    for (std::size_t i = 0; i < curves.dim; ++i) {
        out.l_norms.push_back(kernel_norm(curves.price_grid, out.price.l[i], options.cutoff));
        out.kd_norms.push_back(kernel_norm(curves.price_grid, out.price.kd[i], options.cutoff));
    }
    out.alpha0 = solve_base_rate(curves.lambda, out.phi_norms, out.kd_norms, curves.delta[2]);
    const double hawkes_total = out.phi_norms.sum();
    out.decoupling = hawkes_total != 0.0
                         ? decoupling_diagnostic(out.phi_norms, out.kd_norms, curves.lambda, curves.delta[2])
                         : 0.0;
    out.dropped_terms = dropped_terms_ratio(curves, out.price);
    return out;
}

} // namespace gqh::calibrate
