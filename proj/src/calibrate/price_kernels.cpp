#include "gqhawkes/calibrate.hpp"

#include "gqhawkes/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace gqh::calibrate {

namespace {

double delta2_checked(const moments::MomentCurves& curves) {
    const double d2 = curves.delta[2];
    if (!(d2 > 0.0)) {
        throw NumericalError(fmt::format("price kernels need Delta_2 > 0, got {}", d2));
    }
    return d2;
}

/// Node weights of the trapezoid rule on `nodes`.
std::vector<double> trapezoid_weights(std::span<const double> nodes) {
    std::vector<double> w(nodes.size(), 0.0);
    for (std::size_t m = 0; m + 1 < nodes.size(); ++m) {
        const double h = 0.5 * (nodes[m + 1] - nodes[m]);
        w[m] += h;
        w[m + 1] += h;
    }
    return w;
}

} // namespace

double causal_convolution(std::span<const double> phi_nodes, std::span<const double> phi,
                          std::span<const double> f_nodes, std::span<const double> f, double t) {
    const double reach = std::min(t, phi_nodes.back());
    if (!(reach > 0.0)) {
        return 0.0;
    }
    std::vector<double> s;
    s.reserve(phi_nodes.size() + f_nodes.size() + 1);
    for (const double u : phi_nodes) {
        if (u <= reach) {
            s.push_back(u);
        }
    }
    for (const double u : f_nodes) {
        const double v = t - u;
        if (v >= 0.0 && v <= reach) {
            s.push_back(v);
        }
    }
    s.push_back(reach);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    double sum = 0.0;
    double prev = grids::interpolate(phi_nodes, phi, s[0]) * grids::interpolate(f_nodes, f, t - s[0]);
    for (std::size_t n = 1; n < s.size(); ++n) {
        const double cur = grids::interpolate(phi_nodes, phi, s[n]) * grids::interpolate(f_nodes, f, t - s[n]);
        sum += 0.5 * (s[n] - s[n - 1]) * (prev + cur);
        prev = cur;
    }
    return sum;
}

PriceKernels solve_l_kd(const moments::MomentCurves& curves, const HawkesKernel* phi, const SolveOptions& options) {
    const std::size_t dim = curves.dim;
    const double d2 = delta2_checked(curves);
    const double d3 = curves.delta[3];
    const double d4 = curves.delta[4];
    const double c = d4 - d3 * d3 / d2;
    if (!(c > 0.0)) {
        throw NumericalError(fmt::format("degenerate jump distribution: Delta_4 - Delta_3^2/Delta_2 = {}", c));
    }
    if (phi != nullptr && phi->dim != dim) {
        throw DataError("solve_l_kd: Hawkes kernel dimension does not match the moments");
    }
    const auto nodes = curves.price_grid.nodes();
    const std::size_t m1 = nodes.size();

    std::vector<std::vector<double>> g1(dim, std::vector<double>(m1));
    std::vector<std::vector<double>> g2(dim, std::vector<double>(m1));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t n = 0; n < m1; ++n) {
            double conv1 = 0.0;
            double conv2 = 0.0;
            if (phi != nullptr) {
                const auto hn = phi->grid.nodes();
                for (std::size_t k = 0; k < dim; ++k) {
                    conv1 += causal_convolution(hn, phi->at(i, k), nodes, curves.np[k], nodes[n]);
                    conv2 += causal_convolution(hn, phi->at(i, k), nodes, curves.np2[k], nodes[n]);
                }
            }
            g1[i][n] = curves.np[i][n] - conv1;
            g2[i][n] = curves.np2[i][n] - conv2;
        }
    }

    const auto size = static_cast<Eigen::Index>(m1);
    const auto tau = trapezoid_weights(nodes);
    Eigen::MatrixXd system(size, size);
    for (std::size_t n = 0; n < m1; ++n) {
        for (std::size_t m = 0; m < m1; ++m) {
            const double lag = std::abs(nodes[n] - nodes[m]);
            system(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) =
                tau[m] * grids::interpolate(nodes, curves.p2p2, lag) + (n == m ? c : 0.0);
        }
    }
    Eigen::MatrixXd rhs(size, static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t n = 0; n < m1; ++n) {
            rhs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = g2[i][n] - d3 / d2 * g1[i][n];
        }
    }

    PriceKernels out;
    out.dim = dim;
    out.grid = curves.price_grid;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    out.rcond = lu.rcond();
    Eigen::MatrixXd kd;
    if (options.ridge > 0.0) {
        const Eigen::MatrixXd normal =
            system.transpose() * system + options.ridge * Eigen::MatrixXd::Identity(size, size);
        kd = normal.fullPivLu().solve(system.transpose() * rhs);
    } else {
        if (!lu.isInvertible() || !(out.rcond > 1e-15)) {
            throw NumericalError(fmt::format("solve_l_kd: singular system (rcond {:.3e})", out.rcond));
        }
        kd = lu.solve(rhs);
    }
    out.l.assign(dim, std::vector<double>(m1));
    out.kd.assign(dim, std::vector<double>(m1));
    out.residual.assign(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        const double scale = rhs.col(col).norm();
        out.residual[i] = (system * kd.col(col) - rhs.col(col)).norm() / (scale > 0.0 ? scale : 1.0);
        for (std::size_t n = 0; n < m1; ++n) {
            const double k = kd(static_cast<Eigen::Index>(n), col);
            out.kd[i][n] = k;
            out.l[i][n] = (g1[i][n] - d3 * k) / d2;
        }
    }
    return out;
}

double bilinear(std::span<const double> nodes, const moments::Surface& surface, double t, double x) noexcept {
    if (nodes.size() < 2 || t < nodes.front() || x < nodes.front() || t > nodes.back() || x > nodes.back()) {
        return 0.0;
    }
    auto locate = [&](double v) {
        const auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
        std::size_t k = it == nodes.end() ? nodes.size() - 2 : static_cast<std::size_t>(it - nodes.begin()) - 1;
        const double u = (v - nodes[k]) / (nodes[k + 1] - nodes[k]);
        return std::pair{k, u};
    };
    const auto [r, u] = locate(t);
    const auto [c, v] = locate(x);
    return (1.0 - u) * ((1.0 - v) * surface(r, c) + v * surface(r, c + 1)) +
           u * ((1.0 - v) * surface(r + 1, c) + v * surface(r + 1, c + 1));
}

std::vector<moments::Surface> solve_full_k(const moments::MomentCurves& curves, const HawkesKernel* phi) {
    const std::size_t dim = curves.dim;
    const double d2 = delta2_checked(curves);
    const double scale = 1.0 / (2.0 * d2 * d2);
    const auto nodes = curves.price_grid.nodes();
    const std::size_t m1 = nodes.size();
    if (curves.npp.size() != dim) {
        throw DataError("solve_full_k: moment curves carry no event-price-price surfaces");
    }
    std::vector<moments::Surface> out(dim, moments::Surface(m1, m1));
    const long total = static_cast<long>(dim * m1);
#pragma omp parallel for schedule(dynamic)
    for (long job = 0; job < total; ++job) {
        const auto i = static_cast<std::size_t>(job) / m1;
        const auto a = static_cast<std::size_t>(job) % m1;
        std::vector<double> s;
        for (std::size_t b = a; b < m1; ++b) {
            const double t = nodes[a];
            const double x = nodes[b];
            double conv = 0.0;
            if (phi != nullptr) {
                const auto hn = phi->grid.nodes();
                const double reach = std::min(t, hn.back());
                if (reach > 0.0) {
                    s.clear();
                    for (const double u : hn) {
                        if (u <= reach) {
                            s.push_back(u);
                        }
                    }
                    for (std::size_t q = 0; q < m1; ++q) {
                        if (t - nodes[q] >= 0.0 && t - nodes[q] <= reach) {
                            s.push_back(t - nodes[q]);
                        }
                        if (x - nodes[q] >= 0.0 && x - nodes[q] <= reach) {
                            s.push_back(x - nodes[q]);
                        }
                    }
                    s.push_back(reach);
                    std::sort(s.begin(), s.end());
                    s.erase(std::unique(s.begin(), s.end()), s.end());
                    for (std::size_t k = 0; k < dim; ++k) {
                        const auto& p = phi->at(i, k);
                        auto g = [&](double v) {
                            return grids::interpolate(hn, p, v) * bilinear(nodes, curves.npp[k], t - v, x - v);
                        };
                        double prev = g(s[0]);
                        for (std::size_t n = 1; n < s.size(); ++n) {
                            const double cur = g(s[n]);
                            conv += 0.5 * (s[n] - s[n - 1]) * (prev + cur);
                            prev = cur;
                        }
                    }
                }
            }
            const double value = (curves.npp[i](a, b) - conv) * scale;
            out[i](a, b) = value;
            out[i](b, a) = value;
        }
    }
    return out;
}

} // namespace gqh::calibrate
