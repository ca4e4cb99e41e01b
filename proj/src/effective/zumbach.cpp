#include "gqhawkes/effective.hpp"

#include "gqhawkes/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gqh::effective {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double off_diagonal_objective(const MatrixXd& b, const VectorXd& v) {
    double f = 0.0;
    for (Index n = 0; n < b.rows(); ++n) {
        for (Index m = 0; m < b.cols(); ++m) {
            if (m != n) {
                const double r = b(n, m) - v(n) * v(m);
                f += r * r;
            }
        }
    }
    return f;
}

VectorXd gradient(const MatrixXd& b, const VectorXd& v) {
    VectorXd g = VectorXd::Zero(v.size());
    for (Index k = 0; k < b.rows(); ++k) {
        double s = 0.0;
        for (Index m = 0; m < b.cols(); ++m) {
            if (m != k) {
                s += (b(k, m) - v(k) * v(m)) * v(m);
            }
        }
        g(k) = -4.0 * s;
    }
    return g;
}

MatrixXd hessian(const MatrixXd& b, const VectorXd& v) {
    const Index n = v.size();
    MatrixXd h(n, n);
    const double total = v.squaredNorm();
    for (Index k = 0; k < n; ++k) {
        for (Index l = 0; l < n; ++l) {
            if (k == l) {
                h(k, k) = 4.0 * (total - v(k) * v(k));
            } else {
                h(k, l) = -4.0 * (b(k, l) - v(k) * v(l)) + 4.0 * v(k) * v(l);
            }
        }
    }
    return h;
}

/// Leading eigenpair scaled so that v v^T matches the positive part.
VectorXd leading_factor(const MatrixXd& filled) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(filled);
    const Index top = filled.rows() - 1;
    const double lambda = eig.eigenvalues()(top);
    if (!(lambda > 0.0)) {
        return VectorXd::Zero(filled.rows());
    }
    return std::sqrt(lambda) * eig.eigenvectors().col(top);
}

struct SignedFit {
    VectorXd v;
    double objective{0.0};
    double gradient_norm{0.0};
    std::size_t iterations{0};
    std::vector<double> history;
};

/// Minimize sum_{n != m} (b_nm - v_n v_m)^2 from `start`: diagonal-filling
/// EM to get close, then damped Newton.
SignedFit fit_positive(const MatrixXd& b, const VectorXd& start, const ZumbachOptions& options) {
    SignedFit fit;
    MatrixXd filled = b;
    filled.diagonal().setZero();
    const double scale = filled.squaredNorm();
    fit.v = start;
    double f = off_diagonal_objective(b, fit.v);
    fit.history.push_back(f);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        filled.diagonal() = fit.v.cwiseProduct(fit.v);
        const VectorXd v = leading_factor(filled);
        const double next = off_diagonal_objective(b, v);
        fit.v = v;
        ++fit.iterations;
        const double change = f - next;
        f = next;
        fit.history.push_back(f);
        if (change <= options.tolerance * std::max(f, options.tolerance * scale)) {
            break;
        }
    }

    // Levenberg-Marquardt on the exact Hessian; the damping persists
    // between iterations and drops back to plain Newton near the optimum.
    VectorXd g = gradient(b, fit.v);
    double mu = 0.0;
    for (std::size_t it = 0; it < 1000 && g.norm() > 0.0; ++it) {
        const MatrixXd h = hessian(b, fit.v);
        const double floor = 1e-12 * std::max(h.diagonal().cwiseAbs().maxCoeff(), std::sqrt(scale) + 1e-300);
        bool moved = false;
        for (int attempt = 0; attempt < 80; ++attempt) {
            MatrixXd damped = h;
            damped.diagonal().array() += mu;
            const Eigen::LLT<MatrixXd> llt(damped);
            if (llt.info() != Eigen::Success) {
                mu = std::max(4.0 * mu, floor);
                continue;
            }
            const VectorXd step = llt.solve(-g);
            const VectorXd trial = fit.v + step;
            const double next = off_diagonal_objective(b, trial);
            // Near the optimum the objective stops resolving progress, so a
            // step that only shrinks the gradient is taken as well.
            bool accept = next < f;
            VectorXd trial_g;
            if (!accept && next <= f + 1e-13 * std::abs(f)) {
                trial_g = gradient(b, trial);
                accept = trial_g.norm() < 0.5 * g.norm();
            }
            if (accept) {
                fit.v = trial;
                f = std::min(f, next);
                moved = true;
                mu = mu > floor ? mu / 4.0 : 0.0;
                break;
            }
            mu = std::max(4.0 * mu, floor);
        }
        if (!moved) {
            break;
        }
        ++fit.iterations;
        fit.history.push_back(f);
        g = gradient(b, fit.v);
    }
    fit.objective = f;
    fit.gradient_norm = g.norm();
    return fit;
}

/// Best fit over starts on the leading positive eigenvectors of the
/// zero-diagonal matrix; the objective is not convex and EM from the top
/// eigenvector alone can stall in a side basin.
SignedFit fit_multistart(const MatrixXd& b, const ZumbachOptions& options) {
    MatrixXd off = b;
    off.diagonal().setZero();
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(off);
    const Index n = off.rows();
    SignedFit best;
    bool have = false;
    std::size_t iterations = 0;
    for (Index k = n - 1; k >= 0 && k >= n - static_cast<Index>(options.starts); --k) {
        const double lambda = eig.eigenvalues()(k);
        if (!(lambda > 0.0) && have) {
            break;
        }
        const VectorXd start = lambda > 0.0 ? VectorXd(std::sqrt(lambda) * eig.eigenvectors().col(k))
                                            : VectorXd(VectorXd::Zero(n));
        SignedFit fit = fit_positive(b, start, options);
        iterations += fit.iterations;
        if (!have || fit.objective < best.objective) {
            best = std::move(fit);
            have = true;
        }
    }
    best.iterations = iterations;
    return best;
}

} // namespace

double rank_one_objective(const moments::Surface& surface, std::span<const double> weights, double c,
                          std::span<const double> z) {
    double f = 0.0;
    for (std::size_t n = 0; n < surface.rows; ++n) {
        for (std::size_t m = 0; m < surface.cols; ++m) {
            if (m != n) {
                const double r = surface(n, m) - c * z[n] * z[m];
                f += weights[n] * weights[m] * r * r;
            }
        }
    }
    return f;
}

ZumbachDecomposition zumbach_decompose(const moments::Surface& surface, std::span<const double> diagonal,
                                       std::span<const double> weights, const ZumbachOptions& options) {
    const std::size_t n_all = weights.size();
    if (surface.rows != n_all || surface.cols != n_all || diagonal.size() != n_all) {
        throw DataError("zumbach_decompose: surface, diagonal and weights sizes differ");
    }
    std::vector<std::size_t> active;
    for (std::size_t n = 0; n < n_all; ++n) {
        if (weights[n] < 0.0) {
            throw DataError("zumbach_decompose: negative quadrature weight");
        }
        if (weights[n] > 0.0) {
            active.push_back(n);
        }
    }
    if (active.size() < 2) {
        throw DataError("zumbach_decompose: need at least two points with positive weight");
    }
    const auto n = static_cast<Index>(active.size());
    MatrixXd a(n, n);
    VectorXd root(n);
    for (Index r = 0; r < n; ++r) {
        root(r) = std::sqrt(weights[active[static_cast<std::size_t>(r)]]);
    }
    for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < n; ++c) {
            a(r, c) = root(r) * surface(active[static_cast<std::size_t>(r)], active[static_cast<std::size_t>(c)]) *
                      root(c);
        }
    }

    const SignedFit plus = fit_multistart(a, options);
    const SignedFit minus = fit_multistart(-a, options);
    const bool negative = minus.objective < plus.objective;
    const SignedFit& best = negative ? minus : plus;
    const double sign = negative ? -1.0 : 1.0;
    const double size = a.squaredNorm() - a.diagonal().squaredNorm();
    if (best.gradient_norm > 1e-6 * std::pow(std::max(size, std::numeric_limits<double>::min()), 0.75)) {
        std::string tail;
        const std::size_t from = best.history.size() > 5 ? best.history.size() - 5 : 0;
        for (std::size_t n = from; n < best.history.size(); ++n) {
            tail += fmt::format(" {}", best.history[n]);
        }
        throw NumericalError(fmt::format("rank-one fit did not converge: gradient norm {}, last objectives{}",
                                         best.gradient_norm, tail));
    }

    ZumbachDecomposition out;
    out.objective = best.objective;
    out.gradient_norm = best.gradient_norm;
    out.iterations = plus.iterations + minus.iterations;
    out.history = best.history;
    double pair_weight = 0.0;
    double total_weight = 0.0;
    for (const std::size_t r : active) {
        total_weight += weights[r];
    }
    for (const std::size_t r : active) {
        pair_weight += weights[r] * (total_weight - weights[r]);
    }
    out.residual_rms = std::sqrt(best.objective / pair_weight);

    const double v2 = best.v.squaredNorm();
    out.k1 = sign * v2;
    out.z.assign(n_all, 0.0);
    if (v2 > 0.0) {
        const double v_norm = std::sqrt(v2);
        for (Index r = 0; r < n; ++r) {
            out.z[active[static_cast<std::size_t>(r)]] = best.v(r) / (root(r) * v_norm);
        }
        const auto first = std::find_if(active.begin(), active.end(), [&](std::size_t r) { return out.z[r] != 0.0; });
        if (first != active.end() && out.z[*first] < 0.0) {
            for (double& z : out.z) {
                z = -z;
            }
        }
    } else {
        // No off-diagonal structure: any unit-norm Z fits; take a flat one.
        for (const std::size_t r : active) {
            out.z[r] = 1.0 / std::sqrt(total_weight);
        }
    }

    MatrixXd residual = sign * a;
    residual -= best.v * best.v.transpose();
    residual.diagonal().setZero();
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(residual, Eigen::EigenvaluesOnly);
    const double next = eig.eigenvalues().cwiseAbs().maxCoeff();
    out.next_eigen_ratio = v2 > 0.0 ? next / v2 : (next > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);

    double kd = 0.0;
    double diag_size = 0.0;
    for (const std::size_t r : active) {
        kd += weights[r] * (diagonal[r] - out.k1 * out.z[r] * out.z[r]);
        diag_size += weights[r] * std::abs(diagonal[r]);
    }
    if (kd == 0.0 || std::abs(kd) <= 1e-12 * diag_size) {
        throw NumericalError("zumbach_decompose: no diagonal mass left after removing the rank-one part");
    }
    out.kd = kd;
    out.psi.assign(n_all, 0.0);
    for (const std::size_t r : active) {
        out.psi[r] = (diagonal[r] - out.k1 * out.z[r] * out.z[r]) / kd;
        if (out.psi[r] < 0.0) {
            out.negative_psi.push_back(r);
        }
    }
    return out;
}

ZumbachDecomposition zumbach_decompose(const grids::TimeGrid& grid, const moments::Surface& surface,
                                       std::span<const double> diagonal, double cutoff,
                                       const ZumbachOptions& options) {
    const std::size_t n = grid.size();
    if (surface.rows != n + 1 || surface.cols != n + 1 || diagonal.size() != n + 1) {
        throw DataError("zumbach_decompose: node-sampled inputs must match the grid nodes");
    }
    moments::Surface points(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            points(r, c) = surface(r + 1, c + 1);
        }
    }
    const auto weights = grid.weights_within(0.0, cutoff);
    return zumbach_decompose(points, diagonal.subspan(1), weights, options);
}

BareStrengths bare_from_effective(const ZumbachDecomposition& effective, double phi_norm) {
    return {(1.0 - phi_norm) * effective.kd, (1.0 - phi_norm) * effective.k1};
}

} // namespace gqh::effective
