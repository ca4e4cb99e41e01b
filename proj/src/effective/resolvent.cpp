#include "gqhawkes/effective.hpp"

#include "gqhawkes/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace gqh::effective {

namespace {

double ramp_square(double x) noexcept { return x > 0.0 ? 0.5 * x * x : 0.0; }

/// Mass fractions of the convolution of two unit-mass boxes falling into
/// each segment. For boxes a and b, `begin[a * m + b]` is the first segment
/// reached and the fractions are stored contiguously from `offset[...]`.
struct BoxTensor {
    std::size_t m{0};
    std::vector<std::size_t> begin;
    std::vector<std::size_t> count;
    std::vector<std::size_t> offset;
    std::vector<double> fraction;

    explicit BoxTensor(std::span<const double> nodes) : m(nodes.size() - 1) {
        begin.resize(m * m);
        count.resize(m * m);
        offset.resize(m * m);
        for (std::size_t a = 0; a < m; ++a) {
            const double wa = nodes[a + 1] - nodes[a];
            for (std::size_t b = 0; b < m; ++b) {
                const double wb = nodes[b + 1] - nodes[b];
                const double origin = nodes[a] + nodes[b];
                const double end = nodes[a + 1] + nodes[b + 1];
                const double mass = wa * wb;
                // G(x): mass of the box convolution below x.
                const auto cumulative = [&](double x) {
                    if (x >= end) {
                        return mass;
                    }
                    const double y = x - origin;
                    return ramp_square(y) - ramp_square(y - wa) - ramp_square(y - wb) + ramp_square(y - wa - wb);
                };
                const auto first = static_cast<std::size_t>(
                    std::upper_bound(nodes.begin(), nodes.end(), origin) - nodes.begin());
                const std::size_t c0 = first == 0 ? 0 : first - 1;
                const std::size_t k = a * m + b;
                begin[k] = c0;
                offset[k] = fraction.size();
                double below = cumulative(nodes[c0]);
                for (std::size_t c = c0; c < m && nodes[c] < end; ++c) {
                    const double above = cumulative(nodes[c + 1]);
                    fraction.push_back((above - below) / mass);
                    below = above;
                }
                count[k] = fraction.size() - offset[k];
            }
        }
    }

    /// Segment averages of f * g, truncated at the last node.
    void convolve_add(std::span<const double> f_mass, std::span<const double> g_mass, std::span<double> out_mass) const {
        for (std::size_t a = 0; a < m; ++a) {
            if (f_mass[a] == 0.0) {
                continue;
            }
            for (std::size_t b = 0; b < m; ++b) {
                const double p = f_mass[a] * g_mass[b];
                if (p == 0.0) {
                    continue;
                }
                const std::size_t k = a * m + b;
                const double* fr = fraction.data() + offset[k];
                for (std::size_t c = 0; c < count[k]; ++c) {
                    out_mass[begin[k] + c] += p * fr[c];
                }
            }
        }
    }
};

} // namespace

Resolvent resolvent(const calibrate::HawkesKernel& phi, double tolerance, std::size_t max_order) {
    const std::size_t dim = phi.dim;
    const auto nodes = phi.grid.nodes();
    const std::size_t m = nodes.size() - 1;
    const std::size_t pairs = dim * dim;

    std::vector<double> h(m);
    for (std::size_t c = 0; c < m; ++c) {
        h[c] = nodes[c + 1] - nodes[c];
    }
    // Kernels are handled as segment masses (average times width).
    std::vector<std::vector<double>> phi_mass(pairs, std::vector<double>(m, 0.0));
    Eigen::MatrixXd phi_norms = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t k = 0; k < dim; ++k) {
            const auto& v = phi.at(i, k);
            double total = 0.0;
            for (std::size_t c = 0; c < m; ++c) {
                phi_mass[i * dim + k][c] = 0.5 * (v[c] + v[c + 1]) * h[c];
                total += phi_mass[i * dim + k][c];
            }
            phi_norms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = total;
        }
    }
    const double rho = calibrate::spectral_radius(phi_norms);
    if (!(rho < 1.0)) {
        throw NumericalError(fmt::format("resolvent diverges: spectral radius of ||phi|| is {}", rho));
    }

    const BoxTensor tensor(nodes);
    std::vector<std::vector<double>> sum = phi_mass;
    std::vector<std::vector<double>> term = phi_mass;
    std::vector<std::vector<double>> next(pairs, std::vector<double>(m, 0.0));
    const auto magnitude = [&](const std::vector<std::vector<double>>& x) {
        double largest = 0.0;
        for (const auto& row : x) {
            double s = 0.0;
            for (const double v : row) {
                s += std::abs(v);
            }
            largest = std::max(largest, s);
        }
        return largest;
    };

    Resolvent out;
    out.order = 1;
    double sum_size = magnitude(sum);
    out.last_term = sum_size > 0.0 ? 1.0 : 0.0;
    while (out.last_term > tolerance) {
        if (out.order >= max_order) {
            throw NumericalError(fmt::format("resolvent series not converged after {} terms (last relative term {})",
                                             out.order, out.last_term));
        }
        for (auto& row : next) {
            std::fill(row.begin(), row.end(), 0.0);
        }
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                for (std::size_t k = 0; k < dim; ++k) {
                    tensor.convolve_add(term[i * dim + j], phi_mass[j * dim + k], next[i * dim + k]);
                }
            }
        }
        std::swap(term, next);
        for (std::size_t p = 0; p < pairs; ++p) {
            for (std::size_t c = 0; c < m; ++c) {
                sum[p][c] += term[p][c];
            }
        }
        ++out.order;
        sum_size = magnitude(sum);
        out.last_term = magnitude(term) / sum_size;
    }

    out.dim = dim;
    out.grid = phi.grid;
    out.phi_norms = phi_norms;
    out.norms = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    out.averages.resize(pairs);
    out.values.resize(pairs);
    for (std::size_t p = 0; p < pairs; ++p) {
        out.averages[p].resize(m);
        double total = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            out.averages[p][c] = sum[p][c] / h[c];
            total += sum[p][c];
        }
        out.norms(static_cast<Eigen::Index>(p / dim), static_cast<Eigen::Index>(p % dim)) = total;
    }
    // Node values from R = phi + R * phi with the segment-constant R and the
    // exact integrals of the piecewise-linear phi.
    std::vector<std::vector<double>> cumulative(pairs, std::vector<double>(m + 1, 0.0));
    for (std::size_t p = 0; p < pairs; ++p) {
        const auto& v = phi.values[p];
        for (std::size_t c = 0; c < m; ++c) {
            cumulative[p][c + 1] = cumulative[p][c] + 0.5 * (v[c] + v[c + 1]) * h[c];
        }
    }
    const auto antiderivative = [&](std::size_t p, double x) {
        if (x <= 0.0) {
            return 0.0;
        }
        if (x >= nodes.back()) {
            return cumulative[p][m];
        }
        const auto c = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin()) - 1;
        const auto& v = phi.values[p];
        const double fx = v[c] + (v[c + 1] - v[c]) * (x - nodes[c]) / h[c];
        return cumulative[p][c] + 0.5 * (v[c] + fx) * (x - nodes[c]);
    };
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t k = 0; k < dim; ++k) {
            auto& values = out.values[i * dim + k];
            values = phi.values[i * dim + k];
            for (std::size_t n = 1; n <= m; ++n) {
                const double t = nodes[n];
                for (std::size_t j = 0; j < dim; ++j) {
                    const auto& r = out.averages[i * dim + j];
                    const std::size_t q = j * dim + k;
                    for (std::size_t c = 0; c < m && nodes[c] < t; ++c) {
                        // int over segment c of phi(t - s) ds
                        const double hi = std::min(nodes[c + 1], t);
                        values[n] += r[c] * (antiderivative(q, t - nodes[c]) - antiderivative(q, t - hi));
                    }
                }
            }
        }
    }
    return out;
}

} // namespace gqh::effective
