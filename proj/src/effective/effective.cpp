#include "gqhawkes/effective.hpp"

#include "gqhawkes/error.hpp"

#include <algorithm>

namespace gqh::effective {

calibrate::PriceKernels solve_effective_l_kd(const moments::MomentCurves& curves,
                                             const calibrate::SolveOptions& options) {
    return calibrate::solve_l_kd(curves, nullptr, options);
}

std::vector<moments::Surface> effective_k(const moments::MomentCurves& curves) {
    return calibrate::solve_full_k(curves, nullptr);
}

moments::Surface median_smooth_off_diagonal(const moments::Surface& surface) {
    moments::Surface out = surface;
    std::vector<double> window;
    window.reserve(9);
    for (std::size_t r = 0; r < surface.rows; ++r) {
        for (std::size_t c = 0; c < surface.cols; ++c) {
            if (r == c) {
                continue;
            }
            window.clear();
            for (std::size_t rr = r == 0 ? 0 : r - 1; rr <= std::min(r + 1, surface.rows - 1); ++rr) {
                for (std::size_t cc = c == 0 ? 0 : c - 1; cc <= std::min(c + 1, surface.cols - 1); ++cc) {
                    if (rr != cc) {
                        window.push_back(surface(rr, cc));
                    }
                }
            }
            const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
            std::nth_element(window.begin(), mid, window.end());
            double value = *mid;
            if (window.size() % 2 == 0) {
                value = 0.5 * (value + *std::max_element(window.begin(), mid));
            }
            out(r, c) = value;
        }
    }
    return out;
}

std::vector<std::vector<double>> bare_l_from_effective(const calibrate::PriceKernels& effective,
                                                       const calibrate::HawkesKernel& phi) {
    if (phi.dim != effective.dim) {
        throw DataError("bare_l_from_effective: kernel dimensions differ");
    }
    const auto nodes = effective.grid.nodes();
    const auto phi_nodes = phi.grid.nodes();
    std::vector<std::vector<double>> out(effective.dim);
    for (std::size_t i = 0; i < effective.dim; ++i) {
        out[i] = effective.l[i];
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            for (std::size_t k = 0; k < effective.dim; ++k) {
                out[i][n] -= calibrate::causal_convolution(phi_nodes, phi.at(i, k), nodes, effective.l[k], nodes[n]);
            }
        }
    }
    return out;
}

} // namespace gqh::effective
