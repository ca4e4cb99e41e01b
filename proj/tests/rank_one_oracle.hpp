#pragma once

#include "gqhawkes/moments.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

namespace gqh::testing {

/// Multi-start exact coordinate descent on
/// f(c, z) = sum_{n != m} w_n w_m (M_nm - c z_n z_m)^2, with c = +-1 and the
/// scale carried by z (any c != 0 can be absorbed that way). Independent of
/// the production eigen iteration.
inline double brute_force_rank_one(const moments::Surface& m, std::span<const double> w, std::size_t starts = 20,
                                   std::size_t sweeps = 20000, unsigned seed = 7,
                                   std::size_t polish_sweeps = 2000000) {
    const std::size_t n = w.size();
    std::vector<double> b(n * n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            b[r * n + c] = std::sqrt(w[r] * w[c]) * m(r, c);
        }
    }
    auto objective = [&](double s, const std::vector<double>& v) {
        double f = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                if (r != c) {
                    const double d = b[r * n + c] - s * v[r] * v[c];
                    f += d * d;
                }
            }
        }
        return f;
    };
    auto sweep_once = [&](double s, std::vector<double>& v) {
        for (std::size_t k = 0; k < n; ++k) {
            double num = 0.0;
            double den = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c != k) {
                    num += s * b[k * n + c] * v[c];
                    den += v[c] * v[c];
                }
            }
            v[k] = den > 0.0 ? num / den : 0.0;
        }
    };
    auto gradient_norm = [&](double s, const std::vector<double>& v) {
        double g2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double g = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c != k) {
                    g += (b[k * n + c] - s * v[k] * v[c]) * v[c];
                }
            }
            g2 += g * g;
        }
        return std::sqrt(g2);
    };
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    double best = objective(1.0, std::vector<double>(n, 0.0));
    double best_sign = 1.0;
    std::vector<double> best_v;
    for (const double s : {1.0, -1.0}) {
        for (std::size_t start = 0; start < starts; ++start) {
            std::vector<double> v(n);
            for (double& x : v) {
                x = normal(rng);
            }
            double prev = objective(s, v);
            for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
                sweep_once(s, v);
                const double f = objective(s, v);
                if (prev - f <= 1e-15 * std::max(f, 1e-300)) {
                    prev = f;
                    break;
                }
                prev = f;
            }
            if (prev < best) {
                best = prev;
                best_sign = s;
                best_v = v;
            }
        }
    }
    // Coordinate descent crawls along flat valleys; finish the winner on a
    // gradient criterion instead of the per-sweep decrease.
    if (!best_v.empty()) {
        double scale = 0.0;
        for (const double x : b) {
            scale += x * x;
        }
        for (std::size_t sweep = 0; sweep < polish_sweeps; ++sweep) {
            if (gradient_norm(best_sign, best_v) <= 1e-12 * std::sqrt(scale)) {
                break;
            }
            sweep_once(best_sign, best_v);
        }
        best = std::min(best, objective(best_sign, best_v));
    }
    return best;
}

} // namespace gqh::testing
