#include "gqhawkes/moments.hpp"

#include "gqhawkes/error.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace gqh::moments {

double PowerLawFit::operator()(double t) const noexcept {
    return a * std::pow(1.0 + t / b, -c);
}

namespace {

struct Profile {
    double log_a{0.0};
    double c{0.0};
    double sse{0.0};
};

/// For fixed B the log model is linear in (log A, C).
Profile profile_at(const std::vector<double>& t, const std::vector<double>& y, double log_b) {
    const double b = std::exp(log_b);
    const std::size_t n = t.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = std::log1p(t[k] / b);
        sx += x[k];
        sy += y[k];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    Profile p;
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    p.c = -slope;
    p.log_a = my - slope * mx;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = y[k] - (p.log_a - p.c * x[k]);
        p.sse += r * r;
    }
    return p;
}

double sse_at(const std::vector<double>& t, const std::vector<double>& y, const Eigen::Vector3d& theta) {
    double sse = 0.0;
    const double b = std::exp(theta[2]);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double r = y[k] - (theta[0] - theta[1] * std::log1p(t[k] / b));
        sse += r * r;
    }
    return sse;
}

} // namespace

PowerLawFit fit_p2p2_powerlaw(std::span<const double> t, std::span<const double> values) {
    if (t.size() != values.size()) {
        throw DataError("power-law fit: sample and value counts differ");
    }
    std::vector<double> ts;
    std::vector<double> ys;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (values[k] > 0.0 && t[k] > 0.0) {
            ts.push_back(t[k]);
            ys.push_back(std::log(values[k]));
        }
    }
    if (ts.size() < 3 || 2 * ts.size() <= t.size()) {
        throw DataError(fmt::format("power-law fit: only {} of {} values are positive", ts.size(), t.size()));
    }

    const double lo = std::log(ts.front()) - 6.0;
    const double hi = std::log(ts.back()) + 6.0;
    constexpr std::size_t kScan = 400;
    std::size_t best = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= kScan; ++k) {
        const double u = lo + (hi - lo) * static_cast<double>(k) / kScan;
        const double sse = profile_at(ts, ys, u).sse;
        if (sse < best_sse) {
            best_sse = sse;
            best = k;
        }
    }
    const double step = (hi - lo) / kScan;
    const double u_lo = lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
    const double u_hi = lo + step * static_cast<double>(std::min(best + 1, kScan));
    const auto [u_star, sse_star] = boost::math::tools::brent_find_minima(
        [&](double u) { return profile_at(ts, ys, u).sse; }, u_lo, u_hi, std::numeric_limits<double>::digits / 2);
    (void)sse_star;
    const auto start = profile_at(ts, ys, u_star);

    // Gauss-Newton polish on (log A, C, log B)
    Eigen::Vector3d theta(start.log_a, start.c, u_star);
    double sse = sse_at(ts, ys, theta);
    const std::size_t n = ts.size();
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::MatrixXd jac(n, 3);
        Eigen::VectorXd res(n);
        const double b = std::exp(theta[2]);
        for (std::size_t k = 0; k < n; ++k) {
            const double x = std::log1p(ts[k] / b);
            res[static_cast<Eigen::Index>(k)] = ys[k] - (theta[0] - theta[1] * x);
            // d model / d log B = -C * d x / d log B = C * (t/B) / (1 + t/B)
            const double dx = -(ts[k] / b) / (1.0 + ts[k] / b);
            jac.row(static_cast<Eigen::Index>(k)) << 1.0, -x, -theta[1] * dx;
        }
        const Eigen::Vector3d delta = jac.colPivHouseholderQr().solve(res);
        if (!delta.allFinite()) {
            break;
        }
        double scale = 1.0;
        bool improved = false;
        for (int half = 0; half < 30; ++half) {
            const Eigen::Vector3d trial = theta + scale * delta;
            const double trial_sse = sse_at(ts, ys, trial);
            if (trial_sse <= sse) {
                const bool tiny = (trial - theta).norm() <= 1e-15 * (1.0 + theta.norm());
                theta = trial;
                sse = trial_sse;
                improved = !tiny;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) {
            break;
        }
    }
    if (!std::isfinite(sse)) {
        throw NumericalError(fmt::format("power-law fit did not converge (profile residual {})", best_sse));
    }
    PowerLawFit fit;
    fit.a = std::exp(theta[0]);
    fit.c = theta[1];
    fit.b = std::exp(theta[2]);
    fit.rms = std::sqrt(sse / static_cast<double>(n));
    fit.used_points = n;
    return fit;
}

double LogPolynomialFit::operator()(double t) const noexcept {
    if (segments.empty() || !(t > 0.0)) {
        return 0.0;
    }
    const double x = std::log(t);
    const Segment* chosen = &segments.front();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : segments) {
        if (t >= s.t_lo && t <= s.t_hi) {
            chosen = &s;
            break;
        }
        const double d = std::min(std::abs(x - std::log(s.t_lo)), std::abs(x - std::log(s.t_hi)));
        if (d < best) {
            best = d;
            chosen = &s;
        }
    }
    double acc = 0.0;
    for (std::size_t k = chosen->coefficients.size(); k-- > 0;) {
        acc = acc * x + chosen->coefficients[k];
    }
    return chosen->sign * std::exp(acc);
}

LogPolynomialFit fit_log_polynomial(std::span<const double> t, std::span<const double> values, std::size_t degree,
                                    SignChangePolicy policy) {
    if (t.size() != values.size()) {
        throw DataError("log-polynomial fit: sample and value counts differ");
    }
    // runs of constant sign, zeros skipped
    std::vector<std::vector<std::size_t>> runs;
    double current = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (values[k] == 0.0 || !(t[k] > 0.0)) {
            continue;
        }
        const double sign = values[k] > 0.0 ? 1.0 : -1.0;
        if (sign != current) {
            if (current != 0.0 && policy == SignChangePolicy::raise) {
                throw DataError(fmt::format("log-polynomial fit: sign change near t = {}", t[k]));
            }
            runs.emplace_back();
            current = sign;
        }
        runs.back().push_back(k);
    }
    if (runs.empty()) {
        throw DataError("log-polynomial fit: no nonzero values");
    }
    LogPolynomialFit fit;
    double sse = 0.0;
    std::size_t used = 0;
    for (const auto& run : runs) {
        const std::size_t m = run.size();
        const std::size_t deg = std::min(degree, m - 1);
        Eigen::MatrixXd design(m, deg + 1);
        Eigen::VectorXd rhs(m);
        for (std::size_t r = 0; r < m; ++r) {
            const double x = std::log(t[run[r]]);
            double power = 1.0;
            for (std::size_t c = 0; c <= deg; ++c) {
                design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = power;
                power *= x;
            }
            rhs[static_cast<Eigen::Index>(r)] = std::log(std::abs(values[run[r]]));
        }
        const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
        const Eigen::VectorXd resid = rhs - design * coef;
        sse += resid.squaredNorm();
        used += m;
        LogPolynomialFit::Segment segment;
        segment.t_lo = t[run.front()];
        segment.t_hi = t[run.back()];
        segment.sign = values[run.front()] > 0.0 ? 1.0 : -1.0;
        segment.coefficients.assign(coef.data(), coef.data() + coef.size());
        fit.segments.push_back(std::move(segment));
    }
    fit.rms = std::sqrt(sse / static_cast<double>(used));
    return fit;
}

MomentCurves smooth(const MomentCurves& raw, const SmoothingOptions& options) {
    MomentCurves out = raw;
    const auto points = raw.price_grid.points();
    auto refit = [&](std::vector<double>& node_values, auto&& make_fit) {
        const std::span<const double> at_points(node_values.data() + 1, points.size());
        const auto fit = make_fit(at_points);
        for (std::size_t k = 0; k < points.size(); ++k) {
            node_values[k + 1] = fit(points[k]);
        }
        node_values[0] = node_values[1];
    };
    if (options.log_polynomial) {
        for (std::size_t i = 0; i < raw.dim; ++i) {
            for (auto* curve : {&out.np[i], &out.np2[i]}) {
                const bool all_zero =
                    std::all_of(curve->begin() + 1, curve->end(), [](double v) { return v == 0.0; });
                if (all_zero) {
                    continue;
                }
                refit(*curve, [&](std::span<const double> v) {
                    return fit_log_polynomial(points, v, options.degree, options.policy);
                });
            }
        }
    }
    if (options.p2p2_powerlaw) {
        refit(out.p2p2, [&](std::span<const double> v) { return fit_p2p2_powerlaw(points, v); });
    }
    return out;
}

} // namespace gqh::moments
