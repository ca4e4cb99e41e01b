#include "gqhawkes/liquidity.hpp"

#include "gqhawkes/error.hpp"
#include "gqhawkes/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gqh::liquidity {

namespace {

double kernel_at(const grids::TimeGrid& grid, const std::vector<double>& points, double cutoff, double lag) {
    if (lag < 0.0 || lag > cutoff || lag > grid.t_max()) {
        return 0.0;
    }
    const auto nodes = grid.nodes();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), lag);
    const auto m = static_cast<std::size_t>(it - nodes.begin());
    if (m == 0) {
        return 0.0;
    }
    if (m == 1) {
        return points.front();
    }
    if (m >= nodes.size()) {
        return points.back();
    }
    const double f = (lag - nodes[m - 1]) / (nodes[m] - nodes[m - 1]);
    return (1.0 - f) * points[m - 2] + f * points[m - 1];
}

} // namespace

void SignalKernels::validate(double tolerance) const {
    if (psi.size() != grid.size() || z.size() != grid.size()) {
        throw ConfigError(fmt::format("signal kernels: expected {} grid values, got {} (psi) and {} (Z)", grid.size(),
                                      psi.size(), z.size()));
    }
    const auto w = grid.weights_within(0.0, cutoff);
    double psi_mass = 0.0;
    double z_mass = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
        psi_mass += w[n] * psi[n];
        z_mass += w[n] * z[n] * z[n];
    }
    if (std::abs(psi_mass - 1.0) > tolerance || std::abs(z_mass - 1.0) > tolerance) {
        throw ConfigError(fmt::format("signal kernels are not normalized: int psi = {}, int Z^2 = {}", psi_mass,
                                      z_mass));
    }
}

double SignalKernels::psi_at(double lag) const noexcept { return kernel_at(grid, psi, cutoff, lag); }
double SignalKernels::z_at(double lag) const noexcept { return kernel_at(grid, z, cutoff, lag); }

std::vector<double> sample_times(double duration, double step) {
    if (!(step > 0.0)) {
        throw ConfigError(fmt::format("sample step must be positive, got {}", step));
    }
    std::vector<double> out;
    for (std::size_t n = 1;; ++n) {
        const double t = step * static_cast<double>(n);
        if (t > duration) {
            break;
        }
        out.push_back(t);
    }
    return out;
}

SignalSeries signals(const PricePath& price, const SignalKernels& kernels, std::span<const double> times) {
    kernels.validate();
    const double reach = std::min(kernels.cutoff, kernels.grid.t_max());
    SignalSeries out;
    out.t.assign(times.begin(), times.end());
    const auto n = static_cast<std::ptrdiff_t>(times.size());
    out.sigma2.assign(times.size(), 0.0);
    out.mu.assign(times.size(), 0.0);
    out.mu2.assign(times.size(), 0.0);
    out.ratio.assign(times.size(), std::numeric_limits<double>::quiet_NaN());
    out.seff.assign(times.size(), std::numeric_limits<double>::quiet_NaN());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        const double t = times[static_cast<std::size_t>(s)];
        const auto last = std::lower_bound(price.times.begin(), price.times.end(), t);
        auto first = std::lower_bound(price.times.begin(), last, t - reach);
        double sigma2 = 0.0;
        double mu = 0.0;
        for (auto it = first; it != last; ++it) {
            const auto p = static_cast<std::size_t>(it - price.times.begin());
            const double lag = t - *it;
            const double d = price.jumps[p];
            sigma2 += kernels.psi_at(lag) * d * d;
            mu += kernels.z_at(lag) * d;
        }
        const auto k = static_cast<std::size_t>(s);
        out.sigma2[k] = sigma2;
        out.mu[k] = mu;
        out.mu2[k] = mu * mu;
    }
    return out;
}

void apply_ratio_floor(std::span<SignalSeries> series, double quantile) {
    if (!(quantile >= 0.0 && quantile < 1.0)) {
        throw ConfigError(fmt::format("ratio floor quantile must lie in [0, 1), got {}", quantile));
    }
    std::vector<double> all;
    for (const auto& s : series) {
        for (const double v : s.sigma2) {
            if (std::isfinite(v)) {
                all.push_back(v);
            }
        }
    }
    if (all.empty()) {
        throw DataError("ratio floor: no sigma^2 samples");
    }
    const auto k = static_cast<std::size_t>(std::floor(quantile * static_cast<double>(all.size() - 1)));
    std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    const double floor = all[k];
    for (auto& s : series) {
        s.floor = floor;
        s.floored = 0;
        s.ratio.assign(s.sigma2.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t n = 0; n < s.sigma2.size(); ++n) {
            if (s.sigma2[n] > floor) {
                s.ratio[n] = s.mu2[n] / s.sigma2[n];
            } else {
                ++s.floored;
            }
        }
    }
}

std::string signals_to_csv(const SignalSeries& series, std::string_view header_comment) {
    std::string out(header_comment);
    out += fmt::format("# ratio_floor={}\n# floored_samples={}\n", io::format_double(series.floor), series.floored);
    out += "t,sigma2,mu,mu2,T,seff\n";
    for (std::size_t n = 0; n < series.t.size(); ++n) {
        out += fmt::format("{},{},{},{},{},{}\n", io::format_double(series.t[n]), io::format_double(series.sigma2[n]),
                           io::format_double(series.mu[n]), io::format_double(series.mu2[n]),
                           io::format_double(series.ratio[n]), io::format_double(series.seff[n]));
    }
    return out;
}

SurvivalTail survival_tail(std::span<const double> samples) {
    if (samples.size() < 100) {
        throw DataError(fmt::format("survival tail needs at least 100 samples, got {}", samples.size()));
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    if (std::any_of(sorted.begin(), sorted.end(), [](double v) { return !std::isfinite(v); })) {
        throw DataError("survival tail: non-finite sample");
    }
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw DataError(fmt::format("survival tail: every sample equals {}", sorted.front()));
    }
    SurvivalTail tail;
    const auto total = static_cast<double>(sorted.size());
    for (std::size_t n = 0; n < sorted.size();) {
        std::size_t m = n;
        while (m < sorted.size() && sorted[m] == sorted[n]) {
            ++m;
        }
        tail.values.push_back(sorted[n]);
        tail.survival.push_back(static_cast<double>(sorted.size() - m) / total);
        n = m;
    }
    const double top = sorted.back();
    if (!(top > 0.0)) {
        throw DataError("survival tail: the largest sample must be positive");
    }
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < tail.values.size(); ++n) {
        if (tail.values[n] >= top / 10.0 && tail.values[n] > 0.0 && tail.survival[n] > 0.0) {
            const double x = std::log(tail.values[n]);
            const double y = std::log(tail.survival[n]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++count;
        }
    }
    if (count < 3) {
        throw DataError(fmt::format("survival tail: only {} distinct values in the top decade", count));
    }
    const auto c = static_cast<double>(count);
    const double slope = (c * sxy - sx * sy) / (c * sxx - sx * sx);
    tail.exponent = -slope;
    tail.intercept = (sy - slope * sx) / c;
    tail.fit_points = count;
    return tail;
}

std::string survival_to_csv(const SurvivalTail& tail, std::string_view header_comment) {
    std::string out(header_comment);
    out += fmt::format("# tail_exponent={}\n# fit_points={}\n", io::format_double(tail.exponent), tail.fit_points);
    out += "S,survival\n";
    for (std::size_t n = 0; n < tail.values.size(); ++n) {
        out += fmt::format("{},{}\n", io::format_double(tail.values[n]), io::format_double(tail.survival[n]));
    }
    return out;
}

LaggedCorrelation lagged_correlation(std::span<const double> x, std::span<const double> y, long max_lag) {
    if (x.size() != y.size()) {
        throw DataError(fmt::format("lagged correlation: series lengths differ ({} vs {})", x.size(), y.size()));
    }
    if (max_lag < 0) {
        throw ConfigError("lagged correlation: max lag must be non-negative");
    }
    const auto variance = [](std::span<const double> v) {
        double s = 0.0;
        double s2 = 0.0;
        double c = 0.0;
        for (const double a : v) {
            if (std::isfinite(a)) {
                s += a;
                s2 += a * a;
                c += 1.0;
            }
        }
        return c > 1.0 ? s2 / c - (s / c) * (s / c) : 0.0;
    };
    if (!(variance(x) > 0.0) || !(variance(y) > 0.0)) {
        throw DataError("lagged correlation: a series has zero variance");
    }
    const auto n = static_cast<long>(x.size());
    LaggedCorrelation out;
    for (long lag = -max_lag; lag <= max_lag; ++lag) {
        double sx = 0.0;
        double sy = 0.0;
        double sxx = 0.0;
        double syy = 0.0;
        double sxy = 0.0;
        double c = 0.0;
        for (long t = std::max(0L, -lag); t < std::min(n, n - lag); ++t) {
            const double a = x[static_cast<std::size_t>(t + lag)];
            const double b = y[static_cast<std::size_t>(t)];
            if (!std::isfinite(a) || !std::isfinite(b)) {
                continue;
            }
            sx += a;
            sy += b;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
            c += 1.0;
        }
        double value = std::numeric_limits<double>::quiet_NaN();
        if (c > 1.0) {
            const double vx = sxx / c - (sx / c) * (sx / c);
            const double vy = syy / c - (sy / c) * (sy / c);
            if (vx > 0.0 && vy > 0.0) {
                value = std::clamp((sxy / c - (sx / c) * (sy / c)) / std::sqrt(vx * vy), -1.0, 1.0);
            }
        }
        out.lags.push_back(lag);
        out.values.push_back(value);
        out.pairs.push_back(c);
    }
    return out;
}

LaggedCorrelation pool_correlations(std::span<const LaggedCorrelation> sessions, std::span<const double> weights) {
    if (sessions.empty() || sessions.size() != weights.size()) {
        throw DataError("pool correlations: need one weight per session");
    }
    LaggedCorrelation out;
    out.lags = sessions.front().lags;
    out.values.assign(out.lags.size(), 0.0);
    out.pairs.assign(out.lags.size(), 0.0);
    std::vector<double> mass(out.lags.size(), 0.0);
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        if (sessions[s].lags != out.lags) {
            throw DataError("pool correlations: sessions use different lag grids");
        }
        for (std::size_t k = 0; k < out.lags.size(); ++k) {
            if (std::isfinite(sessions[s].values[k])) {
                out.values[k] += weights[s] * sessions[s].values[k];
                mass[k] += weights[s];
            }
            out.pairs[k] += sessions[s].pairs[k];
        }
    }
    for (std::size_t k = 0; k < out.lags.size(); ++k) {
        out.values[k] = mass[k] > 0.0 ? out.values[k] / mass[k] : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

std::string correlations_to_csv(const LaggedCorrelation& c_mu, const LaggedCorrelation& c_sigma,
                                const LaggedCorrelation& c_t, double step, std::string_view header_comment) {
    if (c_mu.lags != c_sigma.lags || c_mu.lags != c_t.lags) {
        throw DataError("correlations: lag grids differ");
    }
    std::string out(header_comment);
    out += "tau,C_mu,C_sigma,C_T\n";
    for (std::size_t k = 0; k < c_mu.lags.size(); ++k) {
        out += fmt::format("{},{},{},{}\n", io::format_double(step * static_cast<double>(c_mu.lags[k])),
                           io::format_double(c_mu.values[k]), io::format_double(c_sigma.values[k]),
                           io::format_double(c_t.values[k]));
    }
    return out;
}

} // namespace gqh::liquidity
