#include "gqhawkes/ingest.hpp"

#include "gqhawkes/error.hpp"
#include "gqhawkes/io.hpp"
#include "gqhawkes/kernels/pair_sums.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace gqh::ingest {

double AutocorrKernel::at(double lag) const noexcept {
    if (bins.lo.empty() || lag < bins.lo.front() || lag >= bins.max_lag()) {
        return 0.0;
    }
    const auto it = std::upper_bound(bins.lo.begin(), bins.lo.end(), lag);
    const auto b = static_cast<std::size_t>(it - bins.lo.begin()) - 1;
    return lag < bins.hi[b] ? values[b] : 0.0;
}

grids::Bins autocorr_bins(double max_lag) {
    if (!(max_lag > 2.0)) {
        throw ConfigError(fmt::format("autocorrelation max lag must exceed 2 s, got {}", max_lag));
    }
    return grids::TimeGrid::build({0.1, 2.0, max_lag, 8, 16}).bins();
}

AutocorrKernel estimate_autocorr(std::span<const PricePath> paths, const grids::Bins& bins) {
    bins.validate();
    AutocorrKernel kernel;
    kernel.bins = bins;
    std::vector<double> products(bins.size(), 0.0);
    kernel.pairs.assign(bins.size(), 0.0);
    double sum_sq = 0.0;
    std::size_t jumps = 0;
    for (const auto& path : paths) {
        kernels::add_price_price(path, bins, products, kernel.pairs);
        for (const double d : path.jumps) {
            sum_sq += d * d;
        }
        jumps += path.size();
    }
    if (jumps < 2) {
        throw DataError("autocorrelation needs at least two price jumps");
    }
    const double variance = sum_sq / static_cast<double>(jumps);
    if (!(variance > 0.0)) {
        throw DataError("autocorrelation: price increments have zero variance");
    }
    kernel.values.assign(bins.size(), 0.0);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        if (kernel.pairs[b] > 0.0) {
            kernel.values[b] = products[b] / kernel.pairs[b] / variance;
        }
    }
    return kernel;
}

PricePath surprise_price(const PricePath& micro, const AutocorrKernel& rho) {
    PricePath out = micro;
    out.label = PriceLabel::surprise;
    const double max_lag = rho.max_lag();
    std::size_t first = 0;
    for (std::size_t n = 0; n < micro.size(); ++n) {
        const double t = micro.times[n];
        while (first < n && t - micro.times[first] >= max_lag) {
            ++first;
        }
        double predicted = 0.0;
        for (std::size_t p = first; p < n; ++p) {
            predicted += rho.at(t - micro.times[p]) * micro.jumps[p];
        }
        out.jumps[n] = micro.jumps[n] - predicted;
    }
    return out;
}

MartingaleCheck martingale_check(std::span<const PricePath> paths, double total_time, double n_stderr) {
    if (!(total_time > 0.0)) {
        throw DataError("martingale check: total time must be positive");
    }
    double s1 = 0.0;
    double s2 = 0.0;
    for (const auto& path : paths) {
        for (const double d : path.jumps) {
            s1 += d;
            s2 += d * d;
        }
    }
    MartingaleCheck check;
    check.delta1 = s1 / total_time;
    check.tolerance = n_stderr * std::sqrt(s2 / total_time / total_time);
    return check;
}

double IntradayProfile::mean_rate() const {
    double mass = 0.0;
    for (std::size_t b = 0; b < rates.size(); ++b) {
        const double start = bin_width * static_cast<double>(b);
        mass += rates[b] * std::min(bin_width, span - start);
    }
    return mass / span;
}

double IntradayProfile::rescale(double t) const {
    if (t < 0.0 || t > span) {
        throw DataError(fmt::format("time {} is outside the intraday profile [0, {}]", t, span));
    }
    const double mean = mean_rate();
    const auto full = std::min(static_cast<std::size_t>(t / bin_width), rates.size() - 1);
    double tau = 0.0;
    for (std::size_t b = 0; b < full; ++b) {
        tau += rates[b] * bin_width;
    }
    tau += rates[full] * (t - bin_width * static_cast<double>(full));
    return tau / mean;
}

IntradayProfile build_intraday_profile(std::span<const SessionSeries> sessions, double bin_width) {
    if (sessions.empty()) {
        throw DataError("intraday profile needs at least one session");
    }
    if (!(bin_width > 0.0)) {
        throw ConfigError("intraday profile bin width must be positive");
    }
    IntradayProfile profile;
    profile.bin_width = bin_width;
    for (const auto& s : sessions) {
        profile.span = std::max(profile.span, s.duration);
    }
    if (!(profile.span > 0.0)) {
        throw DataError("intraday profile: sessions have zero length");
    }
    const auto n_bins = static_cast<std::size_t>(std::ceil(profile.span / bin_width));
    std::vector<double> counts(n_bins, 0.0);
    std::vector<double> exposure(n_bins, 0.0);
    for (const auto& s : sessions) {
        for (const auto& ev : s.events) {
            counts[std::min(static_cast<std::size_t>(ev.time / bin_width), n_bins - 1)] += 1.0;
        }
        for (std::size_t b = 0; b < n_bins; ++b) {
            const double start = bin_width * static_cast<double>(b);
            exposure[b] += std::clamp(s.duration - start, 0.0, bin_width);
        }
    }
    profile.rates.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (!(counts[b] > 0.0) || !(exposure[b] > 0.0)) {
            throw DataError(fmt::format("intraday profile: no events in bin starting at {} s",
                                        bin_width * static_cast<double>(b)));
        }
        profile.rates[b] = counts[b] / exposure[b];
    }
    return profile;
}

std::string profile_to_csv(const IntradayProfile& profile) {
    std::string out = "bin_start_s,rate\n";
    for (std::size_t b = 0; b < profile.rates.size(); ++b) {
        out += fmt::format("{},{}\n", io::format_double(profile.bin_width * static_cast<double>(b)),
                           io::format_double(profile.rates[b]));
    }
    return out;
}

SessionSeries rescale_time(const SessionSeries& session, const IntradayProfile& profile) {
    SessionSeries out = session;
    for (auto& ev : out.events) {
        ev.time = profile.rescale(ev.time);
    }
    out.duration = profile.rescale(session.duration);
    return out;
}

PricePath rescale_time(const PricePath& path, const IntradayProfile& profile) {
    PricePath out = path;
    for (auto& t : out.times) {
        t = profile.rescale(t);
    }
    return out;
}

} // namespace gqh::ingest
