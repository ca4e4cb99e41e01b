#pragma once

#include "gqhawkes/grids.hpp"
#include "gqhawkes/types.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gqh::liquidity {

struct Level {
    std::int64_t tick{0};
    double volume{0.0};
};

/// Depth on both sides at one instant. Ask levels are sorted by increasing
/// tick, bid levels by decreasing tick (best first on both sides).
struct BookSnapshot {
    double time{0.0};
    std::vector<Level> ask;
    std::vector<Level> bid;

    /// Throws DataError on negative volumes, unsorted levels or a crossed book.
    void validate() const;
};

/// Snapshots from CSV with header `time_s,side,tick,volume` (side is `a` or
/// `b`); consecutive rows with the same time form one snapshot.
[[nodiscard]] std::vector<BookSnapshot> parse_book(std::string_view text);
[[nodiscard]] std::string book_to_csv(std::span<const BookSnapshot> book);

/// Distance in ticks between the first ask level and the first bid level
/// at which the cumulative depth reaches `v_best`. Throws DataError naming
/// the side when the book is too shallow.
[[nodiscard]] std::int64_t effective_spread(const BookSnapshot& book, double v_best);

/// Plain best ask minus best bid over non-empty levels.
[[nodiscard]] std::int64_t plain_spread(const BookSnapshot& book);

/// Mean of (bid + ask volume at the best levels) / 2 over the snapshots.
[[nodiscard]] double default_reference_volume(std::span<const BookSnapshot> book);

/// Effective spread at each sample time, using the last snapshot at or
/// before it (NaN before the first snapshot).
[[nodiscard]] std::vector<double> spread_series(std::span<const BookSnapshot> book, double v_best,
                                                std::span<const double> times);

struct SurvivalTail {
    /// Distinct sample values and the empirical P(S > value).
    std::vector<double> values;
    std::vector<double> survival;
    /// Fitted P(S > s) ~ s^(-exponent) over the top decade of values.
    double exponent{0.0};
    double intercept{0.0};
    std::size_t fit_points{0};
};

/// Needs at least 100 samples; throws DataError on a constant series or
/// when the top decade holds fewer than three distinct values.
[[nodiscard]] SurvivalTail survival_tail(std::span<const double> samples);
[[nodiscard]] std::string survival_to_csv(const SurvivalTail& tail, std::string_view header_comment = {});

/// Normalized decay kernels on the grid points (sum w psi = sum w Z^2 = 1
/// up to `cutoff`). Between points they are interpolated linearly on the
/// grid nodes, node 0 taking the value of the first point.
struct SignalKernels {
    grids::TimeGrid grid;
    std::vector<double> psi;
    std::vector<double> z;
    double cutoff{1000.0};

    /// Throws ConfigError when a normalization is off by more than `tolerance`.
    void validate(double tolerance = 1e-6) const;
    [[nodiscard]] double psi_at(double lag) const noexcept;
    [[nodiscard]] double z_at(double lag) const noexcept;
};

struct SignalSeries {
    std::vector<double> t;
    std::vector<double> sigma2;
    std::vector<double> mu;
    std::vector<double> mu2;
    /// mu^2 / sigma^2, NaN where sigma^2 is at or below the floor.
    std::vector<double> ratio;
    std::vector<double> seff;
    double floor{0.0};
    std::size_t floored{0};
};

/// Regular sample times step, 2 step, ... up to `duration`.
[[nodiscard]] std::vector<double> sample_times(double duration, double step = 1.0);

/// sigma^2(t) = sum_{s < t} psi(t - s) dP_s^2 and mu(t) = sum_{s < t} Z(t - s) dP_s,
/// jumps older than the cut-off ignored. The ratio is filled by apply_ratio_floor.
[[nodiscard]] SignalSeries signals(const PricePath& price, const SignalKernels& kernels,
                                   std::span<const double> times);

/// Set ratio = mu^2 / sigma^2 where sigma^2 exceeds its `quantile` quantile
/// (taken over all given series together) and count the excluded samples.
void apply_ratio_floor(std::span<SignalSeries> series, double quantile = 0.01);

[[nodiscard]] std::string signals_to_csv(const SignalSeries& series, std::string_view header_comment = {});

/// Cor[x(t + tau), y(t)] for tau = lag * step, lag in [-max_lag, max_lag].
/// Pairs with a non-finite member are skipped.
struct LaggedCorrelation {
    std::vector<long> lags;
    std::vector<double> values;
    /// Pairs behind each value.
    std::vector<double> pairs;
};

/// Throws DataError when either series has zero variance.
[[nodiscard]] LaggedCorrelation lagged_correlation(std::span<const double> x, std::span<const double> y,
                                                   long max_lag);

/// Average of per-session correlations weighted by session length.
[[nodiscard]] LaggedCorrelation pool_correlations(std::span<const LaggedCorrelation> sessions,
                                                  std::span<const double> weights);

/// Columns tau,C_mu,C_sigma,C_T.
[[nodiscard]] std::string correlations_to_csv(const LaggedCorrelation& c_mu, const LaggedCorrelation& c_sigma,
                                              const LaggedCorrelation& c_t, double step,
                                              std::string_view header_comment = {});

/// Strengths and average volume of one order kind.
struct FlowInput {
    double kd{0.0};
    double k1{0.0};
    double volume{0.0};
};

struct FlowContribution {
    /// +1 for limit orders, -1 for cancels and market orders.
    double sign{0.0};
    double diagonal{0.0};
    double rank_one{0.0};
    [[nodiscard]] double total() const noexcept { return diagonal + rank_one; }
};

struct LiquidityFlux {
    double j{0.0};
    FlowContribution limit;
    FlowContribution cancel;
    FlowContribution market;
    double diagonal{0.0};
    double rank_one{0.0};
};

/// J = (||K^LO|| V^LO - ||K^C|| V^C - ||K^MO|| V^MO) D2 with ||K|| = kd + k1,
/// split into the kd and k1 parts of each kind.
[[nodiscard]] LiquidityFlux liquidity_flux(const FlowInput& limit, const FlowInput& cancel, const FlowInput& market,
                                           double delta2);

/// Total, per-mechanism and per-kind parts; `meta` is stored under "meta".
[[nodiscard]] nlohmann::json flux_to_json(const LiquidityFlux& flux, const nlohmann::json& meta = {});

} // namespace gqh::liquidity
