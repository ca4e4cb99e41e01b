#pragma once

#include "gqhawkes/grids.hpp"
#include "gqhawkes/types.hpp"

#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gqh::ingest {

/// Parse one session file with header
/// `time_s,kind,side,volume,best_bid_ticks,best_ask_ticks,vol_bid,vol_ask`.
/// Malformed and crossed rows are dropped and listed in `rejected`; a
/// timestamp earlier than its predecessor is a DataError naming the line.
/// The session length is taken from a `# duration_s=<s>` comment when
/// present, else from the last event time.
[[nodiscard]] SessionSeries parse_session(std::string_view text, std::string name = {});
[[nodiscard]] SessionSeries read_session(const std::filesystem::path& path);
/// Inverse of parse_session for the accepted events.
[[nodiscard]] std::string session_to_csv(const SessionSeries& session);

/// Split events by canonical type index.
[[nodiscard]] TypedEvents typed_events(const SessionSeries& session);

/// Bid-ask mirror: swap sides and negate prices. Type i becomes 5 - i and
/// micro-price increments change sign.
[[nodiscard]] SessionSeries mirror(const SessionSeries& session);

[[nodiscard]] double micro_price_value(std::int64_t best_bid, std::int64_t best_ask, std::int64_t vol_bid,
                                       std::int64_t vol_ask);

/// Jumps of the volume-weighted mid. A jump is recorded when the value
/// moves by more than 1e-9 ticks; changes at one timestamp are combined.
[[nodiscard]] PricePath micro_price(const SessionSeries& session);

[[nodiscard]] std::string price_to_csv(const PricePath& path, std::string_view header_comment = {});
[[nodiscard]] PricePath price_from_csv(std::string_view text, PriceLabel label = PriceLabel::micro);

/// Binned correlation of price increments at positive lags.
struct AutocorrKernel {
    grids::Bins bins;
    std::vector<double> values;
    /// Number of jump pairs behind each value.
    std::vector<double> pairs;

    /// Value of the bin holding `lag`; 0 outside every bin.
    [[nodiscard]] double at(double lag) const noexcept;
    [[nodiscard]] double max_lag() const noexcept { return bins.max_lag(); }
};

/// Lag bins for the surprise-price regression: the price-grid layout cut
/// at `max_lag` (default 60 s).
[[nodiscard]] grids::Bins autocorr_bins(double max_lag = 60.0);

/// Pooled over all paths (no pair spans two paths):
/// rho_b = (sum dP_n dP_p / #pairs in b) / (sum dP^2 / #jumps).
[[nodiscard]] AutocorrKernel estimate_autocorr(std::span<const PricePath> paths, const grids::Bins& bins);

/// dP_t - sum_{s < t} rho(t - s) dP_s over past micro-price jumps within
/// the kernel support.
[[nodiscard]] PricePath surprise_price(const PricePath& micro, const AutocorrKernel& rho);

struct MartingaleCheck {
    double delta1{0.0};
    double tolerance{0.0};
    [[nodiscard]] bool ok() const noexcept { return std::abs(delta1) <= tolerance; }
};

/// Mean increment per unit time against `n_stderr` standard errors
/// sqrt(Delta_2 / T).
[[nodiscard]] MartingaleCheck martingale_check(std::span<const PricePath> paths, double total_time,
                                               double n_stderr = 3.0);

struct IntradayProfile {
    double bin_width{300.0};
    std::vector<double> rates;
    /// Time covered by the profile (the longest session).
    double span{0.0};

    /// Coverage-weighted mean rate over [0, span].
    [[nodiscard]] double mean_rate() const;
    /// tau(t) = int_0^t rate(s) / mean_rate ds.
    [[nodiscard]] double rescale(double t) const;
};

/// Total event rate per bin, pooled: sum of counts / sum of exposure.
[[nodiscard]] IntradayProfile build_intraday_profile(std::span<const SessionSeries> sessions,
                                                     double bin_width = 300.0);

[[nodiscard]] std::string profile_to_csv(const IntradayProfile& profile);

[[nodiscard]] SessionSeries rescale_time(const SessionSeries& session, const IntradayProfile& profile);
[[nodiscard]] PricePath rescale_time(const PricePath& path, const IntradayProfile& profile);

} // namespace gqh::ingest
