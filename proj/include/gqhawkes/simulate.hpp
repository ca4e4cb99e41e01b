#pragma once

#include "gqhawkes/liquidity.hpp"
#include "gqhawkes/types.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gqh::simulate {

/// f(t) = sum_j weight_j exp(-rate_j t) for t > 0.
struct ExpSum {
    std::vector<double> weight;
    std::vector<double> rate;

    [[nodiscard]] std::size_t terms() const noexcept { return weight.size(); }
    [[nodiscard]] bool empty() const noexcept { return weight.empty(); }
    [[nodiscard]] double operator()(double t) const noexcept;
    [[nodiscard]] double integral() const noexcept;
    [[nodiscard]] double square_integral() const noexcept;
    /// Same shape scaled by `factor`.
    [[nodiscard]] ExpSum scaled(double factor) const;
    /// Throws ConfigError on mismatched sizes or non-positive rates.
    void validate(const std::string& what) const;
};

[[nodiscard]] ExpSum exponential(double weight, double rate);

struct PowerLawFit {
    ExpSum kernel;
    double max_relative_error{0.0};
};

/// amplitude (1 + t / scale)^(-exponent) approximated by `terms`
/// exponentials, fitted in relative least squares on log-spaced points of
/// [lo, hi]. Throws ConfigError when the maximum relative error on those
/// points exceeds `max_error`.
[[nodiscard]] PowerLawFit fit_power_law(double amplitude, double scale, double exponent, std::size_t terms = 5,
                                        double lo = 0.1, double hi = 1000.0, double max_error = 0.05);

/// Symmetric jump-size law: discrete values with probabilities, or Gaussian.
struct PriceLaw {
    enum class Kind : std::uint8_t { discrete, gaussian };
    Kind kind{Kind::discrete};
    std::vector<double> values{-1.0, 1.0};
    std::vector<double> probabilities{0.5, 0.5};
    double variance{1.0};

    /// E[J^k].
    [[nodiscard]] double moment(int k) const;
    /// Throws ConfigError unless the law is proper with mean 0.
    void validate() const;
};

/// Queues on `depth` levels per side, attached to the exogenous price: the
/// reference tick follows round(P) and levels are relabelled with it. Limit
/// orders fill the innermost level below `level_cap`, cancels take from the
/// innermost non-empty level, market orders walk the book. The last level
/// never drops below `level_cap`.
struct BookConfig {
    std::size_t depth{10};
    double initial_volume{5.0};
    double level_cap{20.0};
    /// Order size per kind: cancel, limit, market.
    std::array<double, 3> order_volume{1.0, 1.0, 1.0};
    std::int64_t start_tick{10000};
    /// Snapshot spacing in seconds; 0 disables snapshots.
    double snapshot_interval{1.0};
};

struct SimConfig {
    std::size_t dim{kNumEventTypes};
    std::vector<double> alpha0;
    /// phi[i * dim + k]: rate boost of type i per event of type k.
    std::vector<ExpSum> phi;
    std::vector<ExpSum> l;
    std::vector<double> kd;
    std::vector<double> k1;
    ExpSum psi;
    ExpSum z;
    double price_rate{1.0};
    PriceLaw law;
    double horizon{1000.0};
    std::uint64_t seed{1};
    /// Abort when the total intensity bound exceeds this.
    double intensity_cap{1e6};
    BookConfig book;

    /// Throws ConfigError on inconsistent sizes, negative base rates, a
    /// Hawkes spectral radius >= 1 or an improper price law.
    void validate() const;
    [[nodiscard]] const ExpSum& phi_at(std::size_t i, std::size_t k) const { return phi[i * dim + k]; }
};

/// JSON layout: {"dim", "alpha0": [..], "phi": [[{"weight": [..], "rate": [..]}, ..], ..],
/// "L": [..], "kd": [..], "k1": [..], "psi": {..}, "Z": {..}, "price": {"rate",
/// "law": "discrete"|"gaussian", "values", "probabilities", "variance"},
/// "horizon", "seed", "intensity_cap", "book": {..}}. Kernels may instead be
/// given as {"power_law": {"amplitude", "scale", "exponent"}}.
[[nodiscard]] SimConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json config_to_json(const SimConfig& config);

/// Independent generator for (seed, session index, stream).
[[nodiscard]] std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

/// Compound Poisson path on [0, horizon).
[[nodiscard]] PricePath simulate_price(double rate, const PriceLaw& law, double horizon, std::mt19937_64& rng);

struct SimOutput {
    /// Event times and types in time order.
    std::vector<double> times;
    std::vector<std::uint8_t> types;
    PricePath price;
    double horizon{0.0};
    /// Evaluations where the raw intensity of some type was negative.
    std::size_t clipped{0};
    std::size_t proposals{0};
    /// Best quotes after every event (dim 6 only).
    std::vector<OrderBookEvent> quotes;
    std::vector<liquidity::BookSnapshot> book;

    [[nodiscard]] TypedEvents typed(std::size_t dim) const;
    [[nodiscard]] SessionData session(std::size_t dim) const;
};

/// Ogata thinning with the exponential terms carried as Markov states.
/// The stylized book is run when dim == 6. Throws NumericalError when the
/// intensity bound exceeds the cap.
[[nodiscard]] SimOutput simulate_events(const SimConfig& config, const PricePath& price, std::mt19937_64& rng);

/// Price and events for session `index`, each from its own stream.
[[nodiscard]] SimOutput simulate_session(const SimConfig& config, std::uint64_t index);

/// Best-quote session in the ingest CSV layout (dim 6 only).
[[nodiscard]] SessionSeries to_session_series(const SimOutput& output, std::string name);

/// Lambda = (I - ||phi||)^{-1} (alpha0 + (kd int psi + k1 int Z^2) D2).
[[nodiscard]] std::vector<double> analytic_moments(const SimConfig& config);

} // namespace gqh::simulate
