#pragma once

#include "gqhawkes/grids.hpp"
#include "gqhawkes/types.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gqh::moments {

/// Dense row-major matrix used for two-argument curves.
struct Surface {
    std::size_t rows{0};
    std::size_t cols{0};
    std::vector<double> data;

    Surface() = default;
    Surface(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    [[nodiscard]] double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
};

/// Empirical means and binned covariances of event counts and price jumps.
///
/// The set keeps the raw sums (event counts, power sums of the jumps, binned
/// pair sums) so that sets built from disjoint sessions merge by addition.
/// Normalized values are recomputed from the sums on every merge; after
/// `symmetrize_bid_ask` the normalized values no longer follow from the raw
/// sums and the set refuses further merges.
///
/// Two-lag covariances are stored per estimation bin. `curves()` maps them
/// onto the grid nodes used by the solvers.
class MomentSet {
public:
    MomentSet() = default;
    MomentSet(std::size_t dim, grids::TimeGrid hawkes_grid, grids::TimeGrid price_grid, bool with_npp = true);

    /// Fold one session into the sums.
    void add_session(const SessionData& session);
    /// Add the sums of another set built on the same grids.
    void merge(const MomentSet& other);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] const grids::TimeGrid& hawkes_grid() const noexcept { return hawkes_; }
    [[nodiscard]] const grids::TimeGrid& price_grid() const noexcept { return price_; }
    [[nodiscard]] bool has_npp() const noexcept { return with_npp_; }
    [[nodiscard]] bool symmetrized() const noexcept { return symmetrized_; }
    [[nodiscard]] std::size_t sessions() const noexcept { return sessions_; }

    [[nodiscard]] double duration() const noexcept { return duration_; }
    [[nodiscard]] std::span<const double> counts() const noexcept { return counts_; }
    /// sum over jumps of dP^k, k = 0..4.
    [[nodiscard]] const std::array<double, 5>& power_sums() const noexcept { return power_sums_; }

    [[nodiscard]] double lambda(std::size_t i) const noexcept { return lambda_[i]; }
    [[nodiscard]] std::span<const double> lambda() const noexcept { return lambda_; }
    /// Delta_k = sum dP^k / T for k = 1..4.
    [[nodiscard]] double delta(std::size_t k) const noexcept { return delta_[k]; }

    /// Normalized binned estimates.
    [[nodiscard]] double chi_nn(std::size_t i, std::size_t j, std::size_t b) const noexcept {
        return nn_[(i * dim_ + j) * hawkes_.size() + b];
    }
    [[nodiscard]] double chi_np(std::size_t i, std::size_t b) const noexcept { return np_[i * price_.size() + b]; }
    [[nodiscard]] double chi_np2(std::size_t i, std::size_t b) const noexcept { return np2_[i * price_.size() + b]; }
    [[nodiscard]] double chi_npp(std::size_t i, std::size_t a, std::size_t b) const noexcept {
        return npp_[(i * price_.size() + a) * price_.size() + b];
    }
    [[nodiscard]] double chi_p2p2(std::size_t b) const noexcept { return p2p2_[b]; }

    /// Raw binned sums behind the estimates, laid out like the values.
    [[nodiscard]] std::span<const double> nn_sums() const noexcept { return nn_sum_; }
    [[nodiscard]] std::span<const double> np_sums() const noexcept { return np_sum_; }
    [[nodiscard]] std::span<const double> np2_sums() const noexcept { return np2_sum_; }
    [[nodiscard]] std::span<const double> npp_sums() const noexcept { return npp_sum_; }
    [[nodiscard]] std::span<const double> p2p2_sums() const noexcept { return p2p2_sum_; }

    [[nodiscard]] std::span<const double> nn_values() const noexcept { return nn_; }
    [[nodiscard]] std::span<const double> np_values() const noexcept { return np_; }
    [[nodiscard]] std::span<const double> np2_values() const noexcept { return np2_; }
    [[nodiscard]] std::span<const double> npp_values() const noexcept { return npp_; }
    [[nodiscard]] std::span<const double> p2p2_values() const noexcept { return p2p2_; }

    /// Files written by `write`: scalars.csv, chi_nn.csv, chi_np.csv,
    /// chi_np2.csv, chi_npp.csv, chi_p2p2.csv, hawkes_grid.csv, price_grid.csv.
    void write(const std::string& directory, const std::string& header_comment = {}) const;
    [[nodiscard]] static MomentSet read(const std::string& directory);

    friend MomentSet symmetrize_bid_ask(const MomentSet& set);

private:
    std::size_t dim_{0};
    grids::TimeGrid hawkes_;
    grids::TimeGrid price_;
    bool with_npp_{true};
    bool symmetrized_{false};
    std::size_t sessions_{0};

    double duration_{0.0};
    std::vector<double> counts_;
    std::array<double, 5> power_sums_{};
    std::vector<double> nn_sum_, np_sum_, np2_sum_, npp_sum_, p2p2_sum_;

    std::vector<double> lambda_;
    std::array<double, 5> delta_{};
    std::vector<double> nn_, np_, np2_, npp_, p2p2_;

    void normalize();
};

/// Average every estimate with its bid-ask mirror (i -> dim-1-i). Odd
/// powers of dP change sign under the mirror.
[[nodiscard]] MomentSet symmetrize_bid_ask(const MomentSet& set);

/// Session-level jackknife standard errors of the one-lag estimates.
struct JackknifeErrors {
    std::vector<double> nn;
    std::vector<double> np;
    std::vector<double> np2;
    std::vector<double> p2p2;
};

/// `per_session` holds one set per session, all on the same grids.
[[nodiscard]] JackknifeErrors jackknife(std::span<const MomentSet> per_session);

/// Moment curves on grid nodes (t = 0 followed by the grid points): the
/// form consumed by the solvers. Node values come from linear interpolation
/// between bin centers.
struct MomentCurves {
    std::size_t dim{0};
    double duration{0.0};
    std::vector<double> lambda;
    std::array<double, 5> delta{};
    grids::TimeGrid hawkes_grid;
    grids::TimeGrid price_grid;
    /// nn[i * dim + j] on hawkes nodes; np, np2 [i] on price nodes.
    std::vector<std::vector<double>> nn;
    std::vector<std::vector<double>> np;
    std::vector<std::vector<double>> np2;
    /// npp[i] on price nodes x price nodes, symmetric.
    std::vector<Surface> npp;
    std::vector<double> p2p2;

    [[nodiscard]] const std::vector<double>& chi_nn(std::size_t i, std::size_t j) const { return nn[i * dim + j]; }
};

[[nodiscard]] MomentCurves curves(const MomentSet& set);

/// Parameters of chi_P2P2(t) = A (1 + t/B)^(-C).
struct PowerLawFit {
    double a{0.0};
    double b{0.0};
    double c{0.0};
    /// RMS residual of the log fit.
    double rms{0.0};
    std::size_t used_points{0};

    [[nodiscard]] double operator()(double t) const noexcept;
};

/// Least squares in log space over the strictly positive samples.
[[nodiscard]] PowerLawFit fit_p2p2_powerlaw(std::span<const double> t, std::span<const double> values);

enum class SignChangePolicy { raise, split };

/// log|chi| as a polynomial in log t, with a fixed sign per segment.
struct LogPolynomialFit {
    struct Segment {
        double t_lo{0.0};
        double t_hi{0.0};
        double sign{1.0};
        /// Coefficients of 1, log t, (log t)^2, ...
        std::vector<double> coefficients;
    };
    std::vector<Segment> segments;
    double rms{0.0};

    [[nodiscard]] double operator()(double t) const noexcept;
};

/// Zero samples are skipped. With `raise`, a sign change throws DataError;
/// with `split`, every run of constant sign gets its own polynomial (the
/// degree is lowered for short runs).
[[nodiscard]] LogPolynomialFit fit_log_polynomial(std::span<const double> t, std::span<const double> values,
                                                  std::size_t degree = 5,
                                                  SignChangePolicy policy = SignChangePolicy::split);

struct SmoothingOptions {
    bool p2p2_powerlaw{true};
    bool log_polynomial{true};
    std::size_t degree{5};
    SignChangePolicy policy{SignChangePolicy::split};
};

/// Replace chi_NP, chi_NP2 (log-polynomial) and chi_P2P2 (power law) node
/// values by their fits. Node 0 takes the fitted value at the first point.
[[nodiscard]] MomentCurves smooth(const MomentCurves& raw, const SmoothingOptions& options = {});

} // namespace gqh::moments
