#pragma once

// Binned pair sums behind every covariance estimator.
//
// Each routine adds raw (unnormalized) sums into caller-owned buffers so
// that sessions can be folded one after the other and accumulators merged
// by plain addition. Lags are anchor time minus partner time; a lag x is
// counted in bin b when bins.lo[b] <= x < bins.hi[b]. The anchor itself is
// never its own partner.
//
// The default implementations split anchors into a fixed number of chunks
// processed under OpenMP and reduce the chunk partials in order, so results
// do not depend on the thread count. `reference::` holds the plain
// double-loop versions the fast ones are tested against.

#include "gqhawkes/grids.hpp"
#include "gqhawkes/types.hpp"

#include <cstddef>
#include <span>

namespace gqh::kernels {

/// out[(i*dim + j)*nb + b] += #{(n, p) : T^i_n - T^j_p in bin b}.
void add_event_event(const TypedEvents& events, const grids::Bins& bins, std::span<double> out);

/// For every event n of type i:
///   np [i*nb + b]          += sum_p dP_p        over jumps with T_n - T_p in bin b
///   np2[i*nb + b]          += sum_p dP_p^2
///   npp[(i*nb + a)*nb + b] += sum_{p != q} dP_p dP_q with lags in bins a and b
/// `npp` may be empty to skip the two-dimensional sums.
void add_event_price(const TypedEvents& events, const PricePath& price, const grids::Bins& bins,
                     std::span<double> np, std::span<double> np2, std::span<double> npp);

/// out[b] += sum_{n != p} dP_n^2 dP_p^2 over jump pairs with T_n - T_p in bin b.
void add_price_sq_price_sq(const PricePath& price, const grids::Bins& bins, std::span<double> out);

/// products[b] += sum_{n != p} dP_n dP_p and counts[b] += #pairs, lag in bin b.
void add_price_price(const PricePath& price, const grids::Bins& bins, std::span<double> products,
                     std::span<double> counts);

namespace reference {

/// Magnitude of the terms behind each sum: the same estimator applied to
/// absolute values. Used as the scale for relative comparisons since signed
/// sums can cancel to zero.
struct Scales {
    std::vector<double> np;
    std::vector<double> npp;
};

void add_event_event(const TypedEvents& events, const grids::Bins& bins, std::span<double> out);
void add_event_price(const TypedEvents& events, const PricePath& price, const grids::Bins& bins,
                     std::span<double> np, std::span<double> np2, std::span<double> npp,
                     Scales* scales = nullptr);
void add_price_sq_price_sq(const PricePath& price, const grids::Bins& bins, std::span<double> out);
void add_price_price(const PricePath& price, const grids::Bins& bins, std::span<double> products,
                     std::span<double> counts);

} // namespace reference

} // namespace gqh::kernels
