#include "gqhawkes/kernels/pair_sums.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

namespace gqh::kernels::reference {

namespace {

std::optional<std::size_t> find_bin(const grids::Bins& bins, double lag) {
    for (std::size_t b = 0; b < bins.size(); ++b) {
        if (bins.lo[b] <= lag && lag < bins.hi[b]) {
            return b;
        }
    }
    return std::nullopt;
}

} // namespace

void add_event_event(const TypedEvents& events, const grids::Bins& bins, std::span<double> out) {
    const std::size_t dim = events.dim();
    const std::size_t nb = bins.size();
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            const auto& ti = events.times[i];
            const auto& tj = events.times[j];
            for (std::size_t n = 0; n < ti.size(); ++n) {
                for (std::size_t p = 0; p < tj.size(); ++p) {
                    if (i == j && n == p) {
                        continue;
                    }
                    const double lag = ti[n] - tj[p];
                    if (lag < 0.0 || lag >= bins.max_lag()) {
                        continue;
                    }
                    if (const auto b = find_bin(bins, lag)) {
                        out[(i * dim + j) * nb + *b] += 1.0;
                    }
                }
            }
        }
    }
}

void add_event_price(const TypedEvents& events, const PricePath& price, const grids::Bins& bins,
                     std::span<double> np, std::span<double> np2, std::span<double> npp, Scales* scales) {
    const std::size_t dim = events.dim();
    const std::size_t nb = bins.size();
    if (scales != nullptr) {
        scales->np.assign(dim * nb, 0.0);
        scales->npp.assign(npp.empty() ? 0 : dim * nb * nb, 0.0);
    }
    const std::size_t np_jumps = price.size();
    std::vector<std::pair<std::size_t, std::size_t>> hits;
    for (std::size_t i = 0; i < dim; ++i) {
        for (const double t : events.times[i]) {
            hits.clear();
            for (std::size_t p = 0; p < np_jumps; ++p) {
                const double lag = t - price.times[p];
                if (lag < 0.0 || lag >= bins.max_lag()) {
                    continue;
                }
                if (const auto b = find_bin(bins, lag)) {
                    hits.emplace_back(p, *b);
                }
            }
            for (const auto& [p, a] : hits) {
                const double dp = price.jumps[p];
                np[i * nb + a] += dp;
                np2[i * nb + a] += dp * dp;
                if (scales != nullptr) {
                    scales->np[i * nb + a] += std::abs(dp);
                }
                if (npp.empty()) {
                    continue;
                }
                for (const auto& [q, b] : hits) {
                    if (q == p) {
                        continue;
                    }
                    const std::size_t k = (i * nb + a) * nb + b;
                    npp[k] += dp * price.jumps[q];
                    if (scales != nullptr) {
                        scales->npp[k] += std::abs(dp * price.jumps[q]);
                    }
                }
            }
        }
    }
}

void add_price_sq_price_sq(const PricePath& price, const grids::Bins& bins, std::span<double> out) {
    for (std::size_t n = 0; n < price.size(); ++n) {
        for (std::size_t p = 0; p < price.size(); ++p) {
            if (p == n) {
                continue;
            }
            const double lag = price.times[n] - price.times[p];
            if (lag < 0.0 || lag >= bins.max_lag()) {
                continue;
            }
            if (const auto b = find_bin(bins, lag)) {
                out[*b] += price.jumps[n] * price.jumps[n] * price.jumps[p] * price.jumps[p];
            }
        }
    }
}

void add_price_price(const PricePath& price, const grids::Bins& bins, std::span<double> products,
                     std::span<double> counts) {
    for (std::size_t n = 0; n < price.size(); ++n) {
        for (std::size_t p = 0; p < price.size(); ++p) {
            if (p == n) {
                continue;
            }
            const double lag = price.times[n] - price.times[p];
            if (lag < 0.0 || lag >= bins.max_lag()) {
                continue;
            }
            if (const auto b = find_bin(bins, lag)) {
                products[*b] += price.jumps[n] * price.jumps[p];
                counts[*b] += 1.0;
            }
        }
    }
}

} // namespace gqh::kernels::reference
