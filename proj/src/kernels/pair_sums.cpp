#include "gqhawkes/kernels/pair_sums.hpp"

#include "chunked.hpp"
#include "gqhawkes/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace gqh::kernels {

namespace {

struct Anchor {
    double time;
    std::size_t type;
};

std::vector<Anchor> merge_events(const TypedEvents& events) {
    std::vector<Anchor> merged;
    merged.reserve(events.total());
    for (std::size_t i = 0; i < events.dim(); ++i) {
        for (const double t : events.times[i]) {
            merged.push_back({t, i});
        }
    }
    std::stable_sort(merged.begin(), merged.end(),
                     [](const Anchor& a, const Anchor& b) { return a.time < b.time; });
    return merged;
}

/// #{p : t - times[p] >= c}; a prefix of `times` because times are sorted.
std::size_t count_at_least(std::span<const double> times, double t, double c) {
    const auto it = std::partition_point(times.begin(), times.end(), [&](double s) { return t - s >= c; });
    return static_cast<std::size_t>(it - times.begin());
}

void advance(std::span<const double> times, double t, double c, std::size_t& ptr) {
    while (ptr < times.size() && t - times[ptr] >= c) {
        ++ptr;
    }
}

void check_sizes(std::span<double> out, std::size_t expected, const char* what) {
    if (out.size() != expected) {
        throw DataError(fmt::format("{}: output has {} entries, expected {}", what, out.size(), expected));
    }
}

/// Sliding window over sorted partner times holding every lag in
/// [bins.lo.front(), bins.hi.back()).
struct Window {
    std::size_t start{0};
    std::size_t end{0};

    void init(std::span<const double> times, double t, const grids::Bins& bins) {
        start = count_at_least(times, t, bins.max_lag());
        end = count_at_least(times, t, bins.lo.front());
    }
    void move_to(std::span<const double> times, double t, const grids::Bins& bins) {
        advance(times, t, bins.max_lag(), start);
        advance(times, t, bins.lo.front(), end);
    }

    /// Calls fn(b, p) for every partner p in the window whose lag is in bin b.
    /// Partners are visited in index order (decreasing lag).
    template <class Fn>
    void visit(std::span<const double> times, double t, const grids::Bins& bins, Fn&& fn) const {
        std::size_t b = bins.size() - 1;
        for (std::size_t p = start; p < end; ++p) {
            const double lag = t - times[p];
            while (lag < bins.lo[b]) {
                --b;
            }
            if (lag < bins.hi[b]) {
                fn(b, p);
            }
        }
    }
};

} // namespace

void add_event_event(const TypedEvents& events, const grids::Bins& bins, std::span<double> out) {
    bins.validate();
    const std::size_t dim = events.dim();
    const std::size_t nb = bins.size();
    check_sizes(out, dim * dim * nb, "event-event sums");

    std::vector<double> cuts(bins.lo);
    cuts.insert(cuts.end(), bins.hi.begin(), bins.hi.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const std::size_t nc = cuts.size();
    std::vector<std::size_t> lo_cut(nb);
    std::vector<std::size_t> hi_cut(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        lo_cut[b] = static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), bins.lo[b]) - cuts.begin());
        hi_cut[b] = static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), bins.hi[b]) - cuts.begin());
    }
    const bool zero_bin = bins.lo.front() == 0.0;

    const auto anchors = merge_events(events);
    detail::chunked_accumulate(anchors.size(), out, [&](std::size_t begin, std::size_t end, std::span<double> local) {
        std::vector<std::size_t> ptr(dim * nc);
        const double t0 = anchors[begin].time;
        for (std::size_t j = 0; j < dim; ++j) {
            for (std::size_t c = 0; c < nc; ++c) {
                ptr[j * nc + c] = count_at_least(events.times[j], t0, cuts[c]);
            }
        }
        for (std::size_t n = begin; n < end; ++n) {
            const double t = anchors[n].time;
            const std::size_t i = anchors[n].type;
            for (std::size_t j = 0; j < dim; ++j) {
                const std::span<const double> partner = events.times[j];
                std::size_t* pj = ptr.data() + j * nc;
                for (std::size_t c = 0; c < nc; ++c) {
                    advance(partner, t, cuts[c], pj[c]);
                }
                double* row = local.data() + (i * dim + j) * nb;
                for (std::size_t b = 0; b < nb; ++b) {
                    row[b] += static_cast<double>(pj[lo_cut[b]] - pj[hi_cut[b]]);
                }
                if (zero_bin && i == j) {
                    row[0] -= 1.0;
                }
            }
        }
    });
}

void add_event_price(const TypedEvents& events, const PricePath& price, const grids::Bins& bins,
                     std::span<double> np, std::span<double> np2, std::span<double> npp) {
    bins.validate();
    const std::size_t dim = events.dim();
    const std::size_t nb = bins.size();
    check_sizes(np, dim * nb, "event-price sums");
    check_sizes(np2, dim * nb, "event-price squared sums");
    const bool with_npp = !npp.empty();
    if (with_npp) {
        check_sizes(npp, dim * nb * nb, "event-price-price sums");
    }
    if (price.empty()) {
        return;
    }

    const std::size_t w1 = dim * nb;
    const std::size_t width = 2 * w1 + (with_npp ? dim * nb * nb : 0);
    std::vector<double> combined(width, 0.0);
    const std::span<const double> jumps = price.jumps;
    const std::span<const double> jump_times = price.times;

    const auto anchors = merge_events(events);
    detail::chunked_accumulate(anchors.size(), combined, [&](std::size_t begin, std::size_t end, std::span<double> local) {
        std::vector<double> sum(nb, 0.0);
        std::vector<double> sum_sq(nb, 0.0);
        std::vector<char> seen(nb, 0);
        std::vector<std::size_t> touched;
        touched.reserve(nb);
        Window window;
        window.init(jump_times, anchors[begin].time, bins);
        for (std::size_t n = begin; n < end; ++n) {
            const double t = anchors[n].time;
            const std::size_t i = anchors[n].type;
            window.move_to(jump_times, t, bins);
            window.visit(jump_times, t, bins, [&](std::size_t b, std::size_t p) {
                if (!seen[b]) {
                    seen[b] = 1;
                    touched.push_back(b);
                }
                sum[b] += jumps[p];
                sum_sq[b] += jumps[p] * jumps[p];
            });
            // touched is in decreasing bin order; sort for a fixed accumulation order
            std::sort(touched.begin(), touched.end());
            double* row_np = local.data() + i * nb;
            double* row_np2 = local.data() + w1 + i * nb;
            for (const std::size_t a : touched) {
                row_np[a] += sum[a];
                row_np2[a] += sum_sq[a];
            }
            if (with_npp) {
                double* surface = local.data() + 2 * w1 + i * nb * nb;
                for (const std::size_t a : touched) {
                    double* line = surface + a * nb;
                    for (const std::size_t b : touched) {
                        line[b] += a == b ? sum[a] * sum[a] - sum_sq[a] : sum[a] * sum[b];
                    }
                }
            }
            for (const std::size_t a : touched) {
                sum[a] = 0.0;
                sum_sq[a] = 0.0;
                seen[a] = 0;
            }
            touched.clear();
        }
    });
    for (std::size_t k = 0; k < w1; ++k) {
        np[k] += combined[k];
        np2[k] += combined[w1 + k];
    }
    if (with_npp) {
        for (std::size_t k = 0; k < npp.size(); ++k) {
            npp[k] += combined[2 * w1 + k];
        }
    }
}

namespace {

/// Shared driver for the two price-price estimators: for each anchor jump
/// n, fn(n, b, p) for every partner p != n with lag in bin b.
template <class Fn>
void price_pairs(const PricePath& price, const grids::Bins& bins, std::span<double> out, Fn&& fn) {
    const std::span<const double> times = price.times;
    detail::chunked_accumulate(times.size(), out, [&](std::size_t begin, std::size_t end, std::span<double> local) {
        Window window;
        window.init(times, times[begin], bins);
        for (std::size_t n = begin; n < end; ++n) {
            const double t = times[n];
            window.move_to(times, t, bins);
            fn(n, window, local);
        }
    });
}

} // namespace

void add_price_sq_price_sq(const PricePath& price, const grids::Bins& bins, std::span<double> out) {
    bins.validate();
    const std::size_t nb = bins.size();
    check_sizes(out, nb, "squared price sums");
    const std::span<const double> times = price.times;
    const std::span<const double> jumps = price.jumps;
    price_pairs(price, bins, out, [&](std::size_t n, const Window& window, std::span<double> local) {
        std::vector<double> sum_sq(nb, 0.0);
        window.visit(times, times[n], bins, [&](std::size_t b, std::size_t p) {
            if (p != n) {
                sum_sq[b] += jumps[p] * jumps[p];
            }
        });
        const double w = jumps[n] * jumps[n];
        for (std::size_t b = 0; b < nb; ++b) {
            local[b] += w * sum_sq[b];
        }
    });
}

void add_price_price(const PricePath& price, const grids::Bins& bins, std::span<double> products,
                     std::span<double> counts) {
    bins.validate();
    const std::size_t nb = bins.size();
    check_sizes(products, nb, "price product sums");
    check_sizes(counts, nb, "price pair counts");
    const std::span<const double> times = price.times;
    const std::span<const double> jumps = price.jumps;
    std::vector<double> combined(2 * nb, 0.0);
    price_pairs(price, bins, combined, [&](std::size_t n, const Window& window, std::span<double> local) {
        std::vector<double> sum(nb, 0.0);
        std::vector<double> count(nb, 0.0);
        window.visit(times, times[n], bins, [&](std::size_t b, std::size_t p) {
            if (p != n) {
                sum[b] += jumps[p];
                count[b] += 1.0;
            }
        });
        for (std::size_t b = 0; b < nb; ++b) {
            local[b] += jumps[n] * sum[b];
            local[nb + b] += count[b];
        }
    });
    for (std::size_t b = 0; b < nb; ++b) {
        products[b] += combined[b];
        counts[b] += combined[nb + b];
    }
}

} // namespace gqh::kernels
