#include "gqhawkes/simulate.hpp"

#include "gqhawkes/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gqh::simulate {

namespace {

/// One exponential term carried as a Markov state: value(t) = value(t0) exp(-rate (t - t0)).
struct Term {
    double rate{0.0};
    double weight{0.0};
    double value{0.0};
    std::size_t target{0};
};

void decay(std::vector<Term>& terms, double dt) {
    for (auto& term : terms) {
        term.value *= std::exp(-term.rate * dt);
    }
}

class Book {
public:
    explicit Book(const BookConfig& config)
        : config_(config), ask_(config.depth, config.initial_volume), bid_(config.depth, config.initial_volume) {
        enforce_wall();
    }

    void move_price(double price) { reference_ = config_.start_tick + std::llround(price); }

    void apply(EventKind kind, Side side) {
        auto& q = side == Side::ask ? ask_ : bid_;
        const double volume = config_.order_volume[static_cast<std::size_t>(kind)];
        switch (kind) {
        case EventKind::limit:
            for (auto& level : q) {
                if (level < config_.level_cap) {
                    level = std::min(config_.level_cap, level + volume);
                    break;
                }
            }
            break;
        case EventKind::cancel:
            for (auto& level : q) {
                if (level > 0.0) {
                    level = std::max(0.0, level - volume);
                    break;
                }
            }
            break;
        case EventKind::market: {
            double left = volume;
            for (auto& level : q) {
                const double take = std::min(level, left);
                level -= take;
                left -= take;
                if (left <= 0.0) {
                    break;
                }
            }
            break;
        }
        }
        enforce_wall();
    }

    [[nodiscard]] OrderBookEvent quotes(double time, EventKind kind, Side side) const {
        OrderBookEvent ev;
        ev.time = time;
        ev.kind = kind;
        ev.side = side;
        ev.volume = std::llround(config_.order_volume[static_cast<std::size_t>(kind)]);
        const auto a = first_filled(ask_);
        const auto b = first_filled(bid_);
        ev.best_ask = reference_ + 1 + static_cast<std::int64_t>(a);
        ev.best_bid = reference_ - static_cast<std::int64_t>(b);
        ev.vol_ask = std::llround(ask_[a]);
        ev.vol_bid = std::llround(bid_[b]);
        return ev;
    }

    [[nodiscard]] liquidity::BookSnapshot snapshot(double time) const {
        liquidity::BookSnapshot s;
        s.time = time;
        for (std::size_t d = 0; d < ask_.size(); ++d) {
            s.ask.push_back({reference_ + 1 + static_cast<std::int64_t>(d), ask_[d]});
            s.bid.push_back({reference_ - static_cast<std::int64_t>(d), bid_[d]});
        }
        return s;
    }

private:
    BookConfig config_;
    std::int64_t reference_{config_.start_tick};
    std::vector<double> ask_;
    std::vector<double> bid_;

    void enforce_wall() {
        ask_.back() = std::max(ask_.back(), config_.level_cap);
        bid_.back() = std::max(bid_.back(), config_.level_cap);
    }

    [[nodiscard]] static std::size_t first_filled(const std::vector<double>& q) {
        for (std::size_t d = 0; d < q.size(); ++d) {
            if (q[d] >= 0.5) {
                return d;
            }
        }
        return q.size() - 1;
    }
};

} // namespace

TypedEvents SimOutput::typed(std::size_t dim) const {
    TypedEvents out;
    out.duration = horizon;
    out.times.assign(dim, {});
    for (std::size_t n = 0; n < times.size(); ++n) {
        out.times[types[n]].push_back(times[n]);
    }
    return out;
}

SessionData SimOutput::session(std::size_t dim) const { return {typed(dim), price}; }

PricePath simulate_price(double rate, const PriceLaw& law, double horizon, std::mt19937_64& rng) {
    law.validate();
    PricePath path;
    path.label = PriceLabel::exogenous;
    if (!(rate > 0.0)) {
        return path;
    }
    std::exponential_distribution<double> gap(rate);
    std::discrete_distribution<std::size_t> pick(law.probabilities.begin(), law.probabilities.end());
    std::normal_distribution<double> gauss(0.0, std::sqrt(law.variance));
    double t = 0.0;
    while ((t += gap(rng)) < horizon) {
        path.times.push_back(t);
        path.jumps.push_back(law.kind == PriceLaw::Kind::gaussian ? gauss(rng) : law.values[pick(rng)]);
    }
    return path;
}

SimOutput simulate_events(const SimConfig& config, const PricePath& price, std::mt19937_64& rng) {
    config.validate();
    const std::size_t dim = config.dim;
    std::vector<Term> linear;
    std::vector<std::vector<std::size_t>> by_source(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t k = 0; k < dim; ++k) {
            const auto& kernel = config.phi_at(i, k);
            for (std::size_t j = 0; j < kernel.terms(); ++j) {
                by_source[k].push_back(linear.size());
                linear.push_back({kernel.rate[j], kernel.weight[j], 0.0, i});
            }
        }
    }
    std::vector<std::size_t> price_linear;
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < config.l[i].terms(); ++j) {
            price_linear.push_back(linear.size());
            linear.push_back({config.l[i].rate[j], config.l[i].weight[j], 0.0, i});
        }
    }
    std::vector<Term> sigma;
    for (std::size_t j = 0; j < config.psi.terms(); ++j) {
        sigma.push_back({config.psi.rate[j], config.psi.weight[j], 0.0, 0});
    }
    std::vector<Term> trend;
    for (std::size_t j = 0; j < config.z.terms(); ++j) {
        trend.push_back({config.z.rate[j], config.z.weight[j], 0.0, 0});
    }

    const bool with_book = dim == kNumEventTypes;
    Book book(config.book);
    SimOutput out;
    out.horizon = config.horizon;
    out.price = price;
    out.price.label = PriceLabel::exogenous;

    const double interval = with_book ? config.book.snapshot_interval : 0.0;
    std::size_t next_snapshot = 1;
    const auto flush = [&](double before) {
        if (!(interval > 0.0)) {
            return;
        }
        for (;; ++next_snapshot) {
            const double tau = interval * static_cast<double>(next_snapshot);
            if (!(tau < before) || tau > config.horizon) {
                return;
            }
            out.book.push_back(book.snapshot(tau));
        }
    };

    std::vector<double> bound(dim);
    std::vector<double> intensity(dim);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> unit_gap(1.0);
    double t = 0.0;
    double level = 0.0;
    std::size_t next_jump = 0;

    while (true) {
        std::fill(bound.begin(), bound.end(), 0.0);
        for (const auto& term : linear) {
            bound[term.target] += std::max(0.0, term.value);
        }
        double sigma_pos = 0.0;
        for (const auto& s : sigma) {
            sigma_pos += std::max(0.0, s.weight * s.value);
        }
        double mu_abs = 0.0;
        for (const auto& m : trend) {
            mu_abs += std::abs(m.weight * m.value);
        }
        double total_bound = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            bound[i] += config.alpha0[i] + std::max(config.kd[i], 0.0) * sigma_pos +
                        std::max(config.k1[i], 0.0) * mu_abs * mu_abs;
            total_bound += bound[i];
        }
        if (!(total_bound <= config.intensity_cap)) {
            std::string trace;
            for (std::size_t i = 0; i < dim; ++i) {
                trace += fmt::format(" {:.4g}", bound[i]);
            }
            throw NumericalError(fmt::format("runaway intensity at t = {:.6g} s: bound {:.6g} above the cap {:.6g}; "
                                             "per-type bounds{}; {} events so far",
                                             t, total_bound, config.intensity_cap, trace, out.times.size()));
        }
        const double jump_time = next_jump < price.size() ? price.times[next_jump] : config.horizon;
        const double stop = std::min(jump_time, config.horizon);
        const double candidate = total_bound > 0.0 ? t + unit_gap(rng) / total_bound
                                                   : std::numeric_limits<double>::infinity();
        if (candidate >= stop) {
            decay(linear, stop - t);
            decay(sigma, stop - t);
            decay(trend, stop - t);
            t = stop;
            if (stop >= config.horizon) {
                break;
            }
            const double d = price.jumps[next_jump++];
            for (const auto idx : price_linear) {
                linear[idx].value += linear[idx].weight * d;
            }
            for (auto& s : sigma) {
                s.value += d * d;
            }
            for (auto& m : trend) {
                m.value += d;
            }
            if (with_book) {
                flush(t);
                level += d;
                book.move_price(level);
            }
            continue;
        }
        decay(linear, candidate - t);
        decay(sigma, candidate - t);
        decay(trend, candidate - t);
        t = candidate;
        ++out.proposals;

        double sigma2 = 0.0;
        for (const auto& s : sigma) {
            sigma2 += s.weight * s.value;
        }
        double mu = 0.0;
        for (const auto& m : trend) {
            mu += m.weight * m.value;
        }
        std::fill(intensity.begin(), intensity.end(), 0.0);
        for (const auto& term : linear) {
            intensity[term.target] += term.value;
        }
        bool clipped = false;
        double total = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            intensity[i] += config.alpha0[i] + config.kd[i] * sigma2 + config.k1[i] * mu * mu;
            if (intensity[i] < 0.0) {
                intensity[i] = 0.0;
                clipped = true;
            }
            total += intensity[i];
        }
        out.clipped += clipped ? 1 : 0;
        double u = unit(rng) * total_bound;
        if (!(u < total)) {
            continue;
        }
        std::size_t type = 0;
        while (type + 1 < dim && u >= intensity[type]) {
            u -= intensity[type];
            ++type;
        }
        out.times.push_back(t);
        out.types.push_back(static_cast<std::uint8_t>(type));
        for (const auto idx : by_source[type]) {
            linear[idx].value += linear[idx].weight;
        }
        if (with_book) {
            flush(t);
            book.apply(kind_of(type), side_of(type));
            out.quotes.push_back(book.quotes(t, kind_of(type), side_of(type)));
        }
    }
    if (with_book) {
        flush(std::numeric_limits<double>::infinity());
    }
    return out;
}

SimOutput simulate_session(const SimConfig& config, std::uint64_t index) {
    auto price_rng = make_rng(config.seed, index, 1);
    const auto price = simulate_price(config.price_rate, config.law, config.horizon, price_rng);
    auto event_rng = make_rng(config.seed, index, 2);
    return simulate_events(config, price, event_rng);
}

SessionSeries to_session_series(const SimOutput& output, std::string name) {
    if (output.quotes.size() != output.times.size()) {
        throw ConfigError("session export needs the six-type book simulation");
    }
    SessionSeries s;
    s.name = std::move(name);
    s.duration = output.horizon;
    s.events = output.quotes;
    return s;
}

} // namespace gqh::simulate
