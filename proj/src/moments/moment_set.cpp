#include "gqhawkes/moments.hpp"

#include "gqhawkes/error.hpp"
#include "gqhawkes/io.hpp"
#include "gqhawkes/kernels/pair_sums.hpp"

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <map>

namespace gqh::moments {

MomentSet::MomentSet(std::size_t dim, grids::TimeGrid hawkes_grid, grids::TimeGrid price_grid, bool with_npp)
    : dim_(dim), hawkes_(std::move(hawkes_grid)), price_(std::move(price_grid)), with_npp_(with_npp) {
    if (dim_ == 0) {
        throw ConfigError("moment set needs at least one event type");
    }
    const std::size_t nh = hawkes_.size();
    const std::size_t np = price_.size();
    counts_.assign(dim_, 0.0);
    nn_sum_.assign(dim_ * dim_ * nh, 0.0);
    np_sum_.assign(dim_ * np, 0.0);
    np2_sum_.assign(dim_ * np, 0.0);
    npp_sum_.assign(with_npp_ ? dim_ * np * np : 0, 0.0);
    p2p2_sum_.assign(np, 0.0);
    normalize();
}

void MomentSet::add_session(const SessionData& session) {
    if (symmetrized_) {
        throw ConfigError("cannot add sessions to a symmetrized moment set");
    }
    if (session.events.dim() != dim_) {
        throw DataError(fmt::format("session has {} event types, moment set expects {}", session.events.dim(), dim_));
    }
    if (!(session.events.duration > 0.0)) {
        throw DataError("session duration must be positive");
    }
    duration_ += session.events.duration;
    for (std::size_t i = 0; i < dim_; ++i) {
        counts_[i] += static_cast<double>(session.events.times[i].size());
    }
    for (const double d : session.price.jumps) {
        double power = 1.0;
        for (std::size_t k = 0; k < power_sums_.size(); ++k) {
            power_sums_[k] += power;
            power *= d;
        }
    }
    kernels::add_event_event(session.events, hawkes_.bins(), nn_sum_);
    kernels::add_event_price(session.events, session.price, price_.bins(), np_sum_, np2_sum_, npp_sum_);
    kernels::add_price_sq_price_sq(session.price, price_.bins(), p2p2_sum_);
    ++sessions_;
    normalize();
}

void MomentSet::merge(const MomentSet& other) {
    if (symmetrized_ || other.symmetrized_) {
        throw ConfigError("symmetrized moment sets cannot be merged; merge before symmetrizing");
    }
    if (other.dim_ != dim_ || other.with_npp_ != with_npp_ || other.hawkes_.hash() != hawkes_.hash() ||
        other.price_.hash() != price_.hash()) {
        throw ConfigError("moment sets built on different grids or dimensions cannot be merged");
    }
    auto add = [](std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t k = 0; k < a.size(); ++k) {
            a[k] += b[k];
        }
    };
    duration_ += other.duration_;
    add(counts_, other.counts_);
    for (std::size_t k = 0; k < power_sums_.size(); ++k) {
        power_sums_[k] += other.power_sums_[k];
    }
    add(nn_sum_, other.nn_sum_);
    add(np_sum_, other.np_sum_);
    add(np2_sum_, other.np2_sum_);
    add(npp_sum_, other.npp_sum_);
    add(p2p2_sum_, other.p2p2_sum_);
    sessions_ += other.sessions_;
    normalize();
}

void MomentSet::normalize() {
    const std::size_t nh = hawkes_.size();
    const std::size_t np = price_.size();
    const double t = duration_;
    const double inv_t = t > 0.0 ? 1.0 / t : 0.0;
    lambda_.assign(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
        lambda_[i] = counts_[i] * inv_t;
    }
    delta_.fill(0.0);
    for (std::size_t k = 1; k < delta_.size(); ++k) {
        delta_[k] = power_sums_[k] * inv_t;
    }
    const auto& hb = hawkes_.bins();
    const auto& pb = price_.bins();
    nn_.assign(nn_sum_.size(), 0.0);
    np_.assign(np_sum_.size(), 0.0);
    np2_.assign(np2_sum_.size(), 0.0);
    npp_.assign(npp_sum_.size(), 0.0);
    p2p2_.assign(p2p2_sum_.size(), 0.0);
    if (t <= 0.0) {
        return;
    }
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            for (std::size_t b = 0; b < nh; ++b) {
                const std::size_t k = (i * dim_ + j) * nh + b;
                nn_[k] = nn_sum_[k] / (t * hb.width(b)) - lambda_[i] * lambda_[j];
            }
        }
        for (std::size_t b = 0; b < np; ++b) {
            const std::size_t k = i * np + b;
            np_[k] = np_sum_[k] / (t * pb.width(b));
            np2_[k] = np2_sum_[k] / (t * pb.width(b)) - lambda_[i] * delta_[2];
        }
        if (with_npp_) {
            for (std::size_t a = 0; a < np; ++a) {
                for (std::size_t b = 0; b < np; ++b) {
                    const std::size_t k = (i * np + a) * np + b;
                    npp_[k] = npp_sum_[k] / (t * pb.width(a) * pb.width(b));
                }
            }
        }
    }
    for (std::size_t b = 0; b < np; ++b) {
        p2p2_[b] = p2p2_sum_[b] / (t * pb.width(b)) - delta_[2] * delta_[2];
    }
}

MomentSet symmetrize_bid_ask(const MomentSet& set) {
    MomentSet out = set;
    const std::size_t dim = set.dim_;
    const std::size_t nh = set.hawkes_.size();
    const std::size_t np = set.price_.size();
    auto m = [dim](std::size_t i) { return mirror_index(i, dim); };
    for (std::size_t i = 0; i < dim; ++i) {
        out.lambda_[i] = 0.5 * (set.lambda_[i] + set.lambda_[m(i)]);
        for (std::size_t j = 0; j < dim; ++j) {
            for (std::size_t b = 0; b < nh; ++b) {
                out.nn_[(i * dim + j) * nh + b] =
                    0.5 * (set.nn_[(i * dim + j) * nh + b] + set.nn_[(m(i) * dim + m(j)) * nh + b]);
            }
        }
        for (std::size_t b = 0; b < np; ++b) {
            out.np_[i * np + b] = 0.5 * (set.np_[i * np + b] - set.np_[m(i) * np + b]);
            out.np2_[i * np + b] = 0.5 * (set.np2_[i * np + b] + set.np2_[m(i) * np + b]);
        }
        if (set.with_npp_) {
            for (std::size_t a = 0; a < np; ++a) {
                for (std::size_t b = 0; b < np; ++b) {
                    const double own = set.npp_[(i * np + a) * np + b] + set.npp_[(i * np + b) * np + a];
                    const double mirror = set.npp_[(m(i) * np + a) * np + b] + set.npp_[(m(i) * np + b) * np + a];
                    out.npp_[(i * np + a) * np + b] = 0.25 * (own + mirror);
                }
            }
        }
    }
    out.delta_[1] = 0.0;
    out.delta_[3] = 0.0;
    out.symmetrized_ = true;
    return out;
}

JackknifeErrors jackknife(std::span<const MomentSet> per_session) {
    const std::size_t k = per_session.size();
    if (k < 2) {
        throw DataError("jackknife needs at least two sessions");
    }
    std::vector<MomentSet> leave_out;
    leave_out.reserve(k);
    for (std::size_t drop = 0; drop < k; ++drop) {
        const auto& first = per_session[0];
        MomentSet acc(first.dim(), first.hawkes_grid(), first.price_grid(), first.has_npp());
        for (std::size_t s = 0; s < k; ++s) {
            if (s != drop) {
                acc.merge(per_session[s]);
            }
        }
        leave_out.push_back(std::move(acc));
    }
    auto spread = [&](auto getter) {
        const std::size_t n = getter(leave_out[0]).size();
        std::vector<double> out(n, 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            double mean = 0.0;
            for (const auto& s : leave_out) {
                mean += getter(s)[c];
            }
            mean /= static_cast<double>(k);
            double ss = 0.0;
            for (const auto& s : leave_out) {
                const double d = getter(s)[c] - mean;
                ss += d * d;
            }
            out[c] = std::sqrt(static_cast<double>(k - 1) / static_cast<double>(k) * ss);
        }
        return out;
    };
    JackknifeErrors errors;
    errors.nn = spread([](const MomentSet& s) { return s.nn_values(); });
    errors.np = spread([](const MomentSet& s) { return s.np_values(); });
    errors.np2 = spread([](const MomentSet& s) { return s.np2_values(); });
    errors.p2p2 = spread([](const MomentSet& s) { return s.p2p2_values(); });
    return errors;
}

} // namespace gqh::moments
