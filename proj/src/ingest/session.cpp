#include "gqhawkes/ingest.hpp"

#include "gqhawkes/error.hpp"
#include "gqhawkes/io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <optional>

namespace gqh::ingest {

namespace {

std::optional<EventKind> parse_kind(std::string_view s) {
    if (s == "C") {
        return EventKind::cancel;
    }
    if (s == "LO") {
        return EventKind::limit;
    }
    if (s == "MO") {
        return EventKind::market;
    }
    return std::nullopt;
}

std::optional<Side> parse_side(std::string_view s) {
    if (s == "b") {
        return Side::bid;
    }
    if (s == "a") {
        return Side::ask;
    }
    return std::nullopt;
}

} // namespace

SessionSeries parse_session(std::string_view text, std::string name) {
    const auto table = io::parse_csv(text);
    const std::array<std::string_view, 8> names{"time_s", "kind", "side", "volume",
                                                "best_bid_ticks", "best_ask_ticks", "vol_bid", "vol_ask"};
    std::array<std::size_t, 8> col{};
    for (std::size_t c = 0; c < names.size(); ++c) {
        col[c] = table.column(names[c]);
    }

    SessionSeries session;
    session.name = std::move(name);
    double last_time = -1.0;
    std::size_t last_line = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = table.lines[r];
        if (row.size() != table.header.size()) {
            session.rejected.push_back({line, fmt::format("expected {} fields, found {}", table.header.size(), row.size())});
            continue;
        }
        OrderBookEvent ev;
        try {
            ev.time = io::parse_double(row[col[0]], "time_s");
            ev.volume = io::parse_int(row[col[3]], "volume");
            ev.best_bid = io::parse_int(row[col[4]], "best_bid_ticks");
            ev.best_ask = io::parse_int(row[col[5]], "best_ask_ticks");
            ev.vol_bid = io::parse_int(row[col[6]], "vol_bid");
            ev.vol_ask = io::parse_int(row[col[7]], "vol_ask");
        } catch (const DataError& e) {
            session.rejected.push_back({line, e.what()});
            continue;
        }
        const auto kind = parse_kind(row[col[1]]);
        const auto side = parse_side(row[col[2]]);
        if (!kind || !side) {
            session.rejected.push_back({line, fmt::format("unknown kind/side '{}','{}'", row[col[1]], row[col[2]])});
            continue;
        }
        ev.kind = *kind;
        ev.side = *side;
        if (!(ev.time >= 0.0) || !std::isfinite(ev.time)) {
            session.rejected.push_back({line, "negative or non-finite time"});
            continue;
        }
        if (ev.volume <= 0 || ev.vol_bid < 0 || ev.vol_ask < 0) {
            session.rejected.push_back({line, "non-positive order volume or negative queue"});
            continue;
        }
        if (ev.best_ask <= ev.best_bid) {
            session.rejected.push_back({line, "crossed book (ask <= bid)"});
            continue;
        }
        if (ev.time < last_time) {
            throw DataError(fmt::format("{}line {}: time {} precedes {} on line {}",
                                        session.name.empty() ? "" : session.name + ": ", line, ev.time, last_time,
                                        last_line));
        }
        last_time = ev.time;
        last_line = line;
        session.events.push_back(ev);
    }

    session.duration = session.events.empty() ? 0.0 : session.events.back().time;
    for (const auto& [key, value] : table.meta) {
        if (key == "duration_s") {
            const double d = io::parse_double(value, "duration_s");
            if (d < session.duration) {
                throw DataError(fmt::format("duration_s={} is shorter than the last event time {}", d, session.duration));
            }
            session.duration = d;
        }
    }
    return session;
}

SessionSeries read_session(const std::filesystem::path& path) {
    return parse_session(io::read_file(path), path.stem().string());
}

std::string session_to_csv(const SessionSeries& session) {
    std::string out = fmt::format("# duration_s={}\n", io::format_double(session.duration));
    out += "time_s,kind,side,volume,best_bid_ticks,best_ask_ticks,vol_bid,vol_ask\n";
    for (const auto& ev : session.events) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", io::format_double(ev.time), kind_label(ev.kind),
                           side_label(ev.side), ev.volume, ev.best_bid, ev.best_ask, ev.vol_bid, ev.vol_ask);
    }
    return out;
}

TypedEvents typed_events(const SessionSeries& session) {
    TypedEvents out;
    out.duration = session.duration;
    out.times.assign(kNumEventTypes, {});
    for (const auto& ev : session.events) {
        out.times[ev.type()].push_back(ev.time);
    }
    return out;
}

SessionSeries mirror(const SessionSeries& session) {
    SessionSeries out = session;
    for (auto& ev : out.events) {
        ev.side = ev.side == Side::bid ? Side::ask : Side::bid;
        const auto bid = ev.best_bid;
        ev.best_bid = -ev.best_ask;
        ev.best_ask = -bid;
        std::swap(ev.vol_bid, ev.vol_ask);
    }
    return out;
}

double micro_price_value(std::int64_t best_bid, std::int64_t best_ask, std::int64_t vol_bid, std::int64_t vol_ask) {
    const double vb = static_cast<double>(vol_bid);
    const double va = static_cast<double>(vol_ask);
    return (va * static_cast<double>(best_bid) + vb * static_cast<double>(best_ask)) / (va + vb);
}

PricePath micro_price(const SessionSeries& session) {
    PricePath path;
    path.label = PriceLabel::micro;
    double level = 0.0;
    for (std::size_t n = 0; n < session.events.size(); ++n) {
        const auto& ev = session.events[n];
        if (ev.vol_bid + ev.vol_ask <= 0) {
            throw DataError(fmt::format("micro-price: zero best volume at event {} (t = {})", n, ev.time));
        }
        const double value = micro_price_value(ev.best_bid, ev.best_ask, ev.vol_bid, ev.vol_ask);
        if (n == 0) {
            level = value;
            continue;
        }
        const double change = value - level;
        if (std::abs(change) <= 1e-9) {
            continue;
        }
        if (!path.times.empty() && path.times.back() == ev.time) {
            path.jumps.back() += change;
            if (std::abs(path.jumps.back()) <= 1e-9) {
                path.times.pop_back();
                path.jumps.pop_back();
            }
        } else {
            path.times.push_back(ev.time);
            path.jumps.push_back(change);
        }
        level = value;
    }
    return path;
}

std::string price_to_csv(const PricePath& path, std::string_view header_comment) {
    std::string out(header_comment);
    out += "time_s,dP\n";
    for (std::size_t n = 0; n < path.size(); ++n) {
        out += fmt::format("{},{}\n", io::format_double(path.times[n]), io::format_double(path.jumps[n]));
    }
    return out;
}

PricePath price_from_csv(std::string_view text, PriceLabel label) {
    const auto table = io::parse_csv(text);
    const auto t = table.column("time_s");
    const auto d = table.column("dP");
    PricePath path;
    path.label = label;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const double time = io::parse_double(table.rows[r].at(t), "time_s");
        if (!path.times.empty() && !(time > path.times.back())) {
            throw DataError(fmt::format("price path line {}: jump times must be strictly increasing", table.lines[r]));
        }
        path.times.push_back(time);
        path.jumps.push_back(io::parse_double(table.rows[r].at(d), "dP"));
    }
    return path;
}

} // namespace gqh::ingest
