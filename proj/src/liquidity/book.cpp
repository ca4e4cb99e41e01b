#include "gqhawkes/liquidity.hpp"

#include "gqhawkes/error.hpp"
#include "gqhawkes/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gqh::liquidity {

namespace {

std::int64_t reach(const std::vector<Level>& levels, double v_best, std::string_view side) {
    double cumulative = 0.0;
    for (const auto& level : levels) {
        cumulative += level.volume;
        if (cumulative >= v_best) {
            return level.tick;
        }
    }
    throw DataError(fmt::format("effective spread: {} side holds {} shares, fewer than the reference volume {}",
                                side, cumulative, v_best));
}

const Level* best(const std::vector<Level>& levels) {
    for (const auto& level : levels) {
        if (level.volume > 0.0) {
            return &level;
        }
    }
    return nullptr;
}

} // namespace

void BookSnapshot::validate() const {
    for (const auto* side : {&ask, &bid}) {
        for (std::size_t n = 0; n < side->size(); ++n) {
            const auto& level = (*side)[n];
            if (!(level.volume >= 0.0)) {
                throw DataError(fmt::format("book at t = {}: negative volume {} at tick {}", time, level.volume,
                                            level.tick));
            }
            if (n > 0) {
                const bool sorted = side == &ask ? level.tick > (*side)[n - 1].tick : level.tick < (*side)[n - 1].tick;
                if (!sorted) {
                    throw DataError(fmt::format("book at t = {}: {} levels out of order at tick {}", time,
                                                side == &ask ? "ask" : "bid", level.tick));
                }
            }
        }
    }
    if (!ask.empty() && !bid.empty() && ask.front().tick <= bid.front().tick) {
        throw DataError(fmt::format("book at t = {}: crossed (ask {} <= bid {})", time, ask.front().tick,
                                    bid.front().tick));
    }
}

std::vector<BookSnapshot> parse_book(std::string_view text) {
    const auto table = io::parse_csv(text);
    const auto c_time = table.column("time_s");
    const auto c_side = table.column("side");
    const auto c_tick = table.column("tick");
    const auto c_volume = table.column("volume");
    std::vector<BookSnapshot> book;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size()) {
            throw DataError(fmt::format("book line {}: expected {} fields", table.lines[r], table.header.size()));
        }
        const double time = io::parse_double(row[c_time], "time_s");
        if (book.empty() || time != book.back().time) {
            if (!book.empty() && time < book.back().time) {
                throw DataError(fmt::format("book line {}: time {} goes backwards", table.lines[r], time));
            }
            book.push_back({time, {}, {}});
        }
        const Level level{io::parse_int(row[c_tick], "tick"), io::parse_double(row[c_volume], "volume")};
        if (row[c_side] == "a") {
            book.back().ask.push_back(level);
        } else if (row[c_side] == "b") {
            book.back().bid.push_back(level);
        } else {
            throw DataError(fmt::format("book line {}: unknown side '{}'", table.lines[r], row[c_side]));
        }
    }
    for (const auto& snapshot : book) {
        snapshot.validate();
    }
    return book;
}

std::string book_to_csv(std::span<const BookSnapshot> book) {
    std::string out = "time_s,side,tick,volume\n";
    for (const auto& snapshot : book) {
        const auto t = io::format_double(snapshot.time);
        for (const auto& level : snapshot.ask) {
            out += fmt::format("{},a,{},{}\n", t, level.tick, io::format_double(level.volume));
        }
        for (const auto& level : snapshot.bid) {
            out += fmt::format("{},b,{},{}\n", t, level.tick, io::format_double(level.volume));
        }
    }
    return out;
}

std::int64_t effective_spread(const BookSnapshot& book, double v_best) {
    if (!(v_best > 0.0)) {
        throw ConfigError(fmt::format("reference volume must be positive, got {}", v_best));
    }
    return reach(book.ask, v_best, "ask") - reach(book.bid, v_best, "bid");
}

std::int64_t plain_spread(const BookSnapshot& book) {
    const auto* a = best(book.ask);
    const auto* b = best(book.bid);
    if (a == nullptr || b == nullptr) {
        throw DataError(fmt::format("book at t = {}: empty {} side", book.time, a == nullptr ? "ask" : "bid"));
    }
    return a->tick - b->tick;
}

double default_reference_volume(std::span<const BookSnapshot> book) {
    if (book.empty()) {
        throw DataError("reference volume: no book snapshots");
    }
    double sum = 0.0;
    for (const auto& snapshot : book) {
        const auto* a = best(snapshot.ask);
        const auto* b = best(snapshot.bid);
        sum += 0.5 * ((a != nullptr ? a->volume : 0.0) + (b != nullptr ? b->volume : 0.0));
    }
    return sum / static_cast<double>(book.size());
}

std::vector<double> spread_series(std::span<const BookSnapshot> book, double v_best, std::span<const double> times) {
    std::vector<double> out(times.size(), std::numeric_limits<double>::quiet_NaN());
    std::size_t next = 0;
    double current = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t n = 0; n < times.size(); ++n) {
        if (n > 0 && times[n] < times[n - 1]) {
            throw DataError("spread series: sample times must be sorted");
        }
        bool moved = false;
        while (next < book.size() && book[next].time <= times[n]) {
            ++next;
            moved = true;
        }
        if (moved) {
            current = static_cast<double>(effective_spread(book[next - 1], v_best));
        }
        out[n] = current;
    }
    return out;
}

} // namespace gqh::liquidity
