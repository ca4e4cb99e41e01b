#include "gqhawkes/error.hpp"
#include "gqhawkes/ingest.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gqh;

namespace {

const char* kHeader = "time_s,kind,side,volume,best_bid_ticks,best_ask_ticks,vol_bid,vol_ask\n";

SessionSeries uniform_session(double rate, double duration) {
    SessionSeries s;
    s.duration = duration;
    const auto count = static_cast<std::size_t>(rate * duration);
    for (std::size_t k = 0; k < count; ++k) {
        OrderBookEvent ev;
        ev.time = (static_cast<double>(k) + 0.5) / rate;
        ev.best_bid = 100;
        ev.best_ask = 101;
        ev.vol_bid = 5;
        ev.vol_ask = 5;
        s.events.push_back(ev);
    }
    return s;
}

double coefficient_of_variation(const std::vector<double>& times, double duration, double width) {
    std::vector<double> counts(static_cast<std::size_t>(std::ceil(duration / width)), 0.0);
    for (const double t : times) {
        counts[std::min(counts.size() - 1, static_cast<std::size_t>(t / width))] += 1.0;
    }
    double mean = 0.0;
    for (const double c : counts) {
        mean += c;
    }
    mean /= static_cast<double>(counts.size());
    double var = 0.0;
    for (const double c : counts) {
        var += (c - mean) * (c - mean);
    }
    return std::sqrt(var / static_cast<double>(counts.size())) / mean;
}

} // namespace

TEST_CASE("parse a well-formed session") {
    const std::string text = std::string(kHeader) +
                             "0.5,LO,b,10,100,101,20,15\n"
                             "1.0,C,a,5,100,101,20,10\n"
                             "1.0,MO,a,3,100,102,20,4\n";
    const auto s = ingest::parse_session(text);
    REQUIRE(s.events.size() == 3);
    CHECK(s.rejected.empty());
    CHECK(s.events[0].type() == 1);
    CHECK(s.events[1].type() == 5);
    CHECK(s.events[2].type() == 3);
    CHECK(s.duration == 1.0);
    const auto back = ingest::parse_session(ingest::session_to_csv(s));
    REQUIRE(back.events.size() == 3);
    CHECK(back.events[2].best_ask == 102);
    CHECK(back.duration == 1.0);
}

TEST_CASE("crossed and malformed rows are rejected with line numbers") {
    const std::string text = std::string(kHeader) +
                             "0.5,LO,b,10,100,101,20,15\n"
                             "0.6,LO,b,10,101,101,20,15\n"
                             "0.7,XX,b,10,100,101,20,15\n"
                             "0.8,LO,b,abc,100,101,20,15\n"
                             "0.9,LO,b,10,100,101,20\n";
    const auto s = ingest::parse_session(text);
    CHECK(s.events.size() == 1);
    REQUIRE(s.rejected.size() == 4);
    CHECK(s.rejected[0].line == 3);
    CHECK(s.rejected[0].reason.find("crossed") != std::string::npos);
}

TEST_CASE("out-of-order timestamps are a hard error naming the line") {
    const std::string text = std::string(kHeader) +
                             "5.0,LO,b,10,100,101,20,15\n"
                             "6.0,LO,b,10,100,101,20,15\n"
                             "1.0,LO,b,10,100,101,20,15\n";
    try {
        (void)ingest::parse_session(text);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("duration comment") {
    const std::string text = std::string("# duration_s=30\n") + kHeader + "1.0,LO,b,1,100,101,1,1\n";
    CHECK(ingest::parse_session(text).duration == 30.0);
    const std::string bad = std::string("# duration_s=0.5\n") + kHeader + "1.0,LO,b,1,100,101,1,1\n";
    CHECK_THROWS_AS((void)ingest::parse_session(bad), DataError);
}

TEST_CASE("micro-price values") {
    CHECK(ingest::micro_price_value(100, 101, 10, 10) == doctest::Approx(100.5));
    CHECK(ingest::micro_price_value(100, 101, 30, 10) == doctest::Approx(100.75));
    CHECK(ingest::micro_price_value(100, 101, 1, 1000) == doctest::Approx(100.001).epsilon(1e-5));
    CHECK(ingest::micro_price_value(100, 101, 7, 3) == ingest::micro_price_value(100, 101, 70, 30));
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::int64_t> vol(1, 1000);
    for (int k = 0; k < 100; ++k) {
        const double m = ingest::micro_price_value(100, 103, vol(rng), vol(rng));
        CHECK(m > 100.0);
        CHECK(m < 103.0);
    }
}

TEST_CASE("micro-price path and bid-ask mirror") {
    SessionSeries s;
    s.duration = 10.0;
    const auto add = [&](double t, EventKind k, Side side, std::int64_t b, std::int64_t a, std::int64_t vb,
                         std::int64_t va) { s.events.push_back({t, k, side, 1, b, a, vb, va}); };
    add(1.0, EventKind::limit, Side::bid, 100, 101, 10, 10);
    add(2.0, EventKind::limit, Side::bid, 100, 101, 30, 10);
    add(3.0, EventKind::cancel, Side::ask, 100, 101, 30, 10);
    add(4.0, EventKind::market, Side::ask, 100, 102, 30, 5);
    const auto p = ingest::micro_price(s);
    REQUIRE(p.size() == 2);
    CHECK(p.times[0] == 2.0);
    CHECK(p.jumps[0] == doctest::Approx(0.25));
    CHECK(p.times[1] == 4.0);

    const auto m = ingest::mirror(s);
    const auto pm = ingest::micro_price(m);
    REQUIRE(pm.size() == p.size());
    for (std::size_t n = 0; n < p.size(); ++n) {
        CHECK(pm.jumps[n] == doctest::Approx(-p.jumps[n]));
    }
    const auto te = ingest::typed_events(s);
    const auto tm = ingest::typed_events(m);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(te.times[i] == tm.times[5 - i]);
    }

    SessionSeries empty_book = s;
    empty_book.events[1].vol_bid = 0;
    empty_book.events[1].vol_ask = 0;
    CHECK_THROWS_AS((void)ingest::micro_price(empty_book), DataError);
}

TEST_CASE("price path CSV round trip") {
    PricePath p;
    p.times = {0.1, 0.25, 3.0};
    p.jumps = {0.5, -0.125, 1.0 / 3.0};
    const auto back = ingest::price_from_csv(ingest::price_to_csv(p));
    CHECK(back.times == p.times);
    CHECK(back.jumps == p.jumps);
}

TEST_CASE("autocorrelation estimates") {
    const auto bins = ingest::autocorr_bins(60.0);
    std::mt19937_64 rng(7);
    std::bernoulli_distribution coin;

    PricePath iid;
    for (int n = 0; n < 20000; ++n) {
        iid.times.push_back(n * 0.73);
        iid.jumps.push_back(coin(rng) ? 1.0 : -1.0);
    }
    const std::vector<PricePath> one{iid};
    const auto k = ingest::estimate_autocorr(one, bins);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        if (k.pairs[b] > 0.0) {
            CHECK(std::abs(k.values[b]) <= 3.0 / std::sqrt(k.pairs[b]) + 1e-12);
        }
    }

    PricePath alternating;
    for (int n = 0; n < 1000; ++n) {
        alternating.times.push_back(n);
        alternating.jumps.push_back(n % 2 == 0 ? 1.0 : -1.0);
    }
    const std::vector<PricePath> alt{alternating};
    const auto ka = ingest::estimate_autocorr(alt, bins);
    CHECK(ka.at(1.0) == doctest::Approx(-1.0));

    PricePath ar;
    std::normal_distribution<double> eps;
    double prev = 0.0;
    for (int n = 0; n < 40000; ++n) {
        const double d = 0.5 * prev + eps(rng);
        ar.times.push_back(n);
        ar.jumps.push_back(d);
        prev = d;
    }
    const std::vector<PricePath> ars{ar};
    CHECK(ingest::estimate_autocorr(ars, bins).at(1.0) == doctest::Approx(0.5).epsilon(0.1));

    PricePath flat;
    flat.times = {1.0, 2.0};
    flat.jumps = {0.0, 0.0};
    const std::vector<PricePath> zero{flat};
    CHECK_THROWS_AS((void)ingest::estimate_autocorr(zero, bins), DataError);
}

TEST_CASE("surprise price") {
    const auto bins = ingest::autocorr_bins(60.0);
    ingest::AutocorrKernel none;
    none.bins = bins;
    none.values.assign(bins.size(), 0.0);
    none.pairs.assign(bins.size(), 0.0);
    PricePath p;
    p.times = {1.0, 1.5, 4.0};
    p.jumps = {1.0, -1.0, 2.0};
    const auto same = ingest::surprise_price(p, none);
    CHECK(same.jumps == p.jumps);
    CHECK(same.label == PriceLabel::surprise);

    ingest::AutocorrKernel one = none;
    PricePath q;
    q.times = {10.0, 13.0};
    q.jumps = {1.0, 1.0};
    std::size_t b = 0;
    while (!(bins.lo[b] <= 3.0 && 3.0 < bins.hi[b])) {
        ++b;
    }
    one.values[b] = 0.3;
    const auto s = ingest::surprise_price(q, one);
    CHECK(s.jumps[0] == 1.0);
    CHECK(s.jumps[1] == doctest::Approx(0.7));

    PricePath alternating;
    std::mt19937_64 rng(9);
    std::exponential_distribution<double> gap(1.0);
    double t = 0.0;
    for (int n = 0; n < 5000; ++n) {
        t += gap(rng);
        alternating.times.push_back(t);
        alternating.jumps.push_back(n % 2 == 0 ? 1.0 : -1.0);
    }
    const std::vector<PricePath> alt{alternating};
    const auto rho = ingest::estimate_autocorr(alt, bins);
    const std::vector<PricePath> out{ingest::surprise_price(alternating, rho)};
    const auto after = ingest::estimate_autocorr(out, bins);
    CHECK(std::abs(after.values[0]) < std::abs(rho.values[0]));
}

TEST_CASE("martingale check") {
    std::mt19937_64 rng(13);
    std::bernoulli_distribution coin;
    PricePath p;
    for (int n = 0; n < 10000; ++n) {
        p.times.push_back(n);
        p.jumps.push_back(coin(rng) ? 1.0 : -1.0);
    }
    const std::vector<PricePath> paths{p};
    CHECK(ingest::martingale_check(paths, 10000.0).ok());
    for (double& j : p.jumps) {
        j += 0.2;
    }
    const std::vector<PricePath> drift{p};
    CHECK_FALSE(ingest::martingale_check(drift, 10000.0).ok());
}

TEST_CASE("intraday profile") {
    const std::vector<SessionSeries> one{uniform_session(10.0, 3000.0)};
    const auto prof = ingest::build_intraday_profile(one, 300.0);
    REQUIRE(prof.rates.size() == 10);
    for (const double r : prof.rates) {
        CHECK(r == doctest::Approx(10.0));
    }
    const std::vector<SessionSeries> two{uniform_session(5.0, 3000.0), uniform_session(15.0, 3000.0)};
    for (const double r : ingest::build_intraday_profile(two, 300.0).rates) {
        CHECK(r == doctest::Approx(10.0));
    }
    CHECK(prof.rescale(1234.5) == doctest::Approx(1234.5));

    ingest::IntradayProfile step;
    step.bin_width = 50.0;
    step.span = 100.0;
    step.rates = {2.0, 0.5};
    // mean 1.25: the busy half maps onto 80 rescaled seconds
    CHECK(step.rescale(50.0) == doctest::Approx(80.0));
    CHECK(step.rescale(100.0) == doctest::Approx(100.0));
    CHECK_THROWS_AS((void)step.rescale(120.0), DataError);

    SessionSeries gap = uniform_session(1.0, 600.0);
    gap.events.erase(std::remove_if(gap.events.begin(), gap.events.end(),
                                    [](const OrderBookEvent& e) { return e.time >= 300.0; }),
                     gap.events.end());
    const std::vector<SessionSeries> empty_bin{gap};
    CHECK_THROWS_AS((void)ingest::build_intraday_profile(empty_bin, 300.0), DataError);
}

TEST_CASE("rescaling flattens a U-shaped activity pattern") {
    std::mt19937_64 rng(21);
    const double duration = 6000.0;
    const auto rate = [&](double t) {
        const double x = t / duration - 0.5;
        return 2.0 + 40.0 * x * x;
    };
    std::vector<SessionSeries> sessions;
    for (int d = 0; d < 5; ++d) {
        SessionSeries s;
        s.duration = duration;
        std::exponential_distribution<double> gap(12.0);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double t = gap(rng); t < duration; t += gap(rng)) {
            if (u(rng) * 12.0 < rate(t)) {
                OrderBookEvent ev;
                ev.time = t;
                ev.best_bid = 1;
                ev.best_ask = 2;
                ev.vol_bid = 1;
                ev.vol_ask = 1;
                s.events.push_back(ev);
            }
        }
        sessions.push_back(std::move(s));
    }
    const auto prof = ingest::build_intraday_profile(sessions, 300.0);
    std::vector<double> raw, rescaled;
    for (const auto& ev : sessions[0].events) {
        raw.push_back(ev.time);
    }
    const auto r = ingest::rescale_time(sessions[0], prof);
    for (const auto& ev : r.events) {
        rescaled.push_back(ev.time);
    }
    for (std::size_t n = 1; n < rescaled.size(); ++n) {
        CHECK(rescaled[n] >= rescaled[n - 1]);
    }
    CHECK(r.duration == doctest::Approx(duration).epsilon(1e-9));
    CHECK(coefficient_of_variation(rescaled, r.duration, 300.0) <
          0.5 * coefficient_of_variation(raw, duration, 300.0));
}
