// Fast pair sums against the double-loop reference.

#include "synthetic.hpp"

#include "gqhawkes/grids.hpp"
#include "gqhawkes/kernels/pair_sums.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <vector>

namespace {

using namespace gqh;

struct Fixture {
    SessionData session;
    grids::TimeGrid hawkes;
    grids::TimeGrid price;
};

const Fixture& fixture(std::size_t events) {
    static std::map<std::size_t, Fixture> cache;
    auto it = cache.find(events);
    if (it == cache.end()) {
        std::mt19937_64 rng(11);
        Fixture f{testing::random_session(rng, 6, events, events / 20, 20000.0),
                  grids::TimeGrid::build(grids::GridSpec::hawkes_default()),
                  grids::TimeGrid::build(grids::GridSpec::price_default())};
        it = cache.emplace(events, std::move(f)).first;
    }
    return it->second;
}

template <bool Fast>
void event_event(benchmark::State& state) {
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    const auto& bins = f.hawkes.bins();
    std::vector<double> out(36 * bins.size());
    for (auto _ : state) {
        std::fill(out.begin(), out.end(), 0.0);
        if constexpr (Fast) {
            kernels::add_event_event(f.session.events, bins, out);
        } else {
            kernels::reference::add_event_event(f.session.events, bins, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Fast>
void event_price(benchmark::State& state) {
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    const auto& bins = f.price.bins();
    const std::size_t nb = bins.size();
    std::vector<double> np(6 * nb), np2(6 * nb), npp(6 * nb * nb);
    for (auto _ : state) {
        std::fill(np.begin(), np.end(), 0.0);
        std::fill(np2.begin(), np2.end(), 0.0);
        std::fill(npp.begin(), npp.end(), 0.0);
        if constexpr (Fast) {
            kernels::add_event_price(f.session.events, f.session.price, bins, np, np2, npp);
        } else {
            kernels::reference::add_event_price(f.session.events, f.session.price, bins, np, np2, npp);
        }
        benchmark::DoNotOptimize(npp.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(event_event<true>)->Name("event_event/openmp")->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(event_event<false>)->Name("event_event/reference")->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(event_price<true>)->Name("event_price/openmp")->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(event_price<false>)->Name("event_price/reference")->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
