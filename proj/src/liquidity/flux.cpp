#include "gqhawkes/liquidity.hpp"

namespace gqh::liquidity {

namespace {

FlowContribution contribution(const FlowInput& flow, double sign, double delta2) {
    return {sign, sign * flow.kd * flow.volume * delta2, sign * flow.k1 * flow.volume * delta2};
}

nlohmann::json to_json(const FlowContribution& c) {
    return {{"sign", c.sign}, {"diagonal", c.diagonal}, {"rank_one", c.rank_one}, {"total", c.total()}};
}

} // namespace

LiquidityFlux liquidity_flux(const FlowInput& limit, const FlowInput& cancel, const FlowInput& market, double delta2) {
    LiquidityFlux flux;
    flux.limit = contribution(limit, 1.0, delta2);
    flux.cancel = contribution(cancel, -1.0, delta2);
    flux.market = contribution(market, -1.0, delta2);
    flux.diagonal = flux.limit.diagonal + flux.cancel.diagonal + flux.market.diagonal;
    flux.rank_one = flux.limit.rank_one + flux.cancel.rank_one + flux.market.rank_one;
    flux.j = flux.limit.total() + flux.cancel.total() + flux.market.total();
    return flux;
}

nlohmann::json flux_to_json(const LiquidityFlux& flux, const nlohmann::json& meta) {
    nlohmann::json out;
    if (!meta.is_null()) {
        out["meta"] = meta;
    }
    out["J"] = flux.j;
    out["by_mechanism"] = {{"diagonal", flux.diagonal}, {"rank_one", flux.rank_one}};
    out["by_kind"] = {{"LO", to_json(flux.limit)}, {"C", to_json(flux.cancel)}, {"MO", to_json(flux.market)}};
    return out;
}

} // namespace gqh::liquidity
