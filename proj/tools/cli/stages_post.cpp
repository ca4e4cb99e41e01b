#include "artifacts.hpp"
#include "pipeline.hpp"

#include "gqhawkes/calibrate.hpp"
#include "gqhawkes/effective.hpp"
#include "gqhawkes/error.hpp"
#include "gqhawkes/ingest.hpp"
#include "gqhawkes/io.hpp"
#include "gqhawkes/kernel_io.hpp"
#include "gqhawkes/liquidity.hpp"
#include "gqhawkes/moments.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <array>
#include <cmath>
#include <limits>

namespace gqh::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kDim = kNumEventTypes;
/// Type indices of each order kind, bid first: C, LO, MO.
constexpr std::array<std::array<std::size_t, 2>, 3> kKindTypes{{{0, 5}, {1, 4}, {2, 3}}};
constexpr std::array<std::string_view, 3> kKindLabels{"C", "LO", "MO"};

struct Grids {
    grids::TimeGrid hawkes;
    grids::TimeGrid price;
};

Grids load_grids(const Context& ctx) {
    const auto dir = require_stage(ctx, "moments");
    return {grids::TimeGrid::from_csv(read_text(dir / "hawkes_grid.csv")),
            grids::TimeGrid::from_csv(read_text(dir / "price_grid.csv"))};
}

std::vector<std::string> active_routes(const Context& ctx) {
    std::vector<std::string> routes;
    if (ctx.config.full_route()) {
        routes.emplace_back("full");
    }
    if (ctx.config.effective_route()) {
        routes.emplace_back("effective");
    }
    return routes;
}

std::string_view route_stage(const std::string& route) { return route == "full" ? "calibrate" : "effective"; }

struct RouteKernels {
    std::vector<moments::Surface> k;
    std::vector<std::vector<double>> kd;
    double spectral_radius{0.0};
    nlohmann::json summary;
};

RouteKernels load_route(const Context& ctx, const std::string& route, const Grids& g) {
    const auto dir = require_stage(ctx, route_stage(route));
    const bool full = route == "full";
    RouteKernels r;
    r.k = io::surfaces_from_csv(read_text(dir / (full ? "K.csv" : "Kbar.csv")), kDim, g.price.nodes());
    r.kd = io::type_curves_from_csv(read_text(dir / (full ? "Kd.csv" : "Kdbar.csv")), "value", kDim, g.price.nodes());
    r.summary = read_json(dir / "summary.json");
    r.spectral_radius = r.summary.at("spectral_radius").get<double>();
    return r;
}

calibrate::HawkesKernel load_phi(const Context& ctx, std::string_view stage, const Grids& g) {
    const auto dir = require_stage(ctx, stage);
    calibrate::HawkesKernel phi;
    phi.dim = kDim;
    phi.grid = g.hawkes;
    phi.values = io::matrix_curves_from_csv(read_text(dir / "phi.csv"), kDim, g.hawkes.nodes());
    return phi;
}

nlohmann::json decomposition_json(const effective::ZumbachDecomposition& d) {
    return {{"kd", d.kd},
            {"k1", d.k1},
            {"objective", d.objective},
            {"residual_rms", d.residual_rms},
            {"next_eigen_ratio", d.next_eigen_ratio},
            {"gradient_norm", d.gradient_norm},
            {"iterations", d.iterations},
            {"negative_psi_points", d.negative_psi.size()}};
}

struct Strengths {
    std::vector<double> kd;
    std::vector<double> k1;
    std::vector<std::vector<double>> z;
    std::vector<std::vector<double>> psi;
};

Strengths load_strengths(const Context& ctx, const std::string& route, const Grids& g) {
    const auto dir = require_stage(ctx, "zumbach") / route;
    const auto j = read_json(dir / "strengths.json");
    Strengths s;
    for (const auto& t : j.at("types")) {
        s.kd.push_back(t.at("kd").get<double>());
        s.k1.push_back(t.at("k1").get<double>());
    }
    s.z = io::type_curves_from_csv(read_text(dir / "zumbach.csv"), "Z", kDim, g.price.points());
    s.psi = io::type_curves_from_csv(read_text(dir / "psi.csv"), "psi", kDim, g.price.points());
    return s;
}

double pair_mean(const std::vector<double>& v, std::size_t kind) {
    return 0.5 * (v[kKindTypes[kind][0]] + v[kKindTypes[kind][1]]);
}

struct VolumeTable {
    std::vector<double> count;
    std::vector<double> mean;

    [[nodiscard]] double kind_mean(std::size_t kind) const {
        const auto [a, b] = kKindTypes[kind];
        const double n = count[a] + count[b];
        return n > 0.0 ? (count[a] * mean[a] + count[b] * mean[b]) / n : 0.0;
    }
};

VolumeTable load_volumes(const Context& ctx) {
    const auto dir = require_stage(ctx, "preprocess");
    const auto table = io::parse_csv(read_text(dir / "volumes.csv"));
    VolumeTable v;
    v.count.assign(kDim, 0.0);
    v.mean.assign(kDim, 0.0);
    const auto ci = table.column("i");
    const auto cc = table.column("count");
    const auto cm = table.column("mean_volume");
    for (const auto& row : table.rows) {
        const auto i = static_cast<std::size_t>(io::parse_int(row.at(ci), "i"));
        if (i >= kDim) {
            throw DataError("volumes.csv: type index out of range");
        }
        v.count[i] = io::parse_double(row.at(cc), "count");
        v.mean[i] = io::parse_double(row.at(cm), "mean_volume");
    }
    return v;
}

std::string fmt_cell(double v) { return std::isfinite(v) ? fmt::format("{:.4g}", v) : std::string("-"); }

} // namespace

void cmd_zumbach(const Context& ctx) {
    const auto g = load_grids(ctx);
    const double cutoff = ctx.config.cutoff;
    StageWriter w(ctx, "zumbach");
    const auto head = ctx.provenance();
    std::vector<RouteKernels> loaded;
    for (const auto& route : active_routes(ctx)) {
        auto r = load_route(ctx, route, g);
        std::vector<std::vector<double>> z;
        std::vector<std::vector<double>> psi;
        nlohmann::json types = nlohmann::json::array();
        for (std::size_t i = 0; i < kDim; ++i) {
            const auto d = effective::zumbach_decompose(g.price, r.k[i], r.kd[i], cutoff);
            auto entry = decomposition_json(d);
            entry["type"] = type_label(i);
            if (route == "effective") {
                const auto bare = effective::bare_from_effective(d, r.spectral_radius);
                entry["bare_kd"] = bare.kd;
                entry["bare_k1"] = bare.k1;
            }
            types.push_back(entry);
            z.push_back(d.z);
            psi.push_back(d.psi);
        }
        w.write(route + "/zumbach.csv", io::type_curves_to_csv(g.price.points(), z, "Z", head));
        w.write(route + "/psi.csv", io::type_curves_to_csv(g.price.points(), psi, "psi", head));
        w.write_json(route + "/strengths.json", {{"meta", ctx.meta()},
                                                 {"route", route},
                                                 {"cutoff", cutoff},
                                                 {"spectral_radius", r.spectral_radius},
                                                 {"types", types}});
        loaded.push_back(std::move(r));
    }
    if (loaded.size() == 2) {
        nlohmann::json ratio = nlohmann::json::array();
        const double rho = loaded[0].spectral_radius;
        for (std::size_t i = 0; i < kDim; ++i) {
            const double full = calibrate::kernel_norm(g.price, loaded[0].kd[i], cutoff);
            const double eff = calibrate::kernel_norm(g.price, loaded[1].kd[i], cutoff);
            ratio.push_back({{"type", type_label(i)},
                             {"kd_norm", full},
                             {"kdbar_norm", eff},
                             {"ratio", full != 0.0 ? eff * (1.0 - rho) / full : std::numeric_limits<double>::quiet_NaN()}});
        }
        w.write_json("consistency.json", {{"meta", ctx.meta()},
                                          {"definition", "||Kd_bar|| (1 - ||phi||) / ||Kd||"},
                                          {"spectral_radius", rho},
                                          {"types", ratio}});
    }
    w.finish();
    ctx.note("zumbach: decomposition written for " + fmt::format("{}", fmt::join(active_routes(ctx), ", ")));
}

void cmd_liquidity(const Context& ctx) {
    const auto g = load_grids(ctx);
    const auto route = ctx.config.effective_route() ? std::string("effective") : std::string("full");
    const auto strengths = load_strengths(ctx, route, g);
    const auto pre = require_stage(ctx, "preprocess");
    const auto listing = read_json(pre / "sessions.json");
    const double cutoff = ctx.config.cutoff;
    const auto& opt = ctx.config.liquidity;

    liquidity::SignalKernels kernels;
    kernels.grid = g.price;
    kernels.cutoff = cutoff;
    kernels.psi.assign(g.price.size(), 0.0);
    kernels.z.assign(g.price.size(), 0.0);
    for (std::size_t i = 0; i < kDim; ++i) {
        for (std::size_t n = 0; n < g.price.size(); ++n) {
            kernels.psi[n] += strengths.psi[i][n] / static_cast<double>(kDim);
            kernels.z[n] += strengths.z[i][n] / static_cast<double>(kDim);
        }
    }
    const auto wc = g.price.weights_within(0.0, cutoff);
    double psi_mass = 0.0;
    double z_mass = 0.0;
    for (std::size_t n = 0; n < wc.size(); ++n) {
        psi_mass += wc[n] * kernels.psi[n];
        z_mass += wc[n] * kernels.z[n] * kernels.z[n];
    }
    if (!(z_mass > 0.0) || psi_mass == 0.0) {
        throw NumericalError("pooled volatility or trend kernel has zero norm");
    }
    for (std::size_t n = 0; n < g.price.size(); ++n) {
        kernels.psi[n] /= psi_mass;
        kernels.z[n] /= std::sqrt(z_mass);
    }

    struct Item {
        std::string name;
        double duration{0.0};
        std::vector<liquidity::BookSnapshot> book;
        PricePath price;
    };
    std::vector<Item> items;
    std::vector<std::string> without_book;
    for (const auto& s : listing.at("sessions")) {
        const auto name = s.at("name").get<std::string>();
        if (!s.at("book").get<bool>()) {
            without_book.push_back(name);
            continue;
        }
        items.push_back({name, s.at("duration").get<double>(),
                         liquidity::parse_book(read_text(pre / ("book_" + name + ".csv"))),
                         ingest::price_from_csv(read_text(pre / ("price_" + name + ".csv")), PriceLabel::exogenous)});
    }

    StageWriter w(ctx, "liquidity");
    const auto head = ctx.provenance();
    nlohmann::json summary;
    summary["meta"] = ctx.meta();
    summary["route"] = route;
    summary["sessions_without_book"] = without_book;

    if (!items.empty()) {
        double v_best = opt.v_best;
        if (!(v_best > 0.0)) {
            std::vector<liquidity::BookSnapshot> all;
            for (const auto& it : items) {
                all.insert(all.end(), it.book.begin(), it.book.end());
            }
            v_best = liquidity::default_reference_volume(all);
        }
        summary["v_best"] = v_best;
        std::vector<liquidity::SignalSeries> series;
        for (const auto& it : items) {
            const auto times = liquidity::sample_times(it.duration, opt.sample_step);
            auto s = liquidity::signals(it.price, kernels, times);
            s.seff = liquidity::spread_series(it.book, v_best, times);
            series.push_back(std::move(s));
        }
        liquidity::apply_ratio_floor(series, opt.floor_quantile);
        std::vector<double> spreads;
        std::vector<liquidity::LaggedCorrelation> c_mu;
        std::vector<liquidity::LaggedCorrelation> c_sigma;
        std::vector<liquidity::LaggedCorrelation> c_t;
        std::vector<double> weights;
        std::vector<std::string> skipped;
        std::size_t floored = 0;
        for (std::size_t s = 0; s < items.size(); ++s) {
            const auto& ser = series[s];
            w.write(items[s].name + "/signals.csv", liquidity::signals_to_csv(ser, head));
            floored += ser.floored;
            for (const double v : ser.seff) {
                if (std::isfinite(v)) {
                    spreads.push_back(v);
                }
            }
            try {
                auto a = liquidity::lagged_correlation(ser.mu2, ser.seff, opt.max_lag);
                auto b = liquidity::lagged_correlation(ser.sigma2, ser.seff, opt.max_lag);
                auto c = liquidity::lagged_correlation(ser.ratio, ser.seff, opt.max_lag);
                c_mu.push_back(std::move(a));
                c_sigma.push_back(std::move(b));
                c_t.push_back(std::move(c));
                weights.push_back(items[s].duration);
            } catch (const DataError&) {
                skipped.push_back(items[s].name);
            }
        }
        summary["floored_samples"] = floored;
        summary["ratio_floor"] = series.front().floor;
        summary["correlation_skipped"] = skipped;
        if (!c_mu.empty()) {
            w.write("correlations.csv",
                    liquidity::correlations_to_csv(liquidity::pool_correlations(c_mu, weights),
                                                   liquidity::pool_correlations(c_sigma, weights),
                                                   liquidity::pool_correlations(c_t, weights), opt.sample_step, head));
        }
        try {
            const auto tail = liquidity::survival_tail(spreads);
            w.write("survival.csv", liquidity::survival_to_csv(tail, head));
            summary["tail_exponent"] = tail.exponent;
        } catch (const DataError& e) {
            summary["tail_exponent"] = nullptr;
            summary["tail_note"] = e.what();
        }
    } else {
        ctx.note("liquidity: no session has book data; spread diagnostics skipped");
    }

    const auto volumes = load_volumes(ctx);
    const auto scalars = io::parse_csv(read_text(require_stage(ctx, "moments") / "scalars.csv"));
    double delta2 = std::numeric_limits<double>::quiet_NaN();
    for (const auto& row : scalars.rows) {
        if (row.at(0) == "delta_2") {
            delta2 = io::parse_double(row.at(1), "delta_2");
        }
    }
    std::array<liquidity::FlowInput, 3> flow{};
    for (std::size_t k = 0; k < 3; ++k) {
        flow[k] = {pair_mean(strengths.kd, k), pair_mean(strengths.k1, k), volumes.kind_mean(k)};
    }
    const auto flux = liquidity::liquidity_flux(flow[1], flow[0], flow[2], delta2);
    auto fj = liquidity::flux_to_json(flux, ctx.meta());
    fj["delta2"] = delta2;
    fj["route"] = route;
    w.write_json("flux.json", fj);
    w.write_json("summary.json", summary);
    w.finish();
    ctx.note(fmt::format("liquidity: J = {:.4g} shares/s", flux.j));
}

void cmd_report(const Context& ctx) {
    const auto g = load_grids(ctx);
    const auto volumes = load_volumes(ctx);
    StageWriter w(ctx, "report");
    const auto head = ctx.provenance();
    std::string md = "# Calibration report\n\n";
    md += fmt::format("tool: {}  \nconfig sha256: {}  \ngrid sha256: {}\n\n", kToolVersion, ctx.config_hash,
                      ctx.grid_hash);

    const bool full = ctx.config.full_route();
    const bool eff = ctx.config.effective_route();
    nlohmann::json base = read_json(require_stage(ctx, full ? "calibrate" : "effective") / "summary.json");
    const auto lambda = base.at("lambda").get<std::vector<double>>();
    const double delta2 = base.at("delta").at(2).get<double>();

    std::string t1 = head + "i,kind,side,Lambda,mean_volume,count\n";
    md += "## Table 1: average order volumes (shares)\n\n| type | Lambda (1/s) | V |\n|---|---|---|\n";
    for (std::size_t i = 0; i < kDim; ++i) {
        t1 += fmt::format("{},{},{},{},{}\n", i, type_label(i), io::format_double(lambda[i]),
                          io::format_double(volumes.mean[i]), io::format_double(volumes.count[i]));
        md += fmt::format("| {} | {} | {} |\n", type_label(i), fmt_cell(lambda[i]), fmt_cell(volumes.mean[i]));
    }
    w.write("table1.csv", t1);

    std::optional<Strengths> eff_strengths;
    if (eff) {
        eff_strengths = load_strengths(ctx, "effective", g);
        std::string t2 = head + "quantity,C,LO,MO\n";
        md += "\n## Table 2: quadratic contributions to the liquidity rate (shares/s)\n\n| quantity | C | LO | MO |\n"
              "|---|---|---|---|\n";
        const std::array<std::string_view, 3> names{"V_TrKbar_D2", "V_K1bar_D2", "V_Kdbar_D2"};
        for (std::size_t q = 0; q < 3; ++q) {
            std::array<double, 3> row{};
            for (std::size_t k = 0; k < 3; ++k) {
                const double kd = pair_mean(eff_strengths->kd, k);
                const double k1 = pair_mean(eff_strengths->k1, k);
                const double strength = q == 0 ? kd + k1 : (q == 1 ? k1 : kd);
                row[k] = volumes.kind_mean(k) * strength * delta2;
            }
            t2 += fmt::format("{},{},{},{}\n", names[q], io::format_double(row[0]), io::format_double(row[1]),
                              io::format_double(row[2]));
            md += fmt::format("| {} | {} | {} | {} |\n", names[q], fmt_cell(row[0]), fmt_cell(row[1]),
                              fmt_cell(row[2]));
        }
        w.write("table2.csv", t2);
    }

    std::string t3 = head + "quantity,t,C,LO,MO\n";
    md += "\n## Table 3: ratios at truncation t (s)\n\n| quantity | t | C | LO | MO |\n|---|---|---|---|---|\n";
    const auto add_row = [&](std::string_view name, double t, const std::vector<double>& per_type) {
        std::array<double, 3> row{};
        for (std::size_t k = 0; k < 3; ++k) {
            row[k] = pair_mean(per_type, k);
        }
        t3 += fmt::format("{},{},{},{},{}\n", name, io::format_double(t), io::format_double(row[0]),
                          io::format_double(row[1]), io::format_double(row[2]));
        md += fmt::format("| {} | {} | {} | {} | {} |\n", name, t, fmt_cell(row[0]), fmt_cell(row[1]),
                          fmt_cell(row[2]));
    };
    std::optional<calibrate::HawkesKernel> phi_full;
    std::optional<RouteKernels> kfull;
    std::optional<RouteKernels> kbar;
    if (full) {
        phi_full = load_phi(ctx, "calibrate", g);
        kfull = load_route(ctx, "full", g);
    }
    if (eff) {
        kbar = load_route(ctx, "effective", g);
    }
    const auto phi = phi_full ? *phi_full : load_phi(ctx, "effective", g);
    for (const double t : ctx.config.report_cutoffs) {
        const auto norms = calibrate::norm_matrix(phi, t);
        const double rho = calibrate::spectral_radius(norms);
        std::vector<double> hawkes(kDim, 0.0);
        for (std::size_t i = 0; i < kDim; ++i) {
            for (std::size_t j = 0; j < kDim; ++j) {
                hawkes[i] += norms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * lambda[j];
            }
        }
        std::vector<double> kd_norm(kDim, 0.0);
        std::vector<double> kdbar_norm(kDim, 0.0);
        std::vector<effective::ZumbachDecomposition> dec;
        for (std::size_t i = 0; i < kDim; ++i) {
            if (kfull) {
                kd_norm[i] = calibrate::kernel_norm(g.price, kfull->kd[i], t);
            }
            if (kbar) {
                kdbar_norm[i] = calibrate::kernel_norm(g.price, kbar->kd[i], t);
                dec.push_back(effective::zumbach_decompose(g.price, kbar->k[i], kbar->kd[i], t));
            }
        }
        std::vector<double> r(kDim);
        if (kfull) {
            const auto alpha0 = calibrate::solve_base_rate(lambda, norms, kd_norm, delta2);
            for (std::size_t i = 0; i < kDim; ++i) {
                r[i] = alpha0[i] / lambda[i];
            }
            add_row("alpha0/Lambda", t, r);
            for (std::size_t i = 0; i < kDim; ++i) {
                r[i] = delta2 * kd_norm[i] / lambda[i];
            }
            add_row("D2_TrK/Lambda", t, r);
        }
        if (kbar) {
            for (std::size_t i = 0; i < kDim; ++i) {
                r[i] = delta2 * kdbar_norm[i] / lambda[i];
            }
            add_row("D2_TrKbar/Lambda", t, r);
        }
        if (kfull) {
            const auto alpha0 = calibrate::solve_base_rate(lambda, norms, kd_norm, delta2);
            for (std::size_t i = 0; i < kDim; ++i) {
                r[i] = alpha0[i] / hawkes[i];
            }
            add_row("alpha0/sum_phi_Lambda", t, r);
        }
        if (kbar) {
            for (std::size_t i = 0; i < kDim; ++i) {
                r[i] = delta2 * (1.0 - rho) * dec[i].k1 / hawkes[i];
            }
            add_row("D2_K1/sum_phi_Lambda", t, r);
            for (std::size_t i = 0; i < kDim; ++i) {
                r[i] = delta2 * (1.0 - rho) * dec[i].kd / hawkes[i];
            }
            add_row("D2_Kd/sum_phi_Lambda", t, r);
            for (std::size_t i = 0; i < kDim; ++i) {
                r[i] = delta2 * dec[i].k1 / lambda[i];
            }
            add_row("D2_K1bar/Lambda", t, r);
            for (std::size_t i = 0; i < kDim; ++i) {
                r[i] = delta2 * dec[i].kd / lambda[i];
            }
            add_row("D2_Kdbar/Lambda", t, r);
        }
    }
    w.write("table3.csv", t3);

    const auto copy = [&](const fs::path& from, const std::string& to) {
        if (fs::exists(from)) {
            w.write(to, read_text(from));
        }
    };
    if (full) {
        copy(ctx.stage_dir("calibrate") / "phi.csv", "fig1_phi.csv");
        copy(ctx.stage_dir("calibrate") / "L.csv", "fig2_L.csv");
        copy(ctx.stage_dir("calibrate") / "Kd.csv", "fig2_Kd.csv");
        copy(ctx.stage_dir("calibrate") / "K.csv", "fig2_K.csv");
    }
    if (eff) {
        copy(ctx.stage_dir("effective") / "Lbar.csv", "fig3_Lbar.csv");
        copy(ctx.stage_dir("effective") / "Kdbar.csv", "fig3_Kdbar.csv");
        copy(ctx.stage_dir("effective") / "Kbar.csv", "fig3_Kbar.csv");
        copy(ctx.stage_dir("zumbach") / "effective" / "zumbach.csv", "fig4_Z.csv");
        copy(ctx.stage_dir("zumbach") / "effective" / "psi.csv", "fig4_psi.csv");
    }
    if (stage_done(ctx, "liquidity")) {
        const auto dir = require_stage(ctx, "liquidity");
        copy(dir / "survival.csv", "fig5_survival.csv");
        copy(dir / "correlations.csv", "fig5_correlations.csv");
        const auto flux = read_json(dir / "flux.json");
        std::string f6 = head + "kind,diagonal,rank_one,total\n";
        md += fmt::format("\n## Quadratic liquidity flux\n\nJ = {} shares/s (diagonal {}, rank-one {})\n\n",
                          fmt_cell(flux.at("J").get<double>()),
                          fmt_cell(flux.at("by_mechanism").at("diagonal").get<double>()),
                          fmt_cell(flux.at("by_mechanism").at("rank_one").get<double>()));
        for (const auto kind : kKindLabels) {
            const auto& c = flux.at("by_kind").at(std::string(kind));
            f6 += fmt::format("{},{},{},{}\n", kind, io::format_double(c.at("diagonal").get<double>()),
                              io::format_double(c.at("rank_one").get<double>()),
                              io::format_double(c.at("total").get<double>()));
        }
        w.write("fig6_flux.csv", f6);
    }
    w.write("tables.md", md);
    w.finish();
    ctx.note(fmt::format("report: written to {}", w.dir().string()));
}

void cmd_run(const Context& ctx) {
    if (ctx.config.inputs.empty()) {
        cmd_simulate(ctx);
    }
    cmd_preprocess(ctx);
    cmd_moments(ctx);
    if (ctx.config.full_route()) {
        cmd_calibrate(ctx);
    }
    if (ctx.config.effective_route()) {
        cmd_effective(ctx);
    }
    cmd_zumbach(ctx);
    cmd_liquidity(ctx);
    cmd_report(ctx);
}

} // namespace gqh::cli
