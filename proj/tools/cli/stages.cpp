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
#include "gqhawkes/simulate.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>

namespace gqh::cli {

namespace fs = std::filesystem;

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

fs::path sidecar(const fs::path& session, std::string_view kind) {
    return session.parent_path() / (session.stem().string() + "." + std::string(kind) + ".csv");
}

std::vector<fs::path> session_files(const Context& ctx) {
    std::vector<std::string> patterns;
    if (ctx.config.inputs.empty()) {
        require_stage(ctx, "simulate");
        patterns.push_back((ctx.stage_dir("simulate") / "session_*.csv").string());
    } else {
        for (const auto& p : ctx.config.inputs) {
            const fs::path path(p);
            patterns.push_back((path.is_absolute() ? path : ctx.config.base_dir / path).string());
        }
    }
    std::vector<fs::path> files;
    for (const auto& pattern : patterns) {
        for (auto& f : glob_files(pattern)) {
            const auto name = f.filename().string();
            if (!ends_with(name, ".price.csv") && !ends_with(name, ".book.csv")) {
                files.push_back(std::move(f));
            }
        }
    }
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    if (files.empty()) {
        throw DataError(fmt::format("no session files match {}", fmt::join(patterns, ", ")));
    }
    return files;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row[static_cast<std::size_t>(j)] = m(i, j);
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace

void cmd_simulate(const Context& ctx) {
    if (!ctx.config.simulation) {
        throw ConfigError("the config has no 'simulation' section");
    }
    auto config = simulate::config_from_json(*ctx.config.simulation);
    config.seed = ctx.config.seed;
    if (config.dim != kNumEventTypes) {
        throw ConfigError(fmt::format("pipeline simulations need {} event types, got {}", kNumEventTypes, config.dim));
    }
    const std::size_t count = ctx.config.sim_sessions;
    std::vector<simulate::SimOutput> outputs(count);
    std::vector<std::string> errors(count);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(count); ++s) {
        try {
            outputs[static_cast<std::size_t>(s)] = simulate::simulate_session(config, static_cast<std::uint64_t>(s));
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(s)] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) {
            throw NumericalError(e);
        }
    }
    StageWriter w(ctx, "simulate");
    const auto head = ctx.provenance();
    nlohmann::json sessions = nlohmann::json::array();
    for (std::size_t s = 0; s < count; ++s) {
        const auto name = fmt::format("session_{:03}", s);
        const auto& o = outputs[s];
        w.write(name + ".csv", head + ingest::session_to_csv(simulate::to_session_series(o, name)));
        w.write(name + ".price.csv", ingest::price_to_csv(o.price, head));
        if (!o.book.empty()) {
            w.write(name + ".book.csv", head + liquidity::book_to_csv(o.book));
        }
        sessions.push_back({{"name", name}, {"events", o.times.size()}, {"price_jumps", o.price.size()},
                            {"clipped", o.clipped}, {"proposals", o.proposals}});
    }
    nlohmann::json truth;
    truth["meta"] = ctx.meta();
    truth["config"] = simulate::config_to_json(config);
    truth["lambda"] = simulate::analytic_moments(config);
    truth["delta2"] = config.price_rate * config.law.moment(2);
    truth["sessions"] = sessions;
    w.write_json("truth.json", truth);
    w.finish();
    ctx.note(fmt::format("simulate: {} sessions written to {}", count, w.dir().string()));
}

void cmd_preprocess(const Context& ctx) {
    const auto files = session_files(ctx);
    const auto& cfg = ctx.config;
    StageWriter w(ctx, "preprocess");
    std::vector<SessionSeries> sessions;
    std::vector<bool> has_price;
    std::vector<bool> has_book;
    for (const auto& f : files) {
        w.input(f);
        sessions.push_back(ingest::read_session(f));
        has_price.push_back(fs::exists(sidecar(f, "price")));
        has_book.push_back(fs::exists(sidecar(f, "book")));
    }
    for (std::size_t a = 0; a < sessions.size(); ++a) {
        for (std::size_t b = a + 1; b < sessions.size(); ++b) {
            if (sessions[a].name == sessions[b].name) {
                throw DataError(fmt::format("two session files share the name '{}'", sessions[a].name));
            }
        }
    }

    PriceSource source = cfg.price;
    if (source == PriceSource::automatic) {
        source = std::all_of(has_price.begin(), has_price.end(), [](bool b) { return b; }) ? PriceSource::exogenous
                                                                                             : PriceSource::surprise;
    }
    std::vector<PricePath> prices;
    if (source == PriceSource::exogenous) {
        for (std::size_t s = 0; s < files.size(); ++s) {
            const auto path = sidecar(files[s], "price");
            if (!has_price[s]) {
                throw DataError(fmt::format("missing price sidecar {}", path.string()));
            }
            w.input(path);
            prices.push_back(ingest::price_from_csv(io::read_file(path), PriceLabel::exogenous));
        }
    } else {
        for (const auto& s : sessions) {
            prices.push_back(ingest::micro_price(s));
        }
        if (source == PriceSource::surprise) {
            const auto rho = ingest::estimate_autocorr(prices, ingest::autocorr_bins(cfg.autocorr_max_lag));
            std::string text = ctx.provenance() + "lo,hi,rho,pairs\n";
            for (std::size_t b = 0; b < rho.bins.size(); ++b) {
                text += fmt::format("{},{},{},{}\n", io::format_double(rho.bins.lo[b]), io::format_double(rho.bins.hi[b]),
                                    io::format_double(rho.values[b]), io::format_double(rho.pairs[b]));
            }
            w.write("autocorr.csv", text);
            for (auto& p : prices) {
                p = ingest::surprise_price(p, rho);
            }
        }
    }

    std::vector<std::vector<liquidity::BookSnapshot>> books(files.size());
    for (std::size_t s = 0; s < files.size(); ++s) {
        if (has_book[s]) {
            const auto path = sidecar(files[s], "book");
            w.input(path);
            books[s] = liquidity::parse_book(io::read_file(path));
        }
    }

    if (cfg.rescale) {
        const auto profile = ingest::build_intraday_profile(sessions, cfg.profile_bin);
        w.write("profile.csv", ctx.provenance() + ingest::profile_to_csv(profile));
        for (std::size_t s = 0; s < sessions.size(); ++s) {
            sessions[s] = ingest::rescale_time(sessions[s], profile);
            prices[s] = ingest::rescale_time(prices[s], profile);
            for (auto& snap : books[s]) {
                snap.time = profile.rescale(std::min(snap.time, profile.span));
            }
        }
    }

    double total_time = 0.0;
    std::vector<double> volume_sum(kNumEventTypes, 0.0);
    std::vector<double> volume_count(kNumEventTypes, 0.0);
    std::string rejected = ctx.provenance() + "session,line,reason\n";
    nlohmann::json listing = nlohmann::json::array();
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        const auto& ss = sessions[s];
        total_time += ss.duration;
        for (const auto& r : ss.rejected) {
            auto reason = r.reason;
            std::replace(reason.begin(), reason.end(), ',', ';');
            rejected += fmt::format("{},{},{}\n", ss.name, r.line, reason);
        }
        for (const auto& ev : ss.events) {
            volume_sum[ev.type()] += static_cast<double>(ev.volume);
            volume_count[ev.type()] += 1.0;
        }
        w.write("events_" + ss.name + ".csv", ctx.provenance() + ingest::session_to_csv(ss));
        w.write("price_" + ss.name + ".csv", ingest::price_to_csv(prices[s], ctx.provenance()));
        if (has_book[s]) {
            w.write("book_" + ss.name + ".csv", ctx.provenance() + liquidity::book_to_csv(books[s]));
        }
        listing.push_back({{"name", ss.name},
                           {"duration", ss.duration},
                           {"events", ss.events.size()},
                           {"rejected", ss.rejected.size()},
                           {"price_jumps", prices[s].size()},
                           {"book", has_book[s]}});
    }
    w.write("rejected.csv", rejected);
    std::string volumes = ctx.provenance() + "i,kind,side,count,mean_volume\n";
    for (std::size_t i = 0; i < kNumEventTypes; ++i) {
        volumes += fmt::format("{},{},{},{}\n", i, type_label(i), io::format_double(volume_count[i]),
                               io::format_double(volume_count[i] > 0.0 ? volume_sum[i] / volume_count[i] : 0.0));
    }
    w.write("volumes.csv", volumes);

    const auto check = ingest::martingale_check(prices, total_time);
    static constexpr std::array<std::string_view, 4> labels{"auto", "micro", "surprise", "exogenous"};
    w.write_json("martingale.json", {{"meta", ctx.meta()},
                                     {"price", labels[static_cast<std::size_t>(source)]},
                                     {"delta1", check.delta1},
                                     {"tolerance", check.tolerance},
                                     {"ok", check.ok()}});
    w.write_json("sessions.json", {{"meta", ctx.meta()}, {"sessions", listing}});
    w.finish();
    if (!check.ok()) {
        ctx.note(fmt::format("preprocess: warning, mean price drift {} exceeds {}", check.delta1, check.tolerance));
    }
    ctx.note(fmt::format("preprocess: {} sessions, {} price", sessions.size(), labels[static_cast<std::size_t>(source)]));
}

namespace {

std::vector<SessionData> load_preprocessed(const Context& ctx, std::vector<std::string>* names = nullptr,
                                           std::vector<double>* durations = nullptr) {
    const auto dir = require_stage(ctx, "preprocess");
    const auto listing = read_json(dir / "sessions.json");
    std::vector<SessionData> out;
    for (const auto& s : listing.at("sessions")) {
        const auto name = s.at("name").get<std::string>();
        const auto session = ingest::parse_session(read_text(dir / ("events_" + name + ".csv")), name);
        SessionData data{ingest::typed_events(session),
                         ingest::price_from_csv(read_text(dir / ("price_" + name + ".csv")), PriceLabel::exogenous)};
        out.push_back(std::move(data));
        if (names != nullptr) {
            names->push_back(name);
        }
        if (durations != nullptr) {
            durations->push_back(session.duration);
        }
    }
    return out;
}

moments::MomentCurves load_curves(const Context& ctx) {
    const auto dir = require_stage(ctx, "moments");
    const auto set = moments::MomentSet::read(dir.string());
    auto raw = moments::curves(set);
    if (!ctx.config.smoothing) {
        return raw;
    }
    try {
        return moments::smooth(raw);
    } catch (const DataError& e) {
        ctx.note(fmt::format("smoothing: chi_P2P2 kept unsmoothed ({})", e.what()));
        moments::SmoothingOptions options;
        options.p2p2_powerlaw = false;
        return moments::smooth(raw, options);
    }
}

} // namespace

void cmd_moments(const Context& ctx) {
    const auto sessions = load_preprocessed(ctx);
    const auto hawkes = grids::TimeGrid::build(ctx.config.hawkes_grid);
    const auto price = grids::TimeGrid::build(ctx.config.price_grid);
    std::vector<moments::MomentSet> per_session;
    for (const auto& s : sessions) {
        moments::MomentSet set(kNumEventTypes, hawkes, price, true);
        set.add_session(s);
        per_session.push_back(std::move(set));
    }
    moments::MomentSet total(kNumEventTypes, hawkes, price, true);
    for (const auto& s : per_session) {
        total.merge(s);
    }
    const auto final_set = ctx.config.symmetrize ? moments::symmetrize_bid_ask(total) : total;

    StageWriter w(ctx, "moments");
    std::string head = ctx.provenance();
    final_set.write(w.dir().string(), head);
    for (const auto* name : {"scalars.csv", "chi_nn.csv", "chi_np.csv", "chi_np2.csv", "chi_npp.csv", "chi_p2p2.csv",
                             "hawkes_grid.csv", "price_grid.csv"}) {
        w.adopt(name);
    }
    if (per_session.size() >= 2) {
        const auto je = moments::jackknife(per_session);
        std::string text = head + "quantity,i,j,t,stderr\n";
        const auto& hb = hawkes.bins();
        const auto& pb = price.bins();
        for (std::size_t i = 0; i < kNumEventTypes; ++i) {
            for (std::size_t j = 0; j < kNumEventTypes; ++j) {
                for (std::size_t b = 0; b < hb.size(); ++b) {
                    text += fmt::format("nn,{},{},{},{}\n", i, j, io::format_double(hb.center(b)),
                                        io::format_double(je.nn[(i * kNumEventTypes + j) * hb.size() + b]));
                }
            }
        }
        for (std::size_t i = 0; i < kNumEventTypes; ++i) {
            for (std::size_t b = 0; b < pb.size(); ++b) {
                text += fmt::format("np,{},,{},{}\n", i, io::format_double(pb.center(b)),
                                    io::format_double(je.np[i * pb.size() + b]));
                text += fmt::format("np2,{},,{},{}\n", i, io::format_double(pb.center(b)),
                                    io::format_double(je.np2[i * pb.size() + b]));
            }
        }
        for (std::size_t b = 0; b < pb.size(); ++b) {
            text += fmt::format("p2p2,,,{},{}\n", io::format_double(pb.center(b)), io::format_double(je.p2p2[b]));
        }
        w.write("jackknife.csv", text);
    }
    w.finish();
    ctx.note(fmt::format("moments: {} sessions, {:.0f} s observed", sessions.size(), final_set.duration()));
}

void cmd_calibrate(const Context& ctx) {
    const auto curves = load_curves(ctx);
    calibrate::CalibrationOptions options;
    options.cutoff = ctx.config.cutoff;
    options.solve.ridge = ctx.config.ridge;
    const auto cal = calibrate::calibrate(curves, options);

    StageWriter w(ctx, "calibrate");
    const auto head = ctx.provenance();
    const auto hn = curves.hawkes_grid.nodes();
    const auto pn = curves.price_grid.nodes();
    w.write("phi.csv", io::matrix_curves_to_csv(hn, cal.phi.dim, cal.phi.values, head));
    w.write("L.csv", io::type_curves_to_csv(pn, cal.price.l, "value", head));
    w.write("Kd.csv", io::type_curves_to_csv(pn, cal.price.kd, "value", head));
    w.write("K.csv", io::surfaces_to_csv(pn, cal.price.k, head));
    std::string alpha = head + "i,kind,side,alpha0\n";
    for (std::size_t i = 0; i < cal.alpha0.size(); ++i) {
        alpha += fmt::format("{},{},{}\n", i, type_label(i), io::format_double(cal.alpha0[i]));
    }
    w.write("alpha0.csv", alpha);
    nlohmann::json summary;
    summary["meta"] = ctx.meta();
    summary["cutoff"] = cal.cutoff;
    summary["lambda"] = curves.lambda;
    summary["delta"] = curves.delta;
    summary["phi_norms"] = matrix_json(cal.phi_norms);
    summary["spectral_radius"] = cal.spectral_radius;
    summary["alpha0"] = cal.alpha0;
    summary["l_norms"] = cal.l_norms;
    summary["kd_norms"] = cal.kd_norms;
    summary["decoupling"] = cal.decoupling;
    summary["dropped_terms"] = matrix_json(cal.dropped_terms);
    summary["hawkes_rcond"] = cal.phi.rcond;
    summary["hawkes_residual"] = cal.phi.residual;
    summary["price_rcond"] = cal.price.rcond;
    summary["price_residual"] = cal.price.residual;
    summary["hawkes_grid_sha256"] = curves.hawkes_grid.hash();
    summary["price_grid_sha256"] = curves.price_grid.hash();
    w.write_json("summary.json", summary);
    w.finish();
    ctx.note(fmt::format("calibrate: spectral radius {:.4f}, decoupling ratio {:.4f}", cal.spectral_radius,
                         cal.decoupling));
}

void cmd_effective(const Context& ctx) {
    const auto curves = load_curves(ctx);
    calibrate::SolveOptions solve;
    solve.ridge = ctx.config.ridge;
    const auto phi = calibrate::solve_hawkes(curves, solve);
    const auto r = effective::resolvent(phi);
    const auto eff = effective::solve_effective_l_kd(curves, solve);
    auto kbar = effective::effective_k(curves);
    if (ctx.config.smoothing) {
        for (auto& k : kbar) {
            k = effective::median_smooth_off_diagonal(k);
        }
    }
    const auto l_bare = effective::bare_l_from_effective(eff, phi);
    const double cutoff = ctx.config.cutoff;
    const auto norms = calibrate::norm_matrix(phi, cutoff);

    StageWriter w(ctx, "effective");
    const auto head = ctx.provenance();
    const auto hn = curves.hawkes_grid.nodes();
    const auto pn = curves.price_grid.nodes();
    w.write("phi.csv", io::matrix_curves_to_csv(hn, phi.dim, phi.values, head));
    w.write("resolvent.csv", io::matrix_curves_to_csv(hn, r.dim, r.values, head));
    w.write("Lbar.csv", io::type_curves_to_csv(pn, eff.l, "value", head));
    w.write("Kdbar.csv", io::type_curves_to_csv(pn, eff.kd, "value", head));
    w.write("Kbar.csv", io::surfaces_to_csv(pn, kbar, head));
    w.write("L_bare.csv", io::type_curves_to_csv(pn, l_bare, "value", head));
    std::vector<double> lbar_norms;
    std::vector<double> kdbar_norms;
    for (std::size_t i = 0; i < eff.dim; ++i) {
        lbar_norms.push_back(calibrate::kernel_norm(curves.price_grid, eff.l[i], cutoff));
        kdbar_norms.push_back(calibrate::kernel_norm(curves.price_grid, eff.kd[i], cutoff));
    }
    nlohmann::json summary;
    summary["meta"] = ctx.meta();
    summary["cutoff"] = cutoff;
    summary["lambda"] = curves.lambda;
    summary["delta"] = curves.delta;
    summary["phi_norms"] = matrix_json(norms);
    summary["spectral_radius"] = calibrate::spectral_radius(norms);
    summary["resolvent_norms"] = matrix_json(r.norms);
    summary["resolvent_order"] = r.order;
    summary["lbar_norms"] = lbar_norms;
    summary["kdbar_norms"] = kdbar_norms;
    summary["price_rcond"] = eff.rcond;
    w.write_json("summary.json", summary);
    w.finish();
    ctx.note(fmt::format("effective: spectral radius {:.4f}", calibrate::spectral_radius(norms)));
}

} // namespace gqh::cli
