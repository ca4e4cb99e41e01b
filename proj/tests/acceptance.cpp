// Acceptance suite: one line per criterion, tolerances pinned below.
// Usage: acceptance [criterion numbers...]

#include "analytic.hpp"
#include "rank_one_oracle.hpp"
#include "sim_configs.hpp"
#include "synthetic.hpp"

#include "pipeline.hpp"

#include "gqhawkes/calibrate.hpp"
#include "gqhawkes/effective.hpp"
#include "gqhawkes/io.hpp"
#include "gqhawkes/liquidity.hpp"
#include "gqhawkes/moments.hpp"
#include "gqhawkes/simulate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

using namespace gqh;
namespace fs = std::filesystem;

namespace {

namespace tol {
constexpr double estimator_relative = 1e-12;
constexpr double estimator_seconds = 60.0;
constexpr double hawkes_l2 = 0.05;
constexpr double hawkes_refinement_ratio = 0.55;
constexpr double resolvent_shape = 0.01;
constexpr double resolvent_norm = 1e-4;
constexpr double round_trip = 0.15;
constexpr double round_trip_seconds = 600.0;
constexpr std::size_t round_trip_min_events = 1'000'000;
constexpr double rank_one_objective = 1e-8;
constexpr double rank_one_exact = 1e-10;
constexpr double rank_one_normalization = 1e-10;
constexpr double closure_stderr = 3.0;
constexpr double powerlaw_exact = 1e-6;
constexpr double powerlaw_noisy_exponent = 0.1;
constexpr double flux_table = 1e-12;
constexpr double pareto_exponent = 0.3;
constexpr double causality_level = 0.01;
constexpr double merge_relative = 1e-12;
} // namespace tol

struct Outcome {
    bool pass{true};
    std::vector<std::string> notes;

    void check(bool ok, std::string note) {
        pass = pass && ok;
        notes.push_back((ok ? "" : "FAILED ") + std::move(note));
    }
};

double relative_error(double estimate, double truth) { return std::abs(estimate - truth) / std::abs(truth); }

// 1. Estimators against a direct double loop.

struct NaiveMoments {
    std::vector<double> lambda, delta, nn, np, np2, npp, p2p2;
    std::vector<double> nn_scale, np_scale, np2_scale, npp_scale, p2p2_scale;
};

long find_bin(const grids::Bins& bins, double lag) {
    for (std::size_t b = 0; b < bins.size(); ++b) {
        if (lag >= bins.lo[b] && lag < bins.hi[b]) {
            return static_cast<long>(b);
        }
    }
    return -1;
}

NaiveMoments naive_moments(const SessionData& s, const grids::TimeGrid& hawkes, const grids::TimeGrid& price) {
    const auto& hb = hawkes.bins();
    const auto& pb = price.bins();
    const std::size_t dim = s.events.times.size();
    const std::size_t nh = hb.size();
    const std::size_t np = pb.size();
    const double t = s.events.duration;
    NaiveMoments m;
    m.lambda.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        m.lambda[i] = static_cast<double>(s.events.times[i].size()) / t;
    }
    m.delta.assign(5, 0.0);
    for (const double d : s.price.jumps) {
        for (int k = 1; k <= 4; ++k) {
            m.delta[static_cast<std::size_t>(k)] += std::pow(d, k) / t;
        }
    }
    m.nn.assign(dim * dim * nh, 0.0);
    m.nn_scale.assign(m.nn.size(), 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            for (std::size_t n = 0; n < s.events.times[i].size(); ++n) {
                for (std::size_t p = 0; p < s.events.times[j].size(); ++p) {
                    if (i == j && n == p) {
                        continue;
                    }
                    const long b = find_bin(hb, s.events.times[i][n] - s.events.times[j][p]);
                    if (b >= 0) {
                        m.nn[(i * dim + j) * nh + static_cast<std::size_t>(b)] += 1.0;
                    }
                }
            }
            for (std::size_t b = 0; b < nh; ++b) {
                auto& v = m.nn[(i * dim + j) * nh + b];
                v /= t * hb.width(b);
                m.nn_scale[(i * dim + j) * nh + b] = v + m.lambda[i] * m.lambda[j];
                v -= m.lambda[i] * m.lambda[j];
            }
        }
    }
    m.np.assign(dim * np, 0.0);
    m.np2.assign(dim * np, 0.0);
    m.npp.assign(dim * np * np, 0.0);
    m.np_scale.assign(m.np.size(), 0.0);
    m.np2_scale.assign(m.np2.size(), 0.0);
    m.npp_scale.assign(m.npp.size(), 0.0);
    const auto& jt = s.price.times;
    const auto& jd = s.price.jumps;
    for (std::size_t i = 0; i < dim; ++i) {
        for (const double te : s.events.times[i]) {
            std::vector<std::pair<std::size_t, double>> hits;
            for (std::size_t p = 0; p < jt.size(); ++p) {
                const long b = find_bin(pb, te - jt[p]);
                if (b >= 0) {
                    const auto bb = static_cast<std::size_t>(b);
                    m.np[i * np + bb] += jd[p];
                    m.np_scale[i * np + bb] += std::abs(jd[p]);
                    m.np2[i * np + bb] += jd[p] * jd[p];
                    hits.emplace_back(bb, jd[p]);
                }
            }
            for (std::size_t x = 0; x < hits.size(); ++x) {
                for (std::size_t y = 0; y < hits.size(); ++y) {
                    if (x == y) {
                        continue;
                    }
                    const std::size_t k = (i * np + hits[x].first) * np + hits[y].first;
                    m.npp[k] += hits[x].second * hits[y].second;
                    m.npp_scale[k] += std::abs(hits[x].second * hits[y].second);
                }
            }
        }
        for (std::size_t b = 0; b < np; ++b) {
            m.np[i * np + b] /= t * pb.width(b);
            m.np_scale[i * np + b] /= t * pb.width(b);
            auto& v = m.np2[i * np + b];
            v /= t * pb.width(b);
            m.np2_scale[i * np + b] = v + m.lambda[i] * m.delta[2];
            v -= m.lambda[i] * m.delta[2];
            for (std::size_t c = 0; c < np; ++c) {
                const std::size_t k = (i * np + b) * np + c;
                m.npp[k] /= t * pb.width(b) * pb.width(c);
                m.npp_scale[k] /= t * pb.width(b) * pb.width(c);
            }
        }
    }
    m.p2p2.assign(np, 0.0);
    m.p2p2_scale.assign(np, 0.0);
    for (std::size_t n = 0; n < jt.size(); ++n) {
        for (std::size_t p = 0; p < jt.size(); ++p) {
            if (n == p) {
                continue;
            }
            const long b = find_bin(pb, jt[n] - jt[p]);
            if (b >= 0) {
                m.p2p2[static_cast<std::size_t>(b)] += jd[n] * jd[n] * jd[p] * jd[p];
            }
        }
    }
    for (std::size_t b = 0; b < np; ++b) {
        m.p2p2[b] /= t * pb.width(b);
        m.p2p2_scale[b] = m.p2p2[b] + m.delta[2] * m.delta[2];
        m.p2p2[b] -= m.delta[2] * m.delta[2];
    }
    return m;
}

double worst_relative(std::span<const double> fast, const std::vector<double>& naive, const std::vector<double>& scale) {
    double worst = 0.0;
    for (std::size_t k = 0; k < naive.size(); ++k) {
        const double diff = std::abs(fast[k] - naive[k]);
        if (diff == 0.0) {
            continue;
        }
        const double s = scale.empty() ? std::abs(naive[k]) : scale[k];
        worst = std::max(worst, s > 0.0 ? diff / s : std::numeric_limits<double>::infinity());
    }
    return worst;
}

Outcome estimator_oracle() {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    const auto hawkes = grids::TimeGrid::build(grids::GridSpec::hawkes_default());
    const auto price = grids::TimeGrid::build(grids::GridSpec::price_default());
    std::mt19937_64 rng(20240917);
    std::uniform_int_distribution<std::size_t> events(500, 10'000);
    std::uniform_int_distribution<std::size_t> jumps(20, 150);
    const std::size_t dims[] = {1, 2, 6};
    double worst = 0.0;
    std::size_t max_events = 0;
    for (int s = 0; s < 20; ++s) {
        const std::size_t dim = dims[s % 3];
        const double lattice = s % 4 == 3 ? 0.01 : 0.0;
        const auto session = testing::random_session(rng, dim, events(rng), jumps(rng), 2000.0, lattice);
        std::size_t n = 0;
        for (const auto& t : session.events.times) {
            n += t.size();
        }
        max_events = std::max(max_events, n);
        moments::MomentSet set(dim, hawkes, price, true);
        set.add_session(session);
        const auto naive = naive_moments(session, hawkes, price);
        for (std::size_t i = 0; i < dim; ++i) {
            worst = std::max(worst, relative_error(set.lambda(i), naive.lambda[i]));
        }
        for (std::size_t k = 1; k <= 4; ++k) {
            worst = std::max(worst, std::abs(set.delta(k) - naive.delta[k]) /
                                        std::max(std::abs(naive.delta[k]), naive.delta[2] > 0.0 ? 1e-300 : 1.0));
        }
        worst = std::max(worst, worst_relative(set.nn_values(), naive.nn, naive.nn_scale));
        worst = std::max(worst, worst_relative(set.np_values(), naive.np, naive.np_scale));
        worst = std::max(worst, worst_relative(set.np2_values(), naive.np2, naive.np2_scale));
        worst = std::max(worst, worst_relative(set.npp_values(), naive.npp, naive.npp_scale));
        worst = std::max(worst, worst_relative(set.p2p2_values(), naive.p2p2, naive.p2p2_scale));
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.check(worst <= tol::estimator_relative, fmt::format("max relative error {:.2e} (<= {:.0e})", worst,
                                                            tol::estimator_relative));
    out.check(max_events <= 10'000, fmt::format("largest session {} events", max_events));
    out.check(seconds <= tol::estimator_seconds, fmt::format("{:.1f} s", seconds));
    return out;
}

// 2. Hawkes kernel from the closed-form covariance.

double exp_hawkes_error(const grids::GridSpec& spec) {
    const double alpha = 0.5;
    const double beta = 1.0;
    const double lambda = 1.0;
    const auto grid = grids::TimeGrid::build(spec);
    const std::vector<std::vector<double>> chi{
        testing::sample_nodes(grid, [&](double t) { return testing::exp_hawkes_covariance(lambda, alpha, beta, t); })};
    const std::vector<double> rates{lambda};
    const auto phi = calibrate::solve_hawkes(grid, chi, rates);
    const auto truth = testing::sample_nodes(grid, [&](double t) { return alpha * beta * std::exp(-beta * t); });
    return testing::grid_l2_error(grid, phi.at(0, 0), truth);
}

Outcome hawkes_round_trip() {
    Outcome out;
    const auto spec = grids::GridSpec::hawkes_default();
    const double coarse = exp_hawkes_error(spec);
    const double fine = exp_hawkes_error(spec.refined(2));
    out.check(coarse <= tol::hawkes_l2, fmt::format("grid L2 error {:.4f} (<= {})", coarse, tol::hawkes_l2));
    out.check(fine <= tol::hawkes_refinement_ratio * coarse,
              fmt::format("doubled grid {:.4f}, ratio {:.3f} (<= {})", fine, fine / coarse,
                          tol::hawkes_refinement_ratio));
    return out;
}

// 3. Resolvent of an exponential kernel.

Outcome resolvent_closed_form() {
    Outcome out;
    const auto grid = grids::TimeGrid::build(grids::GridSpec::hawkes_default());
    calibrate::HawkesKernel phi;
    phi.dim = 1;
    phi.grid = grid;
    phi.values = {testing::sample_nodes(grid, [](double t) { return 0.5 * std::exp(-t); })};
    const auto r = effective::resolvent(phi);
    const auto nodes = grid.nodes();
    double worst = 0.0;
    for (std::size_t n = 1; n < nodes.size(); ++n) {
        worst = std::max(worst, std::abs(r.at(0, 0)[n] - 0.5 * std::exp(-0.5 * nodes[n])));
    }
    worst /= 0.5;
    const double norm = r.phi_norms(0, 0);
    const double identity = std::abs(r.norms(0, 0) - norm / (1.0 - norm)) / (norm / (1.0 - norm));
    out.check(worst <= tol::resolvent_shape,
              fmt::format("max deviation {:.2e} of R(0) (<= {})", worst, tol::resolvent_shape));
    out.check(identity <= tol::resolvent_norm,
              fmt::format("norm identity {:.2e} (<= {:.0e})", identity, tol::resolvent_norm));
    return out;
}

// 4. Simulate, estimate and calibrate through both routes.

struct RoundTripTruth {
    double phi_self{0.3};
    double phi_cross{0.2};
    double phi_rate{10.0};
    double l_norm{0.15};
    double l_rate{1.0};
    double kd{0.06};
    double k1{0.06};
    double psi_rate{0.2};
    double z_rate{0.1};
    double alpha0{0.5};
};

simulate::SimConfig round_trip_config(const RoundTripTruth& t, double horizon) {
    simulate::SimConfig c;
    c.dim = 2;
    c.alpha0 = {t.alpha0, t.alpha0};
    const auto self = simulate::exponential(t.phi_self * t.phi_rate, t.phi_rate);
    const auto cross = simulate::exponential(t.phi_cross * t.phi_rate, t.phi_rate);
    c.phi = {self, cross, cross, self};
    c.l = {simulate::exponential(t.l_norm * t.l_rate, t.l_rate), simulate::exponential(-t.l_norm * t.l_rate, t.l_rate)};
    c.kd = {t.kd, t.kd};
    c.k1 = {t.k1, t.k1};
    c.psi = simulate::exponential(t.psi_rate, t.psi_rate);
    c.z = simulate::exponential(std::sqrt(2.0 * t.z_rate), t.z_rate);
    c.horizon = horizon;
    c.seed = 17;
    c.book.snapshot_interval = 0.0;
    return c;
}

Outcome simulate_calibrate_round_trip() {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    const RoundTripTruth truth;
    const auto config = round_trip_config(truth, 5e6);
    config.validate();
    const double cutoff = 60.0;
    const auto hawkes = grids::TimeGrid::build({0.01, 0.1, 10.0, 5, 15});
    const auto price = grids::TimeGrid::build({0.1, 1.0, cutoff, 4, 16});
    moments::MomentSet total(2, hawkes, price, true);
    std::size_t events = 0;
    for (std::uint64_t s = 0; s < 4; ++s) {
        const auto sim = simulate::simulate_session(config, s);
        events += sim.times.size();
        moments::MomentSet one(2, hawkes, price, true);
        one.add_session(sim.session(2));
        total.merge(one);
    }
    const auto curves = moments::curves(moments::symmetrize_bid_ask(total));

    calibrate::CalibrationOptions options;
    options.cutoff = cutoff;
    const auto full = calibrate::calibrate(curves, options);
    const double rho_true = truth.phi_self + truth.phi_cross;

    const auto norms_ok = [&](const Eigen::MatrixXd& norms, std::string_view route) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < 2; ++i) {
            for (Eigen::Index k = 0; k < 2; ++k) {
                worst = std::max(worst, relative_error(norms(i, k), i == k ? truth.phi_self : truth.phi_cross));
            }
        }
        const double rho = calibrate::spectral_radius(norms);
        out.check(worst <= tol::round_trip, fmt::format("{} ||phi|| worst {:.1f}%", route, 100.0 * worst));
        out.check(relative_error(rho, rho_true) <= tol::round_trip,
                  fmt::format("{} spectral radius {:.3f} vs {:.3f}", route, rho, rho_true));
    };
    const auto strengths_ok = [&](std::string_view route, const std::vector<double>& l_norms,
                                  const std::vector<effective::BareStrengths>& k) {
        double worst_l = 0.0;
        double worst_kd = 0.0;
        double worst_k1 = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            worst_l = std::max(worst_l, relative_error(l_norms[i], i == 0 ? truth.l_norm : -truth.l_norm));
            worst_kd = std::max(worst_kd, relative_error(k[i].kd, truth.kd));
            worst_k1 = std::max(worst_k1, relative_error(k[i].k1, truth.k1));
        }
        out.check(worst_l <= tol::round_trip, fmt::format("{} ||L|| {:.1f}%", route, 100.0 * worst_l));
        out.check(worst_kd <= tol::round_trip, fmt::format("{} K_d {:.1f}%", route, 100.0 * worst_kd));
        out.check(worst_k1 <= tol::round_trip, fmt::format("{} K_1 {:.1f}%", route, 100.0 * worst_k1));
    };

    norms_ok(full.phi_norms, "full");
    std::vector<effective::BareStrengths> full_k;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto d = effective::zumbach_decompose(price, full.price.k[i], full.price.kd[i], cutoff);
        full_k.push_back({d.kd, d.k1});
    }
    strengths_ok("full", full.l_norms, full_k);

    const auto phi = calibrate::solve_hawkes(curves);
    const auto norms = calibrate::norm_matrix(phi, cutoff);
    norms_ok(norms, "effective");
    const double rho = calibrate::spectral_radius(norms);
    const auto eff = effective::solve_effective_l_kd(curves);
    const auto kbar = effective::effective_k(curves);
    const auto l_bare = effective::bare_l_from_effective(eff, phi);
    std::vector<double> l_norms;
    std::vector<effective::BareStrengths> eff_k;
    double worst_relation = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        l_norms.push_back(calibrate::kernel_norm(price, l_bare[i], cutoff));
        const auto d = effective::zumbach_decompose(price, kbar[i], eff.kd[i], cutoff);
        eff_k.push_back(effective::bare_from_effective(d, rho));
        worst_relation = std::max(worst_relation, relative_error(eff_k.back().k1, full_k[i].k1));
    }
    strengths_ok("effective", l_norms, eff_k);
    out.check(worst_relation <= tol::round_trip,
              fmt::format("(1 - ||phi||) K1bar vs K1 {:.1f}%", 100.0 * worst_relation));

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.check(events >= tol::round_trip_min_events, fmt::format("{:.2e} events", static_cast<double>(events)));
    out.check(seconds <= tol::round_trip_seconds, fmt::format("{:.0f} s", seconds));
    return out;
}

// 5. Rank-one split against a brute-force optimizer.

Outcome rank_one_oracle() {
    Outcome out;
    std::mt19937_64 rng(777);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(0.1, 2.0);
    const std::size_t n = 10;
    double worst_objective = 0.0;
    double worst_norm = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        moments::Surface k(n, n);
        std::vector<double> w(n), diag(n);
        for (std::size_t r = 0; r < n; ++r) {
            w[r] = uniform(rng);
            diag[r] = 5.0 + normal(rng);
            for (std::size_t c = 0; c <= r; ++c) {
                k(r, c) = k(c, r) = normal(rng);
            }
        }
        const auto dec = effective::zumbach_decompose(k, diag, w);
        const double oracle = testing::brute_force_rank_one(k, w);
        worst_objective = std::max(worst_objective, std::abs(dec.objective - oracle) / oracle);
        double z2 = 0.0;
        double psi = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            z2 += w[r] * dec.z[r] * dec.z[r];
            psi += w[r] * dec.psi[r];
        }
        worst_norm = std::max({worst_norm, std::abs(z2 - 1.0), std::abs(psi - 1.0)});
    }

    double worst_exact = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> w(n), z(n), d(n);
        for (std::size_t r = 0; r < n; ++r) {
            w[r] = uniform(rng);
            z[r] = uniform(rng) * (r % 3 == 2 ? -1.0 : 1.0);
            d[r] = uniform(rng);
        }
        z[0] = std::abs(z[0]);
        const double k1 = uniform(rng);
        const double kd = uniform(rng);
        double z2 = 0.0;
        double dsum = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            z2 += w[r] * z[r] * z[r];
            dsum += w[r] * d[r];
        }
        moments::Surface k(n, n);
        std::vector<double> diag(n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                k(r, c) = k1 * z[r] * z[c] / z2;
            }
            diag[r] = k1 * z[r] * z[r] / z2 + kd * d[r] / dsum;
        }
        const auto dec = effective::zumbach_decompose(k, diag, w);
        worst_exact = std::max({worst_exact, relative_error(dec.k1, k1), relative_error(dec.kd, kd)});
        for (std::size_t r = 0; r < n; ++r) {
            worst_exact = std::max({worst_exact, relative_error(dec.z[r], z[r] / std::sqrt(z2)),
                                    relative_error(dec.psi[r], d[r] / dsum)});
        }
    }
    out.check(worst_objective <= tol::rank_one_objective,
              fmt::format("objective vs brute force {:.1e} (<= {:.0e})", worst_objective, tol::rank_one_objective));
    out.check(worst_exact <= tol::rank_one_exact,
              fmt::format("exact inputs recovered to {:.1e} (<= {:.0e})", worst_exact, tol::rank_one_exact));
    out.check(worst_norm <= tol::rank_one_normalization,
              fmt::format("normalizations to {:.1e} (<= {:.0e})", worst_norm, tol::rank_one_normalization));
    return out;
}

// 6. Simulated mean rates against the closed form.

Outcome mean_intensity_closure() {
    Outcome out;
    using simulate::exponential;
    std::vector<std::pair<std::string, simulate::SimConfig>> sweep;
    const auto scalar = [](double alpha0, double phi, double kd, double k1, double horizon) {
        auto c = testing::quiet_config({alpha0}, horizon, 5);
        if (phi > 0.0) {
            c.phi = {exponential(phi * 2.0, 2.0)};
        }
        c.kd = {kd};
        c.k1 = {k1};
        return c;
    };
    sweep.emplace_back("poisson", scalar(1.0, 0.0, 0.0, 0.0, 2e5));
    sweep.emplace_back("hawkes 0.5", scalar(1.0, 0.5, 0.0, 0.0, 2e5));
    sweep.emplace_back("alpha0 1, phi 0.5, KdD2 0.25", scalar(1.0, 0.5, 0.25, 0.0, 2e5));
    sweep.emplace_back("trend feedback", scalar(1.0, 0.3, 0.0, 0.2, 2e5));
    {
        auto c = scalar(1.0, 0.4, 0.1, 0.1, 2e5);
        c.l = {exponential(0.1, 1.0)};
        sweep.emplace_back("linear and quadratic", c);
    }
    {
        auto c = testing::quiet_config({0.5, 0.8}, 2e5, 6);
        c.phi = {exponential(0.6, 2.0), exponential(0.2, 1.0), exponential(0.5, 5.0), exponential(0.2, 0.5)};
        c.kd = {0.2, 0.05};
        c.k1 = {0.1, 0.0};
        sweep.emplace_back("two types", c);
    }
    {
        auto c = testing::quiet_config({0.6, 0.6}, 2e5, 7);
        c.phi = {exponential(0.9, 3.0), {}, exponential(0.4, 1.0), exponential(0.6, 3.0)};
        c.kd = {0.15, 0.15};
        c.k1 = {0.05, 0.1};
        c.law.kind = simulate::PriceLaw::Kind::gaussian;
        c.law.variance = 0.5;
        c.price_rate = 2.0;
        sweep.emplace_back("gaussian jumps", c);
    }
    {
        auto c = testing::quiet_config({0.4, 0.6, 0.1, 0.1, 0.6, 0.4}, 5e4, 8);
        for (std::size_t i = 0; i < 6; ++i) {
            c.phi[i * 6 + i] = exponential(0.6, 2.0);
            c.phi[i * 6 + (5 - i)] = exponential(0.1, 1.0);
        }
        c.kd.assign(6, 0.05);
        c.k1.assign(6, 0.05);
        c.book.snapshot_interval = 0.0;
        sweep.emplace_back("six types", c);
    }
    {
        auto c = scalar(0.8, 0.0, 0.15, 0.05, 2e5);
        c.law.values = {-2.0, -1.0, 1.0, 2.0};
        c.law.probabilities = {0.1, 0.4, 0.4, 0.1};
        c.price_rate = 0.5;
        sweep.emplace_back("two tick sizes", c);
    }
    {
        auto c = scalar(1.0, 0.0, 0.0, 0.0, 2e5);
        c.phi = {simulate::fit_power_law(0.05, 10.0, 2.0).kernel};
        sweep.emplace_back("power-law kernel", c);
    }

    for (const auto& [name, config] : sweep) {
        const auto lambda = simulate::analytic_moments(config);
        const auto sim = simulate::simulate_session(config, 0);
        double worst = 0.0;
        for (std::size_t i = 0; i < config.dim; ++i) {
            std::vector<double> times;
            for (std::size_t n = 0; n < sim.times.size(); ++n) {
                if (sim.types[n] == i) {
                    times.push_back(sim.times[n]);
                }
            }
            const auto r = testing::batch_rate(times, config.horizon);
            worst = std::max(worst, std::abs(r.mean - lambda[i]) / r.stderr);
        }
        out.check(worst <= tol::closure_stderr,
                  fmt::format("{}: Lambda {:.3f}, {:.2f} s.e.", name, lambda[0], worst));
    }
    return out;
}

// 7. Power-law fit of the squared-increment covariance.

Outcome powerlaw_fit() {
    Outcome out;
    const auto grid = grids::TimeGrid::build(grids::GridSpec::price_default());
    const auto pts = grid.points();
    const double a = 1.7e-4;
    const double b = 81.0;
    const double c = 0.71;
    std::vector<double> y;
    for (const double t : pts) {
        y.push_back(a * std::pow(1.0 + t / b, -c));
    }
    const auto fit = moments::fit_p2p2_powerlaw(pts, y);
    const double exact = std::max({relative_error(fit.a, a), relative_error(fit.b, b), relative_error(fit.c, c)});
    out.check(exact <= tol::powerlaw_exact, fmt::format("exact data: worst parameter error {:.1e}", exact));

    std::mt19937_64 rng(43);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<double> estimates;
    std::vector<double> errors;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> noisy;
        for (const double v : y) {
            noisy.push_back(v * (1.0 + noise(rng)));
        }
        estimates.push_back(moments::fit_p2p2_powerlaw(pts, noisy).c);
        errors.push_back(std::abs(estimates.back() - c));
    }
    std::sort(estimates.begin(), estimates.end());
    std::sort(errors.begin(), errors.end());
    const double median = estimates[estimates.size() / 2];
    const double one_sigma = errors[errors.size() * 68 / 100];
    out.check(std::abs(median - c) <= tol::powerlaw_noisy_exponent,
              fmt::format("10% noise: median C {:.3f}", median));
    out.check(one_sigma <= tol::powerlaw_noisy_exponent,
              fmt::format("68th percentile of |C - 0.71| {:.3f} (<= {})", one_sigma, tol::powerlaw_noisy_exponent));
    return out;
}

// 8. Spread, flux and tail invariants.

Outcome liquidity_invariants() {
    Outcome out;
    std::mt19937_64 rng(5150);
    std::uniform_int_distribution<int> levels(1, 8);
    std::uniform_int_distribution<int> gap(1, 3);
    std::uniform_real_distribution<double> volume(0.0, 20.0);
    std::uniform_real_distribution<double> v_best(1.0, 30.0);
    int compared = 0;
    int equal = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        liquidity::BookSnapshot book;
        std::int64_t tick = 1000;
        for (int l = levels(rng); l > 0; --l, tick += gap(rng)) {
            book.ask.push_back({tick, volume(rng)});
        }
        tick = 1000 - gap(rng);
        for (int l = levels(rng); l > 0; --l, tick -= gap(rng)) {
            book.bid.push_back({tick, volume(rng)});
        }
        const double v = v_best(rng);
        if (book.ask.front().volume >= v && book.bid.front().volume >= v) {
            ++compared;
            equal += liquidity::effective_spread(book, v) == liquidity::plain_spread(book) ? 1 : 0;
        }
    }
    out.check(compared > 0 && equal == compared,
              fmt::format("effective = plain spread on {}/{} books with deep best queues", equal, compared));

    const auto flux = liquidity::liquidity_flux({18.8, 0.0, 1.0}, {20.4, 0.0, 1.0}, {2.1, 0.0, 1.0}, 1.0);
    out.check(std::abs(flux.j + 3.7) <= tol::flux_table * 3.7, fmt::format("J = {:.4f} shares/s", flux.j));

    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> samples(100'000);
    for (auto& s : samples) {
        s = std::pow(1.0 - u(rng), -1.0 / 4.0);
    }
    const auto tail = liquidity::survival_tail(samples);
    out.check(std::abs(tail.exponent - 4.0) <= tol::pareto_exponent,
              fmt::format("Pareto(4) tail exponent {:.2f}", tail.exponent));
    return out;
}

// 9. Past trends widen the spread only with trend feedback.

struct CausalityArm {
    double mean{0.0};
    double t{0.0};
    double p{1.0};
};

CausalityArm causality_arm(double k1_cancel, double k1_market, std::size_t sessions) {
    const double z_rate = 0.1;
    const double price_rate = 0.5;
    // Base rates raised in the arm without feedback so that mean rates match.
    const double mu2 = price_rate;
    const double cancel = 0.7 + (0.3 - k1_cancel) * mu2;
    const double market = 0.2 + (0.1 - k1_market) * mu2;
    auto c = testing::quiet_config({cancel, 1.0, market, market, 1.0, cancel}, 5000.0, 3);
    c.k1 = {k1_cancel, 0.0, k1_market, k1_market, 0.0, k1_cancel};
    c.z = simulate::exponential(std::sqrt(2.0 * z_rate), z_rate);
    c.price_rate = price_rate;
    c.book.depth = 10;
    c.book.initial_volume = 5.0;
    c.book.level_cap = 20.0;
    c.book.snapshot_interval = 1.0;

    const double cutoff = 200.0;
    liquidity::SignalKernels kernels;
    kernels.grid = grids::TimeGrid::build({0.1, 1.0, cutoff, 4, 20});
    kernels.cutoff = cutoff;
    for (const double t : kernels.grid.points()) {
        kernels.psi.push_back(std::exp(-z_rate * t));
        kernels.z.push_back(std::exp(-z_rate * t));
    }
    const auto w = kernels.grid.weights_within(0.0, cutoff);
    double psi_mass = 0.0;
    double z_mass = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
        psi_mass += w[n] * kernels.psi[n];
        z_mass += w[n] * kernels.z[n] * kernels.z[n];
    }
    for (std::size_t n = 0; n < w.size(); ++n) {
        kernels.psi[n] /= psi_mass;
        kernels.z[n] /= std::sqrt(z_mass);
    }

    std::vector<double> d;
    for (std::size_t s = 0; s < sessions; ++s) {
        const auto sim = simulate::simulate_session(c, s);
        const auto times = liquidity::sample_times(c.horizon, 1.0);
        auto series = liquidity::signals(sim.price, kernels, times);
        series.seff = liquidity::spread_series(sim.book, liquidity::default_reference_volume(sim.book), times);
        const auto cor = liquidity::lagged_correlation(series.mu2, series.seff, 60);
        double past_minus_future = 0.0;
        for (std::size_t k = 0; k < cor.lags.size(); ++k) {
            if (cor.lags[k] < 0) {
                past_minus_future += cor.values[k];
            } else if (cor.lags[k] > 0) {
                past_minus_future -= cor.values[k];
            }
        }
        d.push_back(past_minus_future);
    }
    const double n = static_cast<double>(d.size());
    double mean = 0.0;
    for (const double x : d) {
        mean += x / n;
    }
    double var = 0.0;
    for (const double x : d) {
        var += (x - mean) * (x - mean) / (n - 1.0);
    }
    CausalityArm arm;
    arm.mean = mean;
    arm.t = mean / std::sqrt(var / n);
    arm.p = boost::math::cdf(boost::math::complement(boost::math::students_t(n - 1.0), arm.t));
    return arm;
}

Outcome zumbach_causality() {
    Outcome out;
    const std::size_t sessions = 20;
    const auto on = causality_arm(0.3, 0.1, sessions);
    const auto off = causality_arm(0.0, 0.0, sessions);
    out.check(on.p < tol::causality_level,
              fmt::format("K1 on: past-minus-future C_mu mass {:.2f}, t = {:.1f}, p = {:.1e}", on.mean, on.t, on.p));
    out.check(off.p >= tol::causality_level,
              fmt::format("K1 off: {:.2f}, t = {:.1f}, p = {:.2f}", off.mean, off.t, off.p));
    return out;
}

// 10. Byte-identical reruns and mergeable moment sums.

std::map<std::string, std::string> tree_hashes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), root).string()] = io::sha256_hex(io::read_file(e.path()));
        }
    }
    return out;
}

Outcome determinism_and_merge() {
    Outcome out;
    const auto dir = fs::temp_directory_path() / "gqhawkes_acceptance_determinism";
    const auto config = (fs::path(GQH_FIXTURE_DIR) / "pipeline.json").string();
    std::vector<std::map<std::string, std::string>> runs;
    for (int r = 0; r < 2; ++r) {
        fs::remove_all(dir);
        std::ostringstream log;
        std::ostringstream err;
        const int code = cli::run({"run", "--config", config, "--out", dir.string()}, log, err);
        out.check(code == 0, fmt::format("pipeline run {} exit {}{}", r + 1, code, err.str().empty() ? "" : ": " + err.str()));
        runs.push_back(tree_hashes(dir));
    }
    fs::remove_all(dir);
    out.check(!runs[0].empty() && runs[0] == runs[1],
              fmt::format("{} output files byte-identical across runs", runs[0].size()));

    const auto hawkes = grids::TimeGrid::build(grids::GridSpec::hawkes_default());
    const auto price = grids::TimeGrid::build(grids::GridSpec::price_default());
    std::mt19937_64 rng(31337);
    std::vector<SessionData> sessions;
    for (int s = 0; s < 5; ++s) {
        sessions.push_back(testing::random_session(rng, 6, 3000, 300, 1500.0 + 200.0 * s));
    }
    moments::MomentSet single(6, hawkes, price, true);
    for (const auto& s : sessions) {
        single.add_session(s);
    }
    moments::MomentSet merged(6, hawkes, price, true);
    for (auto it = sessions.rbegin(); it != sessions.rend(); ++it) {
        moments::MomentSet one(6, hawkes, price, true);
        one.add_session(*it);
        merged.merge(one);
    }
    double worst = 0.0;
    const auto compare = [&](std::span<const double> a, std::span<const double> b) {
        double scale = 0.0;
        for (const double v : a) {
            scale = std::max(scale, std::abs(v));
        }
        for (std::size_t k = 0; k < a.size(); ++k) {
            worst = std::max(worst, scale > 0.0 ? std::abs(a[k] - b[k]) / scale : 0.0);
        }
    };
    compare(single.nn_values(), merged.nn_values());
    compare(single.np_values(), merged.np_values());
    compare(single.np2_values(), merged.np2_values());
    compare(single.npp_values(), merged.npp_values());
    compare(single.p2p2_values(), merged.p2p2_values());
    compare(single.lambda(), merged.lambda());
    out.check(worst <= tol::merge_relative, fmt::format("merge vs single pass {:.1e} (<= {:.0e})", worst,
                                                        tol::merge_relative));
    return out;
}

struct Criterion {
    int id;
    std::string title;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "estimators match the double-loop reference", estimator_oracle},
        {2, "Hawkes kernel from the closed-form covariance", hawkes_round_trip},
        {3, "resolvent of an exponential kernel", resolvent_closed_form},
        {4, "simulate -> calibrate round trip, both routes", simulate_calibrate_round_trip},
        {5, "rank-one split vs brute force", rank_one_oracle},
        {6, "mean intensities vs the closed form", mean_intensity_closure},
        {7, "power-law fit of chi_P2P2", powerlaw_fit},
        {8, "liquidity invariants", liquidity_invariants},
        {9, "trend feedback leaves a causal spread signature", zumbach_causality},
        {10, "determinism and merge laws", determinism_and_merge},
    };
    std::set<int> selected;
    for (int a = 1; a < argc; ++a) {
        selected.insert(std::atoi(argv[a]));
    }
    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && selected.count(c.id) == 0) {
            continue;
        }
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.check(false, fmt::format("threw: {}", e.what()));
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string notes;
        for (const auto& n : o.notes) {
            notes += notes.empty() ? n : "; " + n;
        }
        std::cout << fmt::format("[{}] criterion {:>2}: {} ({:.1f} s) | {}", o.pass ? "PASS" : "FAIL", c.id, c.title,
                                 seconds, notes)
                  << std::endl;
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
