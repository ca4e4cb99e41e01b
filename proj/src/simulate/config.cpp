#include "gqhawkes/simulate.hpp"

#include "gqhawkes/error.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>
#include <fmt/format.h>

#include <cmath>
#include <numeric>

namespace gqh::simulate {

double ExpSum::operator()(double t) const noexcept {
    if (t < 0.0) {
        return 0.0;
    }
    double v = 0.0;
    for (std::size_t j = 0; j < weight.size(); ++j) {
        v += weight[j] * std::exp(-rate[j] * t);
    }
    return v;
}

double ExpSum::integral() const noexcept {
    double v = 0.0;
    for (std::size_t j = 0; j < weight.size(); ++j) {
        v += weight[j] / rate[j];
    }
    return v;
}

double ExpSum::square_integral() const noexcept {
    double v = 0.0;
    for (std::size_t a = 0; a < weight.size(); ++a) {
        for (std::size_t b = 0; b < weight.size(); ++b) {
            v += weight[a] * weight[b] / (rate[a] + rate[b]);
        }
    }
    return v;
}

ExpSum ExpSum::scaled(double factor) const {
    ExpSum out = *this;
    for (auto& w : out.weight) {
        w *= factor;
    }
    return out;
}

void ExpSum::validate(const std::string& what) const {
    if (weight.size() != rate.size()) {
        throw ConfigError(fmt::format("{}: {} weights but {} rates", what, weight.size(), rate.size()));
    }
    for (std::size_t j = 0; j < rate.size(); ++j) {
        if (!(rate[j] > 0.0) || !std::isfinite(rate[j]) || !std::isfinite(weight[j])) {
            throw ConfigError(fmt::format("{}: term {} needs a positive finite rate and finite weight", what, j));
        }
    }
}

ExpSum exponential(double weight, double rate) { return {{weight}, {rate}}; }

namespace {

/// Relative residuals of the best linear weights for given log-rates.
struct PowerLawFunctor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    Eigen::VectorXd t;
    Eigen::VectorXd f;

    [[nodiscard]] int inputs() const { return 0; }
    [[nodiscard]] int values() const { return static_cast<int>(t.size()); }

    [[nodiscard]] Eigen::MatrixXd design(const Eigen::VectorXd& log_rate) const {
        Eigen::MatrixXd a(t.size(), log_rate.size());
        for (Eigen::Index j = 0; j < log_rate.size(); ++j) {
            a.col(j) = (-std::exp(log_rate(j)) * t.array()).exp() / f.array();
        }
        return a;
    }
    [[nodiscard]] Eigen::VectorXd weights(const Eigen::VectorXd& log_rate) const {
        return design(log_rate).colPivHouseholderQr().solve(Eigen::VectorXd::Ones(t.size()));
    }
    int operator()(const Eigen::VectorXd& log_rate, Eigen::VectorXd& residual) const {
        residual = design(log_rate) * weights(log_rate) - Eigen::VectorXd::Ones(t.size());
        return 0;
    }
};

} // namespace

PowerLawFit fit_power_law(double amplitude, double scale, double exponent, std::size_t terms, double lo, double hi,
                          double max_error) {
    if (!(scale > 0.0) || !(exponent > 0.0) || terms == 0 || !(lo > 0.0) || !(hi > lo)) {
        throw ConfigError(fmt::format("power law: invalid parameters (scale {}, exponent {}, [{}, {}], {} terms)",
                                      scale, exponent, lo, hi, terms));
    }
    constexpr int kSamples = 400;
    PowerLawFunctor functor;
    functor.t.resize(kSamples);
    functor.f.resize(kSamples);
    for (int n = 0; n < kSamples; ++n) {
        const double t = lo * std::pow(hi / lo, static_cast<double>(n) / (kSamples - 1));
        functor.t(n) = t;
        functor.f(n) = std::pow(1.0 + t / scale, -exponent);
    }
    Eigen::VectorXd log_rate(static_cast<Eigen::Index>(terms));
    for (std::size_t j = 0; j < terms; ++j) {
        const double x = terms == 1 ? 0.5 : static_cast<double>(j) / static_cast<double>(terms - 1);
        log_rate(static_cast<Eigen::Index>(j)) = std::log(0.3 / hi) + x * (std::log(1.0 / lo) - std::log(0.3 / hi));
    }
    Eigen::NumericalDiff<PowerLawFunctor> numeric(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<PowerLawFunctor>> lm(numeric);
    lm.parameters.maxfev = 4000;
    lm.minimize(log_rate);

    const Eigen::VectorXd w = functor.weights(log_rate);
    PowerLawFit fit;
    for (std::size_t j = 0; j < terms; ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        fit.kernel.weight.push_back(amplitude * w(k));
        fit.kernel.rate.push_back(std::exp(log_rate(k)));
    }
    Eigen::VectorXd residual;
    functor(log_rate, residual);
    fit.max_relative_error = residual.cwiseAbs().maxCoeff();
    if (!(fit.max_relative_error <= max_error)) {
        throw ConfigError(fmt::format("power law (scale {}, exponent {}): {}-term fit reaches relative error {:.3g} "
                                      "on [{}, {}], above {}",
                                      scale, exponent, terms, fit.max_relative_error, lo, hi, max_error));
    }
    return fit;
}

double PriceLaw::moment(int k) const {
    if (kind == Kind::gaussian) {
        if (k % 2 == 1) {
            return 0.0;
        }
        double m = 1.0;
        for (int p = k - 1; p > 0; p -= 2) {
            m *= static_cast<double>(p);
        }
        return m * std::pow(variance, k / 2);
    }
    double m = 0.0;
    for (std::size_t n = 0; n < values.size(); ++n) {
        m += probabilities[n] * std::pow(values[n], k);
    }
    return m;
}

void PriceLaw::validate() const {
    if (kind == Kind::gaussian) {
        if (!(variance > 0.0)) {
            throw ConfigError(fmt::format("gaussian jump law needs a positive variance, got {}", variance));
        }
        return;
    }
    if (values.empty() || values.size() != probabilities.size()) {
        throw ConfigError("discrete jump law needs matching values and probabilities");
    }
    double total = 0.0;
    for (std::size_t n = 0; n < values.size(); ++n) {
        if (!(probabilities[n] >= 0.0) || values[n] == 0.0) {
            throw ConfigError("discrete jump law: probabilities must be >= 0 and values non-zero");
        }
        total += probabilities[n];
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ConfigError(fmt::format("discrete jump law: probabilities sum to {}", total));
    }
    if (std::abs(moment(1)) > 1e-12 * std::sqrt(moment(2))) {
        throw ConfigError(fmt::format("jump law has mean {}, the price must be a martingale", moment(1)));
    }
}

void SimConfig::validate() const {
    if (dim == 0 || dim > 255) {
        throw ConfigError(fmt::format("simulation dimension {} out of range", dim));
    }
    const auto check_size = [&](std::size_t got, std::size_t want, const char* what) {
        if (got != want) {
            throw ConfigError(fmt::format("simulation config: '{}' has {} entries, expected {}", what, got, want));
        }
    };
    check_size(alpha0.size(), dim, "alpha0");
    check_size(phi.size(), dim * dim, "phi");
    check_size(l.size(), dim, "L");
    check_size(kd.size(), dim, "kd");
    check_size(k1.size(), dim, "k1");
    for (std::size_t i = 0; i < dim; ++i) {
        if (!(alpha0[i] >= 0.0)) {
            throw ConfigError(fmt::format("alpha0[{}] = {} must be non-negative", i, alpha0[i]));
        }
        l[i].validate(fmt::format("L[{}]", i));
        for (std::size_t k = 0; k < dim; ++k) {
            phi_at(i, k).validate(fmt::format("phi[{}][{}]", i, k));
        }
    }
    psi.validate("psi");
    z.validate("Z");
    law.validate();
    if (!(price_rate >= 0.0) || !(horizon > 0.0) || !(intensity_cap > 0.0)) {
        throw ConfigError("simulation config: price rate, horizon and intensity cap must be positive");
    }
    Eigen::MatrixXd norms(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t k = 0; k < dim; ++k) {
            norms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = phi_at(i, k).integral();
        }
    }
    const double radius = norms.eigenvalues().cwiseAbs().maxCoeff();
    if (!(radius < 1.0)) {
        throw ConfigError(fmt::format("Hawkes spectral radius {} is not below 1", radius));
    }
    if (book.depth < 2 || !(book.level_cap > 0.0) || !(book.initial_volume >= 0.0) || book.snapshot_interval < 0.0) {
        throw ConfigError("book config: need depth >= 2, positive level cap and non-negative volumes");
    }
    for (const double v : book.order_volume) {
        if (!(v >= 1.0) || v != std::floor(v)) {
            throw ConfigError("book config: order volumes must be whole numbers >= 1");
        }
    }
}

namespace {

ExpSum kernel_from_json(const nlohmann::json& j, const std::string& what) {
    if (j.is_null()) {
        return {};
    }
    if (j.contains("power_law")) {
        const auto& p = j.at("power_law");
        return fit_power_law(p.at("amplitude").get<double>(), p.at("scale").get<double>(),
                             p.at("exponent").get<double>())
            .kernel;
    }
    ExpSum k;
    k.weight = j.value("weight", std::vector<double>{});
    k.rate = j.value("rate", std::vector<double>{});
    k.validate(what);
    return k;
}

nlohmann::json kernel_to_json(const ExpSum& k) { return {{"weight", k.weight}, {"rate", k.rate}}; }

} // namespace

SimConfig config_from_json(const nlohmann::json& j) {
    SimConfig c;
    try {
        c.dim = j.value("dim", kNumEventTypes);
        c.alpha0 = j.at("alpha0").get<std::vector<double>>();
        c.phi.assign(c.dim * c.dim, {});
        if (j.contains("phi")) {
            const auto& rows = j.at("phi");
            if (rows.size() != c.dim) {
                throw ConfigError(fmt::format("'phi' must have {} rows", c.dim));
            }
            for (std::size_t i = 0; i < c.dim; ++i) {
                if (rows[i].size() != c.dim) {
                    throw ConfigError(fmt::format("'phi' row {} must have {} entries", i, c.dim));
                }
                for (std::size_t k = 0; k < c.dim; ++k) {
                    c.phi[i * c.dim + k] = kernel_from_json(rows[i][k], fmt::format("phi[{}][{}]", i, k));
                }
            }
        }
        c.l.assign(c.dim, {});
        if (j.contains("L")) {
            if (j.at("L").size() != c.dim) {
                throw ConfigError(fmt::format("'L' must have {} entries", c.dim));
            }
            for (std::size_t i = 0; i < c.dim; ++i) {
                c.l[i] = kernel_from_json(j.at("L")[i], fmt::format("L[{}]", i));
            }
        }
        c.kd = j.value("kd", std::vector<double>(c.dim, 0.0));
        c.k1 = j.value("k1", std::vector<double>(c.dim, 0.0));
        c.psi = kernel_from_json(j.value("psi", nlohmann::json{}), "psi");
        c.z = kernel_from_json(j.value("Z", nlohmann::json{}), "Z");
        if (j.contains("price")) {
            const auto& p = j.at("price");
            c.price_rate = p.value("rate", c.price_rate);
            const auto law = p.value("law", std::string("discrete"));
            if (law == "gaussian") {
                c.law.kind = PriceLaw::Kind::gaussian;
                c.law.variance = p.value("variance", 1.0);
            } else if (law == "discrete") {
                c.law.values = p.value("values", c.law.values);
                c.law.probabilities = p.value("probabilities", c.law.probabilities);
            } else {
                throw ConfigError(fmt::format("unknown jump law '{}'", law));
            }
        }
        c.horizon = j.value("horizon", c.horizon);
        c.seed = j.value("seed", c.seed);
        c.intensity_cap = j.value("intensity_cap", c.intensity_cap);
        if (j.contains("book")) {
            const auto& b = j.at("book");
            c.book.depth = b.value("depth", c.book.depth);
            c.book.initial_volume = b.value("initial_volume", c.book.initial_volume);
            c.book.level_cap = b.value("level_cap", c.book.level_cap);
            c.book.order_volume = b.value("order_volume", c.book.order_volume);
            c.book.start_tick = b.value("start_tick", c.book.start_tick);
            c.book.snapshot_interval = b.value("snapshot_interval", c.book.snapshot_interval);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("simulation config: {}", e.what()));
    }
    c.validate();
    return c;
}

nlohmann::json config_to_json(const SimConfig& c) {
    nlohmann::json j;
    j["dim"] = c.dim;
    j["alpha0"] = c.alpha0;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < c.dim; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t k = 0; k < c.dim; ++k) {
            row.push_back(kernel_to_json(c.phi_at(i, k)));
        }
        rows.push_back(row);
    }
    j["phi"] = rows;
    nlohmann::json l = nlohmann::json::array();
    for (const auto& k : c.l) {
        l.push_back(kernel_to_json(k));
    }
    j["L"] = l;
    j["kd"] = c.kd;
    j["k1"] = c.k1;
    j["psi"] = kernel_to_json(c.psi);
    j["Z"] = kernel_to_json(c.z);
    nlohmann::json price{{"rate", c.price_rate}};
    if (c.law.kind == PriceLaw::Kind::gaussian) {
        price["law"] = "gaussian";
        price["variance"] = c.law.variance;
    } else {
        price["law"] = "discrete";
        price["values"] = c.law.values;
        price["probabilities"] = c.law.probabilities;
    }
    j["price"] = price;
    j["horizon"] = c.horizon;
    j["seed"] = c.seed;
    j["intensity_cap"] = c.intensity_cap;
    j["book"] = {{"depth", c.book.depth},
                 {"initial_volume", c.book.initial_volume},
                 {"level_cap", c.book.level_cap},
                 {"order_volume", c.book.order_volume},
                 {"start_tick", c.book.start_tick},
                 {"snapshot_interval", c.book.snapshot_interval}};
    return j;
}

std::vector<double> analytic_moments(const SimConfig& config) {
    config.validate();
    const auto d = static_cast<Eigen::Index>(config.dim);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd rhs(d);
    const double delta2 = config.price_rate * config.law.moment(2);
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        for (Eigen::Index k = 0; k < d; ++k) {
            a(i, k) -= config.phi_at(ii, static_cast<std::size_t>(k)).integral();
        }
        rhs(i) = config.alpha0[ii] +
                 (config.kd[ii] * config.psi.integral() + config.k1[ii] * config.z.square_integral()) * delta2;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) {
        throw NumericalError("mean intensity: I - ||phi|| is singular");
    }
    const Eigen::VectorXd lambda = lu.solve(rhs);
    return {lambda.data(), lambda.data() + lambda.size()};
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

} // namespace gqh::simulate
