#include "artifacts.hpp"
#include "pipeline.hpp"

#include "gqhawkes/error.hpp"
#include "gqhawkes/io.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <glob.h>

#include <algorithm>
#include <ostream>

namespace gqh::cli {

namespace fs = std::filesystem;

namespace {

grids::GridSpec grid_from_json(const nlohmann::json& j, grids::GridSpec spec) {
    spec.t_min = j.value("t_min", spec.t_min);
    spec.t_switch = j.value("t_switch", spec.t_switch);
    spec.t_max = j.value("t_max", spec.t_max);
    spec.n_linear = j.value("n_linear", spec.n_linear);
    spec.n_log = j.value("n_log", spec.n_log);
    return spec;
}

nlohmann::json grid_to_json(const grids::GridSpec& s) {
    return {{"t_min", s.t_min}, {"t_switch", s.t_switch}, {"t_max", s.t_max}, {"n_linear", s.n_linear},
            {"n_log", s.n_log}};
}

std::string_view price_label(PriceSource p) {
    switch (p) {
    case PriceSource::automatic:
        return "auto";
    case PriceSource::micro:
        return "micro";
    case PriceSource::surprise:
        return "surprise";
    case PriceSource::exogenous:
        return "exogenous";
    }
    return "auto";
}

PriceSource parse_price(const std::string& s) {
    for (const auto p : {PriceSource::automatic, PriceSource::micro, PriceSource::surprise, PriceSource::exogenous}) {
        if (s == price_label(p)) {
            return p;
        }
    }
    throw ConfigError(fmt::format("unknown price source '{}' (auto, micro, surprise, exogenous)", s));
}

void check_route(const std::string& route) {
    if (route != "full" && route != "effective" && route != "both") {
        throw ConfigError(fmt::format("route must be full, effective or both, got '{}'", route));
    }
}

} // namespace

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j;
    j["inputs"] = inputs;
    j["price"] = price_label(price);
    j["autocorr_max_lag"] = autocorr_max_lag;
    j["intraday_rescale"] = rescale;
    j["profile_bin_s"] = profile_bin;
    j["hawkes_grid"] = grid_to_json(hawkes_grid);
    j["price_grid"] = grid_to_json(price_grid);
    j["cutoff"] = cutoff;
    j["smoothing"] = smoothing;
    j["symmetrize"] = symmetrize;
    j["route"] = route;
    j["ridge"] = ridge;
    j["seed"] = seed;
    j["simulation"] = simulation.value_or(nlohmann::json{});
    j["sessions"] = sim_sessions;
    j["report_cutoffs"] = report_cutoffs;
    j["liquidity"] = {{"v_best", liquidity.v_best},
                      {"sample_step", liquidity.sample_step},
                      {"max_lag", liquidity.max_lag},
                      {"floor_quantile", liquidity.floor_quantile}};
    return j;
}

std::string PipelineConfig::hash() const { return io::sha256_hex(to_json().dump()); }

std::string PipelineConfig::grid_hash() const {
    return io::sha256_hex(grids::TimeGrid::build(hawkes_grid).hash() + grids::TimeGrid::build(price_grid).hash());
}

PipelineConfig parse_config(const nlohmann::json& j, const fs::path& base_dir) {
    PipelineConfig c;
    c.base_dir = base_dir;
    try {
        if (!j.is_object()) {
            throw ConfigError("config must be a JSON object");
        }
        static const std::vector<std::string> known{
            "inputs", "price", "autocorr_max_lag", "intraday_rescale", "profile_bin_s", "hawkes_grid", "price_grid",
            "cutoff", "smoothing", "symmetrize", "route", "ridge", "out", "seed", "simulation", "sessions",
            "report_cutoffs", "liquidity"};
        for (const auto& [key, value] : j.items()) {
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw ConfigError(fmt::format("unknown config key '{}'", key));
            }
        }
        if (j.contains("inputs")) {
            c.inputs = j.at("inputs").is_string() ? std::vector<std::string>{j.at("inputs").get<std::string>()}
                                                  : j.at("inputs").get<std::vector<std::string>>();
        }
        c.price = parse_price(j.value("price", std::string("auto")));
        c.autocorr_max_lag = j.value("autocorr_max_lag", c.autocorr_max_lag);
        c.rescale = j.value("intraday_rescale", c.rescale);
        c.profile_bin = j.value("profile_bin_s", c.profile_bin);
        if (j.contains("hawkes_grid")) {
            c.hawkes_grid = grid_from_json(j.at("hawkes_grid"), c.hawkes_grid);
        }
        if (j.contains("price_grid")) {
            c.price_grid = grid_from_json(j.at("price_grid"), c.price_grid);
        }
        c.cutoff = j.value("cutoff", c.cutoff);
        c.smoothing = j.value("smoothing", c.smoothing);
        c.symmetrize = j.value("symmetrize", c.symmetrize);
        c.route = j.value("route", c.route);
        c.ridge = j.value("ridge", c.ridge);
        c.out = j.value("out", std::string("out"));
        c.seed = j.value("seed", c.seed);
        if (j.contains("simulation")) {
            c.simulation = j.at("simulation");
        }
        c.sim_sessions = j.value("sessions", c.sim_sessions);
        c.report_cutoffs = j.value("report_cutoffs", c.report_cutoffs);
        if (j.contains("liquidity")) {
            const auto& l = j.at("liquidity");
            c.liquidity.v_best = l.value("v_best", c.liquidity.v_best);
            c.liquidity.sample_step = l.value("sample_step", c.liquidity.sample_step);
            c.liquidity.max_lag = l.value("max_lag", c.liquidity.max_lag);
            c.liquidity.floor_quantile = l.value("floor_quantile", c.liquidity.floor_quantile);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    }
    check_route(c.route);
    if (!(c.cutoff > 0.0)) {
        throw ConfigError(fmt::format("cut-off must be positive, got {}", c.cutoff));
    }
    if (c.inputs.empty() && !c.simulation) {
        throw ConfigError("config needs 'inputs' (session globs) or a 'simulation' section");
    }
    if (c.sim_sessions == 0) {
        throw ConfigError("'sessions' must be at least 1");
    }
    (void)grids::TimeGrid::build(c.hawkes_grid);
    (void)grids::TimeGrid::build(c.price_grid);
    return c;
}

PipelineConfig load_config(const fs::path& path, const Overrides& overrides) {
    if (!fs::exists(path)) {
        throw ConfigError(fmt::format("config file {} not found", path.string()));
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    auto c = parse_config(j, fs::absolute(path).parent_path());
    if (overrides.out) {
        c.out = *overrides.out;
    } else if (c.out.is_relative()) {
        c.out = c.base_dir / c.out;
    }
    if (overrides.cutoff) {
        if (!(*overrides.cutoff > 0.0)) {
            throw ConfigError(fmt::format("cut-off must be positive, got {}", *overrides.cutoff));
        }
        c.cutoff = *overrides.cutoff;
    }
    if (overrides.no_smoothing) {
        c.smoothing = false;
    }
    if (overrides.route) {
        check_route(*overrides.route);
        c.route = *overrides.route;
    }
    if (overrides.seed) {
        c.seed = *overrides.seed;
    }
    return c;
}

std::string Context::provenance() const {
    return fmt::format("# tool={}\n# config_sha256={}\n# grid_sha256={}\n", kToolVersion, config_hash, grid_hash);
}

nlohmann::json Context::meta() const {
    return {{"tool", kToolVersion}, {"config_sha256", config_hash}, {"grid_sha256", grid_hash}};
}

void Context::note(std::string_view message) const {
    if (log != nullptr) {
        *log << message << '\n';
    }
}

Context make_context(PipelineConfig config, std::ostream* log) {
    Context ctx;
    ctx.config_hash = config.hash();
    ctx.grid_hash = config.grid_hash();
    ctx.out = config.out;
    ctx.config = std::move(config);
    ctx.log = log;
    return ctx;
}

StageWriter::StageWriter(const Context& ctx, std::string stage)
    : ctx_(ctx), stage_(std::move(stage)), dir_(ctx.stage_dir(stage_)) {
    fs::create_directories(dir_);
    fs::remove(dir_ / "manifest.json");
}

void StageWriter::write(const std::string& relative, std::string_view content) {
    const auto path = dir_ / relative;
    fs::create_directories(path.parent_path());
    io::write_file(path, content);
    outputs_[relative] = io::sha256_hex(content);
}

void StageWriter::write_json(const std::string& relative, const nlohmann::json& value) {
    write(relative, value.dump(2) + "\n");
}

void StageWriter::adopt(const std::string& relative) { outputs_[relative] = io::sha256_hex(io::read_file(dir_ / relative)); }

void StageWriter::input(const fs::path& path) {
    auto key = fs::relative(path, ctx_.out).generic_string();
    if (key.empty() || key.rfind("..", 0) == 0) {
        key = fs::absolute(path).lexically_normal().generic_string();
    }
    inputs_[key] = io::sha256_hex(io::read_file(path));
}

void StageWriter::finish() {
    nlohmann::json m;
    m["stage"] = stage_;
    m["tool"] = kToolVersion;
    m["config_sha256"] = ctx_.config_hash;
    m["grid_sha256"] = ctx_.grid_hash;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    io::write_file(dir_ / "manifest.json", m.dump(2) + "\n");
}

std::string read_text(const fs::path& path) {
    if (!fs::exists(path)) {
        throw DataError(fmt::format("missing file {}", path.string()));
    }
    return io::read_file(path);
}

nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

bool stage_done(const Context& ctx, std::string_view stage) {
    return fs::exists(ctx.stage_dir(stage) / "manifest.json");
}

fs::path require_stage(const Context& ctx, std::string_view stage) {
    const auto dir = ctx.stage_dir(stage);
    const auto manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw DataError(fmt::format("missing artifacts: {} not found; run `gqhawkes {}` first", manifest_path.string(),
                                    stage));
    }
    const auto m = read_json(manifest_path);
    if (m.value("config_sha256", std::string{}) != ctx.config_hash) {
        throw DataError(fmt::format("stale manifest {}: produced with config {} but the current config hashes to {}; "
                                    "rerun `gqhawkes {}`",
                                    manifest_path.string(), m.value("config_sha256", std::string{"?"}),
                                    ctx.config_hash, stage));
    }
    std::vector<std::string> missing;
    std::vector<std::string> changed;
    for (const auto& [name, hash] : m.at("outputs").items()) {
        const auto path = dir / name;
        if (!fs::exists(path)) {
            missing.push_back(path.string());
        } else if (io::sha256_hex(io::read_file(path)) != hash.get<std::string>()) {
            changed.push_back(path.string());
        }
    }
    if (!missing.empty()) {
        throw DataError(fmt::format("missing artifacts of stage '{}': {}", stage, fmt::join(missing, ", ")));
    }
    if (!changed.empty()) {
        throw DataError(fmt::format("stale manifest for stage '{}': files changed since it ran: {}; rerun `gqhawkes {}`",
                                    stage, fmt::join(changed, ", "), stage));
    }
    return dir;
}

std::vector<fs::path> glob_files(const std::string& pattern) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    std::vector<fs::path> out;
    if (rc == 0) {
        for (std::size_t n = 0; n < g.gl_pathc; ++n) {
            out.emplace_back(g.gl_pathv[n]);
        }
    }
    globfree(&g);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace gqh::cli
