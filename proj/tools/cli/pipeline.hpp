#pragma once

#include "gqhawkes/grids.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gqh::cli {

inline constexpr std::string_view kToolVersion = "gqhawkes 0.1.0";

enum class PriceSource : std::uint8_t { automatic, micro, surprise, exogenous };

struct LiquidityOptions {
    /// 0 selects the mean best-queue volume.
    double v_best{0.0};
    double sample_step{1.0};
    long max_lag{300};
    double floor_quantile{0.01};
};

struct PipelineConfig {
    /// Directory the relative paths are resolved against.
    std::filesystem::path base_dir;
    /// Session file globs; empty means the simulator output.
    std::vector<std::string> inputs;
    PriceSource price{PriceSource::automatic};
    double autocorr_max_lag{60.0};
    bool rescale{false};
    double profile_bin{300.0};
    grids::GridSpec hawkes_grid{grids::GridSpec::hawkes_default()};
    grids::GridSpec price_grid{grids::GridSpec::price_default()};
    double cutoff{1000.0};
    bool smoothing{true};
    bool symmetrize{true};
    std::string route{"both"};
    double ridge{0.0};
    std::filesystem::path out{"out"};
    std::uint64_t seed{1};
    std::optional<nlohmann::json> simulation;
    std::size_t sim_sessions{1};
    std::vector<double> report_cutoffs{10.0, 100.0, 1000.0};
    LiquidityOptions liquidity;

    [[nodiscard]] bool full_route() const { return route == "full" || route == "both"; }
    [[nodiscard]] bool effective_route() const { return route == "effective" || route == "both"; }
    /// Canonical form used for hashing.
    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] std::string hash() const;
    /// Hash of both grid serializations.
    [[nodiscard]] std::string grid_hash() const;
};

/// Overrides from the command line, applied on top of the config file.
struct Overrides {
    std::optional<std::filesystem::path> out;
    std::optional<double> cutoff;
    bool no_smoothing{false};
    std::optional<std::string> route;
    std::optional<std::uint64_t> seed;
};

[[nodiscard]] PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
[[nodiscard]] PipelineConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

struct Context {
    PipelineConfig config;
    std::string config_hash;
    std::string grid_hash;
    std::filesystem::path out;
    std::ostream* log{nullptr};

    /// `# tool=...`, `# config_sha256=...`, `# grid_sha256=...` lines.
    [[nodiscard]] std::string provenance() const;
    [[nodiscard]] nlohmann::json meta() const;
    [[nodiscard]] std::filesystem::path stage_dir(std::string_view stage) const { return out / stage; }
    void note(std::string_view message) const;
};

[[nodiscard]] Context make_context(PipelineConfig config, std::ostream* log = nullptr);

void cmd_simulate(const Context& ctx);
void cmd_preprocess(const Context& ctx);
void cmd_moments(const Context& ctx);
void cmd_calibrate(const Context& ctx);
void cmd_effective(const Context& ctx);
void cmd_zumbach(const Context& ctx);
void cmd_liquidity(const Context& ctx);
void cmd_report(const Context& ctx);
/// Every stage the config calls for, in order.
void cmd_run(const Context& ctx);

/// Parse arguments (without the program name), run, and return the exit
/// code: 0 ok, 2 config error, 3 data error, 4 numerical failure.
[[nodiscard]] int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gqh::cli
