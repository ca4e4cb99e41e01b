#include "pipeline.hpp"

#include "gqhawkes/error.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>

namespace gqh::cli {

namespace {

using Command = std::function<void(const Context&)>;

const std::map<std::string, std::pair<Command, std::string>>& commands() {
    static const std::map<std::string, std::pair<Command, std::string>> table{
        {"simulate", {cmd_simulate, "simulate sessions from the config's simulation section"}},
        {"preprocess", {cmd_preprocess, "read sessions, build price series and volume tables"}},
        {"moments", {cmd_moments, "estimate conditional moments on both grids"}},
        {"calibrate", {cmd_calibrate, "full-route kernel calibration"}},
        {"effective", {cmd_effective, "effective-route kernels and the Hawkes resolvent"}},
        {"zumbach", {cmd_zumbach, "rank-one plus diagonal split of the quadratic kernels"}},
        {"liquidity", {cmd_liquidity, "spread signals, correlations, tail and flux"}},
        {"report", {cmd_report, "summary tables and figure data"}},
        {"run", {cmd_run, "every stage the config calls for, in order"}},
    };
    return table;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generalized quadratic Hawkes calibration pipeline", "gqhawkes"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    std::string config_path;
    Overrides overrides;
    std::string out_dir;
    std::string route;
    double cutoff = 0.0;
    std::uint64_t seed = 0;
    for (const auto& [name, entry] : commands()) {
        auto* sub = app.add_subcommand(name, entry.second);
        sub->add_option("-c,--config", config_path, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out", out_dir, "output directory");
        sub->add_option("--cutoff", cutoff, "kernel norm truncation in seconds")->check(CLI::PositiveNumber);
        sub->add_flag("--no-smoothing", overrides.no_smoothing, "use raw moment curves");
        sub->add_option("--route", route, "calibration route")->check(CLI::IsMember({"full", "effective", "both"}));
        sub->add_option("--seed", seed, "simulation seed");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    auto* chosen = app.get_subcommands().front();
    if (chosen->count("--out") > 0) {
        overrides.out = out_dir;
    }
    if (chosen->count("--cutoff") > 0) {
        overrides.cutoff = cutoff;
    }
    if (chosen->count("--route") > 0) {
        overrides.route = route;
    }
    if (chosen->count("--seed") > 0) {
        overrides.seed = seed;
    }

    try {
        const auto ctx = make_context(load_config(config_path, overrides), &out);
        commands().at(chosen->get_name()).first(ctx);
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return 4;
    }
}

} // namespace gqh::cli
