#include "pipeline.hpp"

#include "gqhawkes/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Invocation {
    int code{0};
    std::string out;
    std::string err;
};

Invocation invoke(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = gqh::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("gqhawkes_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path fixture() { return fs::path(GQH_FIXTURE_DIR) / "pipeline.json"; }

std::map<std::string, std::string> tree_hashes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), root).string()] = gqh::io::sha256_hex(gqh::io::read_file(e.path()));
        }
    }
    return out;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& patch) {
    auto j = nlohmann::json::parse(gqh::io::read_file(fixture()));
    j.merge_patch(patch);
    const auto path = dir / "config.json";
    gqh::io::write_file(path, j.dump(2));
    return path;
}

} // namespace

TEST_CASE("full pipeline runs and reruns byte for byte") {
    const auto dir = scratch("full");
    const auto out = (dir / "out").string();
    const auto first = invoke({"run", "--config", fixture().string(), "--out", out});
    INFO(first.err);
    REQUIRE(first.code == 0);
    for (const auto* f : {"report/tables.md", "report/table1.csv", "report/table2.csv", "report/table3.csv",
                          "zumbach/full/strengths.json", "zumbach/effective/strengths.json",
                          "zumbach/consistency.json", "liquidity/flux.json", "liquidity/correlations.csv",
                          "effective/resolvent.csv", "calibrate/K.csv"}) {
        CHECK_MESSAGE(fs::exists(fs::path(out) / f), f);
    }
    const auto before = tree_hashes(out);

    const auto second = invoke({"run", "--config", fixture().string(), "--out", out});
    REQUIRE(second.code == 0);
    CHECK(tree_hashes(out) == before);

    const auto table = gqh::io::read_file(fs::path(out) / "calibrate" / "phi.csv");
    const auto parsed = gqh::io::parse_csv(table);
    REQUIRE(parsed.meta.size() == 3);
    CHECK(parsed.meta[0].first == "tool");
    CHECK(parsed.meta[1].first == "config_sha256");
    CHECK(parsed.meta[2].first == "grid_sha256");

    const auto flux = nlohmann::json::parse(gqh::io::read_file(fs::path(out) / "liquidity" / "flux.json"));
    CHECK(flux.at("meta").at("tool") == std::string(gqh::cli::kToolVersion));
}

TEST_CASE("a stage without its inputs fails naming the missing artifact") {
    const auto dir = scratch("missing");
    const auto r = invoke({"calibrate", "--config", fixture().string(), "--out", (dir / "out").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("moments") != std::string::npos);
    CHECK(r.err.find("manifest.json") != std::string::npos);
}

TEST_CASE("changed config or edited outputs are reported as stale") {
    const auto dir = scratch("stale");
    const auto out = (dir / "out").string();
    for (const auto* stage : {"simulate", "preprocess", "moments"}) {
        REQUIRE(invoke({stage, "--config", fixture().string(), "--out", out}).code == 0);
    }
    const auto other = invoke({"calibrate", "--config", fixture().string(), "--out", out, "--cutoff", "30"});
    CHECK(other.code == 3);
    CHECK(other.err.find("stale") != std::string::npos);

    gqh::io::write_file(fs::path(out) / "moments" / "chi_nn.csv", "i,j,t,value\n");
    const auto edited = invoke({"calibrate", "--config", fixture().string(), "--out", out});
    CHECK(edited.code == 3);
    CHECK(edited.err.find("chi_nn.csv") != std::string::npos);
}

TEST_CASE("session files without price sidecars use the surprise price") {
    const auto dir = scratch("inputs");
    const auto sim = (dir / "sim").string();
    REQUIRE(invoke({"simulate", "--config", fixture().string(), "--out", sim}).code == 0);
    fs::create_directories(dir / "data");
    for (const auto& e : fs::directory_iterator(fs::path(sim) / "simulate")) {
        const auto name = e.path().filename().string();
        if (name.starts_with("session_") && name.find(".price.") == std::string::npos) {
            fs::copy_file(e.path(), dir / "data" / name);
        }
    }
    const auto config = write_config(dir, {{"inputs", {"data/session_*.csv"}}, {"route", "effective"}, {"out", "out"}});
    const auto r = invoke({"run", "--config", config.string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "out" / "preprocess" / "autocorr.csv"));
    CHECK_FALSE(fs::exists(dir / "out" / "calibrate"));
    CHECK(fs::exists(dir / "out" / "report" / "table2.csv"));
    const auto m = nlohmann::json::parse(gqh::io::read_file(dir / "out" / "preprocess" / "martingale.json"));
    CHECK(m.at("price") == "surprise");
}

TEST_CASE("bad configs and arguments exit with code 2") {
    const auto dir = scratch("bad");
    CHECK(invoke({"moments", "--config", write_config(dir, {{"colour", "red"}}).string()}).code == 2);
    CHECK(invoke({"moments", "--config", write_config(dir, {{"cutoff", -1}}).string()}).code == 2);
    CHECK(invoke({"moments", "--config", fixture().string(), "--route", "sideways"}).code == 2);
    CHECK(invoke({"moments"}).code == 2);
    CHECK(invoke({"transmogrify", "--config", fixture().string()}).code == 2);
    gqh::io::write_file(dir / "broken.json", "{ not json");
    CHECK(invoke({"moments", "--config", (dir / "broken.json").string()}).code == 2);
}

TEST_CASE("an explosive simulation is a numerical failure") {
    const auto dir = scratch("runaway");
    nlohmann::json phi = nlohmann::json::array();
    for (int i = 0; i < 6; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < 6; ++k) {
            row.push_back(nullptr);
        }
        phi.push_back(row);
    }
    const auto config = write_config(dir, {{"simulation", {{"k1", std::vector<double>(6, 50.0)},
                                                           {"kd", std::vector<double>(6, 50.0)},
                                                           {"intensity_cap", 100.0},
                                                           {"phi", phi}}},
                                           {"out", "out"}});
    const auto r = invoke({"simulate", "--config", config.string()});
    CHECK(r.code == 4);
    CHECK(r.err.find("runaway") != std::string::npos);
}
