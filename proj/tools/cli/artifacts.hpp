#pragma once

#include "pipeline.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gqh::cli {

/// Collects the files a stage writes and finishes with a manifest holding
/// their hashes plus the hashes of the inputs that were read.
class StageWriter {
public:
    StageWriter(const Context& ctx, std::string stage);

    /// Write `content` to `relative` inside the stage directory.
    void write(const std::string& relative, std::string_view content);
    void write_json(const std::string& relative, const nlohmann::json& value);
    /// Record a file written by other means.
    void adopt(const std::string& relative);
    /// Record a file that was read.
    void input(const std::filesystem::path& path);
    void finish();

    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    const Context& ctx_;
    std::string stage_;
    std::filesystem::path dir_;
    nlohmann::json inputs_ = nlohmann::json::object();
    nlohmann::json outputs_ = nlohmann::json::object();
};

/// Checks that a stage finished with the current config and that its
/// outputs are unchanged; throws DataError listing what is missing or stale.
/// Returns the stage directory.
std::filesystem::path require_stage(const Context& ctx, std::string_view stage);

[[nodiscard]] bool stage_done(const Context& ctx, std::string_view stage);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);

/// Sorted matches of a glob pattern.
[[nodiscard]] std::vector<std::filesystem::path> glob_files(const std::string& pattern);

} // namespace gqh::cli
