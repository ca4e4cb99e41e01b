#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gqh::io {

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

[[nodiscard]] std::string sha256_hex(std::string_view data);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based source line of each row.
    std::vector<std::size_t> lines;
    /// `# key=value` lines found before the header.
    std::vector<std::pair<std::string, std::string>> meta;

    /// Index of a header column; throws DataError when absent.
    [[nodiscard]] std::size_t column(std::string_view name) const;
};

/// Comma separated, header line required, blank lines skipped, lines
/// starting with '#' treated as comments (`# key=value` comments before the
/// header are collected into `meta`).
[[nodiscard]] CsvTable parse_csv(std::string_view text);

/// Strict numeric parsing; throw DataError naming `what` on failure.
[[nodiscard]] double parse_double(std::string_view text, std::string_view what = "number");
[[nodiscard]] std::int64_t parse_int(std::string_view text, std::string_view what = "integer");

} // namespace gqh::io
