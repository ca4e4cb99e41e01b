#include "gqhawkes/kernel_io.hpp"

#include "gqhawkes/error.hpp"
#include "gqhawkes/io.hpp"

#include <fmt/format.h>

namespace gqh::io {

namespace {

std::size_t index_field(const CsvTable& table, std::size_t r, std::size_t col, std::size_t limit, const char* what) {
    const auto v = parse_int(table.rows[r].at(col), what);
    if (v < 0 || static_cast<std::size_t>(v) >= limit) {
        throw DataError(fmt::format("line {}: {} = {} out of range [0, {})", table.lines[r], what, v, limit));
    }
    return static_cast<std::size_t>(v);
}

std::size_t node_field(const CsvTable& table, std::size_t r, std::size_t col, std::span<const double> nodes,
                       std::size_t expected, const char* what) {
    const double t = parse_double(table.rows[r].at(col), what);
    if (expected >= nodes.size() || t != nodes[expected]) {
        throw DataError(fmt::format("line {}: {} = {} does not match grid node {}", table.lines[r], what, t, expected));
    }
    return expected;
}

void check_complete(const CsvTable& table, std::size_t expected) {
    if (table.rows.size() != expected) {
        throw DataError(fmt::format("kernel file has {} rows, expected {}", table.rows.size(), expected));
    }
}

} // namespace

std::string matrix_curves_to_csv(std::span<const double> nodes, std::size_t dim,
                                 const std::vector<std::vector<double>>& curves, std::string_view header_comment) {
    std::string out(header_comment);
    out += "i,j,t,value\n";
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            for (std::size_t m = 0; m < nodes.size(); ++m) {
                out += fmt::format("{},{},{},{}\n", i, j, format_double(nodes[m]),
                                   format_double(curves[i * dim + j][m]));
            }
        }
    }
    return out;
}

std::vector<std::vector<double>> matrix_curves_from_csv(std::string_view text, std::size_t dim,
                                                        std::span<const double> nodes) {
    const auto table = parse_csv(text);
    const auto ci = table.column("i");
    const auto cj = table.column("j");
    const auto ct = table.column("t");
    const auto cv = table.column("value");
    check_complete(table, dim * dim * nodes.size());
    std::vector<std::vector<double>> out(dim * dim, std::vector<double>(nodes.size(), 0.0));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto i = index_field(table, r, ci, dim, "i");
        const auto j = index_field(table, r, cj, dim, "j");
        const auto m = node_field(table, r, ct, nodes, r % nodes.size(), "t");
        out[i * dim + j][m] = parse_double(table.rows[r].at(cv), "value");
    }
    return out;
}

std::string type_curves_to_csv(std::span<const double> nodes, const std::vector<std::vector<double>>& curves,
                               std::string_view column, std::string_view header_comment) {
    std::string out(header_comment);
    out += fmt::format("i,t,{}\n", column);
    for (std::size_t i = 0; i < curves.size(); ++i) {
        for (std::size_t m = 0; m < nodes.size(); ++m) {
            out += fmt::format("{},{},{}\n", i, format_double(nodes[m]), format_double(curves[i][m]));
        }
    }
    return out;
}

std::vector<std::vector<double>> type_curves_from_csv(std::string_view text, std::string_view column, std::size_t dim,
                                                      std::span<const double> nodes) {
    const auto table = parse_csv(text);
    const auto ci = table.column("i");
    const auto ct = table.column("t");
    const auto cv = table.column(column);
    check_complete(table, dim * nodes.size());
    std::vector<std::vector<double>> out(dim, std::vector<double>(nodes.size(), 0.0));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto i = index_field(table, r, ci, dim, "i");
        const auto m = node_field(table, r, ct, nodes, r % nodes.size(), "t");
        out[i][m] = parse_double(table.rows[r].at(cv), "value");
    }
    return out;
}

std::string surfaces_to_csv(std::span<const double> nodes, const std::vector<moments::Surface>& surfaces,
                            std::string_view header_comment) {
    std::string out(header_comment);
    out += "i,t,x,value\n";
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
        for (std::size_t a = 0; a < surfaces[i].rows; ++a) {
            for (std::size_t b = 0; b < surfaces[i].cols; ++b) {
                out += fmt::format("{},{},{},{}\n", i, format_double(nodes[a]), format_double(nodes[b]),
                                   format_double(surfaces[i](a, b)));
            }
        }
    }
    return out;
}

std::vector<moments::Surface> surfaces_from_csv(std::string_view text, std::size_t dim, std::span<const double> nodes) {
    const auto table = parse_csv(text);
    const auto ci = table.column("i");
    const auto ct = table.column("t");
    const auto cx = table.column("x");
    const auto cv = table.column("value");
    const std::size_t n = nodes.size();
    check_complete(table, dim * n * n);
    std::vector<moments::Surface> out(dim, moments::Surface(n, n));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto i = index_field(table, r, ci, dim, "i");
        const auto a = node_field(table, r, ct, nodes, (r / n) % n, "t");
        const auto b = node_field(table, r, cx, nodes, r % n, "x");
        out[i](a, b) = parse_double(table.rows[r].at(cv), "value");
    }
    return out;
}

} // namespace gqh::io
