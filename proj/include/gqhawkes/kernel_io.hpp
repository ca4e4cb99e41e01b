#pragma once

#include "gqhawkes/moments.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gqh::io {

/// Rows `i,j,t,value` for curves[i * dim + j] sampled on `nodes`.
[[nodiscard]] std::string matrix_curves_to_csv(std::span<const double> nodes, std::size_t dim,
                                               const std::vector<std::vector<double>>& curves,
                                               std::string_view header_comment = {});
[[nodiscard]] std::vector<std::vector<double>> matrix_curves_from_csv(std::string_view text, std::size_t dim,
                                                                      std::span<const double> nodes);

/// Rows `i,t,<column>` for curves[i] sampled on `nodes`.
[[nodiscard]] std::string type_curves_to_csv(std::span<const double> nodes,
                                             const std::vector<std::vector<double>>& curves, std::string_view column,
                                             std::string_view header_comment = {});
[[nodiscard]] std::vector<std::vector<double>> type_curves_from_csv(std::string_view text, std::string_view column,
                                                                    std::size_t dim, std::span<const double> nodes);

/// Rows `i,t,x,value` for surfaces[i] on nodes x nodes.
[[nodiscard]] std::string surfaces_to_csv(std::span<const double> nodes, const std::vector<moments::Surface>& surfaces,
                                          std::string_view header_comment = {});
[[nodiscard]] std::vector<moments::Surface> surfaces_from_csv(std::string_view text, std::size_t dim,
                                                              std::span<const double> nodes);

} // namespace gqh::io
