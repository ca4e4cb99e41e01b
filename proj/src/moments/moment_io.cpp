#include "gqhawkes/moments.hpp"

#include "gqhawkes/error.hpp"
#include "gqhawkes/io.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <map>

namespace gqh::moments {

namespace {

using io::format_double;

/// Prefixes every line of `header_comment` with "# ".
std::string with_header(const std::string& header_comment, std::string body) {
    std::string out;
    std::size_t start = 0;
    while (start < header_comment.size()) {
        auto end = header_comment.find('\n', start);
        if (end == std::string::npos) {
            end = header_comment.size();
        }
        const std::string_view line(header_comment.data() + start, end - start);
        out += line.starts_with('#') ? std::string(line) : "# " + std::string(line);
        out += '\n';
        start = end + 1;
    }
    return out + body;
}

std::map<std::string, std::string> read_scalars(const std::filesystem::path& dir) {
    const auto table = io::parse_csv(io::read_file(dir / "scalars.csv"));
    const auto key = table.column("key");
    const auto value = table.column("value");
    std::map<std::string, std::string> out;
    for (const auto& row : table.rows) {
        out[row.at(key)] = row.at(value);
    }
    return out;
}

const std::string& need(const std::map<std::string, std::string>& m, const std::string& key) {
    const auto it = m.find(key);
    if (it == m.end()) {
        throw DataError(fmt::format("scalars.csv: missing '{}'", key));
    }
    return it->second;
}

/// Reads `value` and `pair_sum` columns in file order into the two arrays.
void read_series(const std::filesystem::path& path, std::vector<double>& values, std::vector<double>& sums) {
    const auto table = io::parse_csv(io::read_file(path));
    const auto v = table.column("value");
    const auto s = table.column("pair_sum");
    if (table.rows.size() != values.size()) {
        throw DataError(fmt::format("{}: {} rows, expected {}", path.string(), table.rows.size(), values.size()));
    }
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        values[k] = io::parse_double(table.rows[k].at(v), "value");
        sums[k] = io::parse_double(table.rows[k].at(s), "pair_sum");
    }
}

} // namespace

void MomentSet::write(const std::string& directory, const std::string& header_comment) const {
    const std::filesystem::path dir(directory);
    const std::size_t nh = hawkes_.size();
    const std::size_t np = price_.size();

    std::string scalars = "key,value\n";
    scalars += fmt::format("dim,{}\nsessions,{}\nduration,{}\nwith_npp,{}\nsymmetrized,{}\n", dim_, sessions_,
                           format_double(duration_), with_npp_ ? 1 : 0, symmetrized_ ? 1 : 0);
    for (std::size_t i = 0; i < dim_; ++i) {
        scalars += fmt::format("count_{},{}\n", i, format_double(counts_[i]));
    }
    for (std::size_t k = 0; k < power_sums_.size(); ++k) {
        scalars += fmt::format("power_sum_{},{}\n", k, format_double(power_sums_[k]));
    }
    for (std::size_t i = 0; i < dim_; ++i) {
        scalars += fmt::format("lambda_{},{}\n", i, format_double(lambda_[i]));
    }
    for (std::size_t k = 1; k < delta_.size(); ++k) {
        scalars += fmt::format("delta_{},{}\n", k, format_double(delta_[k]));
    }
    io::write_file(dir / "scalars.csv", with_header(header_comment, scalars));

    const auto& hb = hawkes_.bins();
    const auto& pb = price_.bins();
    std::string nn = "i,j,t,value,pair_sum\n";
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            for (std::size_t b = 0; b < nh; ++b) {
                const std::size_t k = (i * dim_ + j) * nh + b;
                nn += fmt::format("{},{},{},{},{}\n", i, j, format_double(hb.center(b)), format_double(nn_[k]),
                                  format_double(nn_sum_[k]));
            }
        }
    }
    io::write_file(dir / "chi_nn.csv", with_header(header_comment, nn));

    auto one_lag = [&](const std::vector<double>& values, const std::vector<double>& sums) {
        std::string out = "i,t,value,pair_sum\n";
        for (std::size_t i = 0; i < dim_; ++i) {
            for (std::size_t b = 0; b < np; ++b) {
                out += fmt::format("{},{},{},{}\n", i, format_double(pb.center(b)), format_double(values[i * np + b]),
                                   format_double(sums[i * np + b]));
            }
        }
        return with_header(header_comment, out);
    };
    io::write_file(dir / "chi_np.csv", one_lag(np_, np_sum_));
    io::write_file(dir / "chi_np2.csv", one_lag(np2_, np2_sum_));

    std::string npp = "i,t,x,value,pair_sum\n";
    for (std::size_t i = 0; i < dim_ && with_npp_; ++i) {
        for (std::size_t a = 0; a < np; ++a) {
            for (std::size_t b = 0; b < np; ++b) {
                const std::size_t k = (i * np + a) * np + b;
                npp += fmt::format("{},{},{},{},{}\n", i, format_double(pb.center(a)), format_double(pb.center(b)),
                                   format_double(npp_[k]), format_double(npp_sum_[k]));
            }
        }
    }
    io::write_file(dir / "chi_npp.csv", with_header(header_comment, npp));

    std::string p2p2 = "t,value,pair_sum\n";
    for (std::size_t b = 0; b < np; ++b) {
        p2p2 += fmt::format("{},{},{}\n", format_double(pb.center(b)), format_double(p2p2_[b]),
                            format_double(p2p2_sum_[b]));
    }
    io::write_file(dir / "chi_p2p2.csv", with_header(header_comment, p2p2));
    io::write_file(dir / "hawkes_grid.csv", hawkes_.to_csv());
    io::write_file(dir / "price_grid.csv", price_.to_csv());
}

MomentSet MomentSet::read(const std::string& directory) {
    const std::filesystem::path dir(directory);
    const auto scalars = read_scalars(dir);
    const auto dim = static_cast<std::size_t>(io::parse_int(need(scalars, "dim"), "dim"));
    const bool with_npp = io::parse_int(need(scalars, "with_npp"), "with_npp") != 0;
    MomentSet set(dim, grids::TimeGrid::from_csv(io::read_file(dir / "hawkes_grid.csv")),
                  grids::TimeGrid::from_csv(io::read_file(dir / "price_grid.csv")), with_npp);
    set.sessions_ = static_cast<std::size_t>(io::parse_int(need(scalars, "sessions"), "sessions"));
    set.symmetrized_ = io::parse_int(need(scalars, "symmetrized"), "symmetrized") != 0;
    set.duration_ = io::parse_double(need(scalars, "duration"), "duration");
    for (std::size_t i = 0; i < dim; ++i) {
        set.counts_[i] = io::parse_double(need(scalars, fmt::format("count_{}", i)));
        set.lambda_[i] = io::parse_double(need(scalars, fmt::format("lambda_{}", i)));
    }
    for (std::size_t k = 0; k < set.power_sums_.size(); ++k) {
        set.power_sums_[k] = io::parse_double(need(scalars, fmt::format("power_sum_{}", k)));
    }
    for (std::size_t k = 1; k < set.delta_.size(); ++k) {
        set.delta_[k] = io::parse_double(need(scalars, fmt::format("delta_{}", k)));
    }
    read_series(dir / "chi_nn.csv", set.nn_, set.nn_sum_);
    read_series(dir / "chi_np.csv", set.np_, set.np_sum_);
    read_series(dir / "chi_np2.csv", set.np2_, set.np2_sum_);
    read_series(dir / "chi_npp.csv", set.npp_, set.npp_sum_);
    read_series(dir / "chi_p2p2.csv", set.p2p2_, set.p2p2_sum_);
    return set;
}

MomentCurves curves(const MomentSet& set) {
    MomentCurves out;
    out.dim = set.dim();
    out.duration = set.duration();
    out.lambda.assign(set.lambda().begin(), set.lambda().end());
    for (std::size_t k = 1; k < out.delta.size(); ++k) {
        out.delta[k] = set.delta(k);
    }
    out.hawkes_grid = set.hawkes_grid();
    out.price_grid = set.price_grid();
    const std::size_t dim = set.dim();
    const std::size_t nh = set.hawkes_grid().size();
    const std::size_t np = set.price_grid().size();
    const auto& hmap = set.hawkes_grid().bins_to_nodes();
    const auto& pmap = set.price_grid().bins_to_nodes();
    const std::size_t nu = pmap.size();

    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            out.nn.push_back(hmap.apply(set.nn_values().subspan((i * dim + j) * nh, nh)));
        }
        out.np.push_back(pmap.apply(set.np_values().subspan(i * np, np)));
        out.np2.push_back(pmap.apply(set.np2_values().subspan(i * np, np)));
        Surface surface(nu, nu);
        if (set.has_npp()) {
            // rows first (bins x nodes), then columns
            std::vector<std::vector<double>> rows(np);
            for (std::size_t a = 0; a < np; ++a) {
                rows[a] = pmap.apply(set.npp_values().subspan((i * np + a) * np, np));
            }
            std::vector<double> column(np);
            for (std::size_t c = 0; c < nu; ++c) {
                for (std::size_t a = 0; a < np; ++a) {
                    column[a] = rows[a][c];
                }
                const auto mapped = pmap.apply(column);
                for (std::size_t r = 0; r < nu; ++r) {
                    surface(r, c) = mapped[r];
                }
            }
            // the two passes commute only up to rounding; make the surface exactly symmetric
            for (std::size_t r = 0; r < nu; ++r) {
                for (std::size_t c = r + 1; c < nu; ++c) {
                    const double v = 0.5 * (surface(r, c) + surface(c, r));
                    surface(r, c) = v;
                    surface(c, r) = v;
                }
            }
        }
        out.npp.push_back(std::move(surface));
    }
    out.p2p2 = pmap.apply(set.p2p2_values());
    return out;
}

} // namespace gqh::moments
