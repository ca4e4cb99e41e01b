#include "gqhawkes/types.hpp"

#include <numeric>

namespace gqh {

std::string_view kind_label(EventKind kind) noexcept {
    switch (kind) {
    case EventKind::cancel:
        return "C";
    case EventKind::limit:
        return "LO";
    case EventKind::market:
        return "MO";
    }
    return "?";
}

std::string_view side_label(Side side) noexcept {
    return side == Side::bid ? "b" : "a";
}

std::string type_label(std::size_t index) {
    std::string out(kind_label(kind_of(index)));
    out += ',';
    out += side_label(side_of(index));
    return out;
}

std::size_t TypedEvents::total() const noexcept {
    return std::accumulate(times.begin(), times.end(), std::size_t{0},
                           [](std::size_t acc, const std::vector<double>& v) { return acc + v.size(); });
}

} // namespace gqh
