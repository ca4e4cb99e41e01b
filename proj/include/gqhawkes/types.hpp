#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gqh {

enum class EventKind : std::uint8_t { cancel, limit, market };
enum class Side : std::uint8_t { bid, ask };

/// Number of canonical order book event types.
inline constexpr std::size_t kNumEventTypes = 6;

/// Canonical ordering (C,b), (LO,b), (MO,b), (MO,a), (LO,a), (C,a).
/// Bid-side types come first and the ask side mirrors them, so the
/// bid-ask mirror is i -> 5 - i.
[[nodiscard]] constexpr std::size_t type_index(EventKind kind, Side side) noexcept {
    const std::size_t k = static_cast<std::size_t>(kind);
    return side == Side::bid ? k : kNumEventTypes - 1 - k;
}

[[nodiscard]] constexpr EventKind kind_of(std::size_t index) noexcept {
    return static_cast<EventKind>(index < 3 ? index : kNumEventTypes - 1 - index);
}

[[nodiscard]] constexpr Side side_of(std::size_t index) noexcept {
    return index < 3 ? Side::bid : Side::ask;
}

/// Mirror index for a system of `dim` types (dim = 6 for real books; the
/// simulator also runs reduced bid/ask-paired systems).
[[nodiscard]] constexpr std::size_t mirror_index(std::size_t index, std::size_t dim = kNumEventTypes) noexcept {
    return dim - 1 - index;
}

[[nodiscard]] std::string_view kind_label(EventKind kind) noexcept;
[[nodiscard]] std::string_view side_label(Side side) noexcept;
/// "C,b", "LO,a", ...
[[nodiscard]] std::string type_label(std::size_t index);

struct OrderBookEvent {
    double time{0.0};
    EventKind kind{EventKind::limit};
    Side side{Side::bid};
    std::int64_t volume{1};
    std::int64_t best_bid{0};
    std::int64_t best_ask{1};
    std::int64_t vol_bid{0};
    std::int64_t vol_ask{0};

    [[nodiscard]] std::size_t type() const noexcept { return type_index(kind, side); }
};

struct RejectedRow {
    std::size_t line{0};
    std::string reason;
};

/// One trading session of best-quote events. Sessions are hard boundaries
/// for every pair statistic in the library.
struct SessionSeries {
    std::string name;
    /// Observation length in seconds (rescaled seconds after rescale_time).
    double duration{0.0};
    std::vector<OrderBookEvent> events;
    std::vector<RejectedRow> rejected;
};

enum class PriceLabel : std::uint8_t { micro, surprise, exogenous };

/// Point process of price increments.
struct PricePath {
    std::vector<double> times;
    std::vector<double> jumps;
    PriceLabel label{PriceLabel::micro};

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] bool empty() const noexcept { return times.empty(); }
};

/// Event times split by type index, each list sorted. This is the form the
/// moment estimators consume.
struct TypedEvents {
    double duration{0.0};
    std::vector<std::vector<double>> times;

    [[nodiscard]] std::size_t dim() const noexcept { return times.size(); }
    [[nodiscard]] std::size_t total() const noexcept;
};

/// Everything the estimators need from one session.
struct SessionData {
    TypedEvents events;
    PricePath price;
};

} // namespace gqh
