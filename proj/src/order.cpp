#include "hetlab/order.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace hetlab {

Order parse_order(const std::string& text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "inf" || lower == "infinity" || lower == "+inf")
        return Order::infinity();
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || text.empty())
        throw UsageError("cannot parse order '" + text + "'");
    if (std::isinf(value))
        return Order::infinity();
    return Order(value);
}

std::string format_order(Order q) {
    if (q.is_infinite())
        return "inf";
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.12g", q.value());
    return buffer;
}

} // namespace hetlab
