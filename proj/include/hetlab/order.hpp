#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "hetlab/error.hpp"

namespace hetlab {

/// Elasticity order q of a Rényi-type index.
///
/// The values 0, 1 and +inf select dedicated limit branches. Only an exact
/// 1.0 picks the perplexity branch; 1 + 1e-6 goes through the generic
/// power formula.
class Order {
public:
    constexpr Order() = default;

    explicit Order(double q) : q_(q) {
        if (std::isnan(q) || q < 0.0)
            throw DomainError("elasticity order must be non-negative, got " + std::to_string(q));
    }

    static Order infinity() { return Order(std::numeric_limits<double>::infinity()); }

    constexpr double value() const noexcept { return q_; }
    constexpr bool is_zero() const noexcept { return q_ == 0.0; }
    constexpr bool is_one() const noexcept { return q_ == 1.0; }
    bool is_infinite() const noexcept { return std::isinf(q_); }
    bool is_generic() const noexcept { return !is_zero() && !is_one() && !is_infinite(); }

    friend constexpr bool operator==(Order a, Order b) noexcept { return a.q_ == b.q_; }

private:
    double q_ = 1.0;
};

// Accepts decimal numbers and "inf"/"infinity" (case-insensitive).
Order parse_order(const std::string& text);

std::string format_order(Order q);

} // namespace hetlab
