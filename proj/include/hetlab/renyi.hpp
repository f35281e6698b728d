#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "hetlab/error.hpp"
#include "hetlab/order.hpp"

namespace hetlab {

inline constexpr double kProbabilityTolerance = 1e-9;

/// Throws ValidationError unless p is a non-empty vector of non-negative
/// finite entries summing to one within `tol`.
template <typename Derived>
void validate_distribution(const Eigen::MatrixBase<Derived>& p, double tol = kProbabilityTolerance) {
    using Scalar = typename Derived::Scalar;
    if (p.size() == 0)
        throw ValidationError("distribution must have at least one state");
    Scalar total(0);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const Scalar v = p.derived().coeff(i);
        if (!(v >= Scalar(0)) || !std::isfinite(static_cast<double>(v)))
            throw ValidationError("distribution entry " + std::to_string(i) + " is negative or not finite");
        total += v;
    }
    if (std::abs(static_cast<double>(total) - 1.0) > tol)
        throw ValidationError("distribution sums to " + std::to_string(static_cast<double>(total)) +
                              ", expected 1");
}

/// Divides a non-negative weight vector by its sum.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> normalize(const Eigen::MatrixBase<Derived>& v) {
    using Scalar = typename Derived::Scalar;
    if (v.size() == 0)
        throw ValidationError("cannot normalize an empty vector");
    if ((v.array() < Scalar(0)).any())
        throw ValidationError("cannot normalize a vector with negative entries");
    const Scalar total = v.sum();
    if (!(total > Scalar(0)))
        throw ValidationError("cannot normalize a vector with zero total mass");
    return v / total;
}

namespace detail {

// log(sum_i exp(x_i)) over the entries where `mask` holds.
template <typename Scalar, typename Values, typename Mask>
Scalar masked_log_sum_exp(const Values& x, const Mask& mask) {
    Scalar top = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (mask(i))
            top = std::max(top, x(i));
    if (std::isinf(static_cast<double>(top)))
        return top;
    Scalar acc(0);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (mask(i))
            acc += std::exp(x(i) - top);
    return top + std::log(acc);
}

template <typename Derived>
typename Derived::Scalar shannon_unchecked(const Eigen::MatrixBase<Derived>& p) {
    using Scalar = typename Derived::Scalar;
    Scalar h(0);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const Scalar v = p.derived().coeff(i);
        if (v > Scalar(0))
            h -= v * std::log(v);
    }
    return h;
}

// log Pi_q(p) without validation.
template <typename Derived>
typename Derived::Scalar log_renyi_unchecked(const Eigen::MatrixBase<Derived>& p, Order q) {
    using Scalar = typename Derived::Scalar;
    const auto& v = p.derived();
    if (q.is_zero())
        return std::log(static_cast<Scalar>((v.array() > Scalar(0)).count()));
    if (q.is_one())
        return shannon_unchecked(p);
    if (q.is_infinite())
        return -std::log(v.maxCoeff());
    const Scalar qs = static_cast<Scalar>(q.value());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> logs(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        logs(i) = v.coeff(i) > Scalar(0) ? qs * std::log(v.coeff(i)) : Scalar(0);
    const auto positive = [&](Eigen::Index i) { return v.coeff(i) > Scalar(0); };
    return masked_log_sum_exp<Scalar>(logs, positive) / (Scalar(1) - qs);
}

} // namespace detail

/// Rényi heterogeneity (Hill number) of order q: the effective number of
/// equally likely states. Lies in [1, n].
///
/// q = 0 counts states with strictly positive probability, q = 1 is the
/// perplexity exp(H), q = inf is 1 / max p. Other orders are evaluated as
/// exp(logsumexp(q log p) / (1 - q)).
template <typename Derived>
typename Derived::Scalar renyi_heterogeneity(const Eigen::MatrixBase<Derived>& p, Order q) {
    validate_distribution(p);
    return std::exp(detail::log_renyi_unchecked(p, q));
}

enum class Table1Index {
    richness,
    perplexity,
    inverse_simpson,
    berger_parker,
    renyi_entropy,
    shannon_entropy,
    tsallis_entropy,
    simpson_concentration,
    gini_simpson,
    generalized_entropy_index,
};

Table1Index parse_table1_index(const std::string& name);
std::string to_string(Table1Index index);

struct IndexValue {
    double value;
    // True when a q -> 1 or q -> 0 limit expression replaced the generic formula.
    bool limit_branch = false;
};

/// One row of the family of classical indices that are transforms of Pi_q.
/// Only renyi_entropy, tsallis_entropy and generalized_entropy_index read q.
template <typename Derived>
IndexValue table1_index(const Eigen::MatrixBase<Derived>& p, Order q, Table1Index index) {
    validate_distribution(p);
    const double n = static_cast<double>(p.size());
    auto hill = [&](Order order) { return static_cast<double>(std::exp(detail::log_renyi_unchecked(p, order))); };
    const double shannon = static_cast<double>(detail::shannon_unchecked(p));

    switch (index) {
    case Table1Index::richness:
        return {hill(Order(0.0))};
    case Table1Index::perplexity:
        return {hill(Order(1.0))};
    case Table1Index::inverse_simpson:
        return {hill(Order(2.0))};
    case Table1Index::berger_parker:
        return {hill(Order::infinity())};
    case Table1Index::renyi_entropy:
        return {static_cast<double>(detail::log_renyi_unchecked(p, q))};
    case Table1Index::shannon_entropy:
        return {shannon};
    case Table1Index::simpson_concentration:
        return {1.0 / hill(Order(2.0))};
    case Table1Index::gini_simpson:
        return {1.0 - 1.0 / hill(Order(2.0))};
    case Table1Index::tsallis_entropy: {
        if (q.is_one())
            return {shannon, true};
        if (q.is_infinite()) {
            // (1 - sum p^q) / (q - 1) -> 0 as q grows.
            return {0.0, true};
        }
        const double qv = q.value();
        const double pi = hill(q);
        return {(1.0 - std::pow(pi, 1.0 - qv)) / (qv - 1.0)};
    }
    case Table1Index::generalized_entropy_index: {
        if (q.is_one())
            return {std::log(n) - shannon, true};
        if (q.is_zero()) {
            // Mean log deviation; infinite once any state has zero mass.
            double acc = 0.0;
            for (Eigen::Index i = 0; i < p.size(); ++i) {
                const double v = static_cast<double>(p.derived().coeff(i));
                if (v <= 0.0)
                    return {std::numeric_limits<double>::infinity(), true};
                acc += std::log(n * v);
            }
            return {-acc / n, true};
        }
        if (q.is_infinite())
            throw DomainError("generalized entropy index is not defined at q = inf");
        const double qv = q.value();
        const double pi = hill(q);
        return {(std::pow(pi / n, 1.0 - qv) - 1.0) / (qv * (qv - 1.0))};
    }
    }
    throw DomainError("unknown index");
}

} // namespace hetlab
