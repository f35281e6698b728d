#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "hetlab/error.hpp"
#include "hetlab/order.hpp"
#include "hetlab/renyi.hpp"

namespace hetlab {

/// Order substituted for q = inf in the within-group term, whose limit has
/// no closed form that holds for arbitrary weights.
inline constexpr double kWithinInfinityStandIn = 1e6;

/// Tolerance on |w_i - 1/N| below which weights count as equal.
inline constexpr double kEqualWeightTolerance = 1e-12;

struct DecompositionResult {
    double pooled = 1.0;
    double within = 1.0;
    double between = 1.0;
    // Unequal weights at q outside {0, 1}: between >= 1 is not guaranteed.
    bool lande_warning = false;
    // The within term was evaluated at a large finite stand-in for q = inf.
    bool within_approximate = false;
};

/// Throws ValidationError unless every row of `table` is a distribution and
/// `weights` is a distribution with one entry per row.
template <typename TableDerived, typename WeightDerived>
void validate_ensemble(const Eigen::MatrixBase<TableDerived>& table, const Eigen::MatrixBase<WeightDerived>& weights) {
    if (table.rows() == 0 || table.cols() == 0)
        throw ValidationError("ensemble table must be non-empty");
    if (weights.size() != table.rows())
        throw ValidationError("ensemble has " + std::to_string(table.rows()) + " rows but " +
                              std::to_string(weights.size()) + " weights");
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        try {
            validate_distribution(table.row(i).transpose());
        } catch (const ValidationError& e) {
            throw ValidationError("row " + std::to_string(i) + ": " + e.what());
        }
    }
    try {
        validate_distribution(weights);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("weights: ") + e.what());
    }
}

template <typename WeightDerived>
bool weights_are_equal(const Eigen::MatrixBase<WeightDerived>& weights) {
    const double target = 1.0 / static_cast<double>(weights.size());
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        if (std::abs(static_cast<double>(weights.derived().coeff(i)) - target) > kEqualWeightTolerance)
            return false;
    return true;
}

namespace detail {

template <typename TableDerived, typename WeightDerived>
double pooled_unchecked(const Eigen::MatrixBase<TableDerived>& table, const Eigen::MatrixBase<WeightDerived>& weights,
                        Order q) {
    using Scalar = typename TableDerived::Scalar;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mixed = table.transpose() * weights.template cast<Scalar>();
    return static_cast<double>(std::exp(log_renyi_unchecked(mixed, q)));
}

template <typename TableDerived, typename WeightDerived>
double within_unchecked(const Eigen::MatrixBase<TableDerived>& table, const Eigen::MatrixBase<WeightDerived>& weights,
                        Order q) {
    const auto& P = table.derived();
    const auto& w = weights.derived();
    const Eigen::Index rows = P.rows();
    auto weight = [&](Eigen::Index i) { return static_cast<double>(w.coeff(i)); };
    auto active = [&](Eigen::Index i) { return weight(i) > 0.0; };

    if (q.is_zero()) {
        double total = 0.0;
        double count = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (!active(i))
                continue;
            total += static_cast<double>((P.row(i).array() > 0).count());
            count += 1.0;
        }
        return total / count;
    }
    if (q.is_one()) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i)
            if (active(i))
                acc += weight(i) * static_cast<double>(shannon_unchecked(P.row(i).transpose()));
        return std::exp(acc);
    }

    // [sum_i w_i^q sum_j p_ij^q / sum_k w_k^q]^(1/(1-q)) in log space.
    const double qv = q.is_infinite() ? kWithinInfinityStandIn : q.value();
    Eigen::VectorXd log_row(rows);
    Eigen::VectorXd log_weight(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!active(i)) {
            log_row(i) = log_weight(i) = 0.0;
            continue;
        }
        const double lw = qv * std::log(weight(i));
        const double log_hill = static_cast<double>(log_renyi_unchecked(P.row(i).transpose(), Order(qv)));
        log_weight(i) = lw;
        log_row(i) = lw + (1.0 - qv) * log_hill;
    }
    const double numerator = masked_log_sum_exp<double>(log_row, active);
    const double normalizer = masked_log_sum_exp<double>(log_weight, active);
    return std::exp((numerator - normalizer) / (1.0 - qv));
}

} // namespace detail

/// Heterogeneity of the weighted mixture sum_i w_i p_i of the rows.
template <typename TableDerived, typename WeightDerived>
double pooled_heterogeneity(const Eigen::MatrixBase<TableDerived>& table,
                            const Eigen::MatrixBase<WeightDerived>& weights, Order q) {
    validate_ensemble(table, weights);
    return detail::pooled_unchecked(table, weights, q);
}

/// Effective number of states per subsystem. Rows with zero weight are
/// ignored. q = 0 averages the support counts of the weighted rows and q = 1
/// is exp(sum_i w_i H(p_i)); q = inf is evaluated at q = 1e6.
template <typename TableDerived, typename WeightDerived>
double within_heterogeneity(const Eigen::MatrixBase<TableDerived>& table,
                            const Eigen::MatrixBase<WeightDerived>& weights, Order q) {
    validate_ensemble(table, weights);
    return detail::within_unchecked(table, weights, q);
}

/// Pooled, within and between (= pooled / within) heterogeneity.
template <typename TableDerived, typename WeightDerived>
DecompositionResult decompose(const Eigen::MatrixBase<TableDerived>& table,
                              const Eigen::MatrixBase<WeightDerived>& weights, Order q) {
    validate_ensemble(table, weights);
    DecompositionResult r;
    r.pooled = detail::pooled_unchecked(table, weights, q);
    r.within = detail::within_unchecked(table, weights, q);
    r.between = r.pooled / r.within;
    r.lande_warning = !weights_are_equal(weights) && !q.is_zero() && !q.is_one();
    r.within_approximate = q.is_infinite();
    return r;
}

/// Effective number of completely distinct subsystems.
template <typename TableDerived, typename WeightDerived>
double between_heterogeneity(const Eigen::MatrixBase<TableDerived>& table,
                             const Eigen::MatrixBase<WeightDerived>& weights, Order q) {
    return decompose(table, weights, q).between;
}

} // namespace hetlab
