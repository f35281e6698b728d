#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "hetlab/error.hpp"
#include "hetlab/order.hpp"
#include "hetlab/renyi.hpp"

namespace hetlab {

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kMetricTolerance = 1e-9;
inline constexpr double kSingularityTolerance = 1e-12;

/// `strict` requires a zero distance diagonal (unit similarity diagonal).
/// Expected-distance matrices between distributions, where d(x, x) > 0, use `free`.
enum class DiagonalPolicy { strict, free };

template <typename Derived>
void validate_distance(const Eigen::MatrixBase<Derived>& d, DiagonalPolicy diagonal = DiagonalPolicy::strict) {
    if (d.rows() != d.cols() || d.rows() == 0)
        throw ValidationError("distance matrix must be square and non-empty");
    const Eigen::Index n = d.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = static_cast<double>(d(i, j));
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ValidationError("distance entries must be finite and non-negative");
            if (std::abs(v - static_cast<double>(d(j, i))) > kSymmetryTolerance)
                throw ValidationError("distance matrix is not symmetric");
        }
        if (diagonal == DiagonalPolicy::strict && d(i, i) != 0)
            throw ValidationError("distance matrix must have a zero diagonal");
    }
}

template <typename Derived>
void validate_similarity(const Eigen::MatrixBase<Derived>& s, DiagonalPolicy diagonal = DiagonalPolicy::strict) {
    if (s.rows() != s.cols() || s.rows() == 0)
        throw ValidationError("similarity matrix must be square and non-empty");
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            const double v = static_cast<double>(s(i, j));
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError("similarity entries must lie in [0, 1]");
        }
        if (diagonal == DiagonalPolicy::strict && s(i, i) != 1)
            throw ValidationError("similarity matrix must have a unit diagonal");
    }
}

namespace detail {

template <typename A, typename B>
void require_same_size(const Eigen::MatrixBase<A>& m, const Eigen::MatrixBase<B>& p) {
    if (m.rows() != p.size())
        throw ValidationError("matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                              " but the distribution has " + std::to_string(p.size()) + " states");
}

} // namespace detail

/// Generalized Rao quadratic entropy sum_ij D_ij (p_i p_j)^q over pairs with
/// p_i p_j > 0. q = 1 is the classical quadratic entropy.
template <typename DDerived, typename PDerived>
typename DDerived::Scalar rqe(const Eigen::MatrixBase<DDerived>& d, const Eigen::MatrixBase<PDerived>& p, Order q,
                              DiagonalPolicy diagonal = DiagonalPolicy::strict) {
    using Scalar = typename DDerived::Scalar;
    validate_distance(d, diagonal);
    validate_distribution(p);
    detail::require_same_size(d, p);
    if (q.is_infinite())
        throw DomainError("generalized quadratic entropy is not defined at q = inf");
    const Scalar qs = static_cast<Scalar>(q.value());
    Scalar total(0);
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            const Scalar pp = static_cast<Scalar>(p(i) * p(j));
            if (pp > Scalar(0))
                total += d(i, j) * (q.is_one() ? pp : std::pow(pp, qs));
        }
    return total;
}

/// (D - min D) / (max D - min D).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
rescale_distance(const Eigen::MatrixBase<Derived>& d, DiagonalPolicy diagonal = DiagonalPolicy::strict) {
    validate_distance(d, diagonal);
    const auto lo = d.minCoeff();
    const auto hi = d.maxCoeff();
    if (!(hi > lo))
        throw NumericalError("cannot rescale a constant distance matrix");
    return (d.array() - lo) / (hi - lo);
}

/// Numbers-equivalent quadratic entropy 1 / (1 - Q_1). `d` must already be
/// rescaled into [0, 1].
template <typename DDerived, typename PDerived>
typename DDerived::Scalar neqrqe(const Eigen::MatrixBase<DDerived>& d, const Eigen::MatrixBase<PDerived>& p,
                                 DiagonalPolicy diagonal = DiagonalPolicy::strict) {
    using Scalar = typename DDerived::Scalar;
    if ((d.array() > Scalar(1)).any())
        throw ValidationError("numbers-equivalent quadratic entropy requires distances rescaled into [0, 1]");
    const Scalar q1 = rqe(d, p, Order(1.0), diagonal);
    if (static_cast<double>(q1) >= 1.0 - kSingularityTolerance)
        throw NumericalError("quadratic entropy is 1; numbers equivalent is singular");
    return Scalar(1) / (Scalar(1) - q1);
}

/// Functional Hill number (Q_q / Q_1)^(1 / (2 (1 - q))).
///
/// q = 1 uses exp(-sum_ij D_ij p_i p_j ln(p_i p_j) / (2 Q_1)); q = inf uses
/// 1 / max sqrt(p_i p_j) over pairs with D_ij > 0.
template <typename DDerived, typename PDerived>
typename DDerived::Scalar functional_hill(const Eigen::MatrixBase<DDerived>& d, const Eigen::MatrixBase<PDerived>& p,
                                          Order q, DiagonalPolicy diagonal = DiagonalPolicy::strict) {
    using Scalar = typename DDerived::Scalar;
    const Scalar q1 = rqe(d, p, Order(1.0), diagonal);
    if (!(q1 > Scalar(0)))
        throw NumericalError("functional Hill number is undefined when the quadratic entropy is 0");
    const Eigen::Index n = d.rows();

    if (q.is_infinite()) {
        Scalar top(0);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (d(i, j) > Scalar(0))
                    top = std::max(top, static_cast<Scalar>(p(i) * p(j)));
        return Scalar(1) / std::sqrt(top);
    }
    if (q.is_one()) {
        Scalar acc(0);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                const Scalar pp = static_cast<Scalar>(p(i) * p(j));
                if (pp > Scalar(0))
                    acc += d(i, j) * pp * std::log(pp);
            }
        return std::exp(-acc / (Scalar(2) * q1));
    }
    // ln Q_q as a log-sum-exp so that large q does not underflow.
    const Scalar qs = static_cast<Scalar>(q.value());
    Scalar top = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const Scalar pp = static_cast<Scalar>(p(i) * p(j));
            if (pp > Scalar(0) && d(i, j) > Scalar(0))
                top = std::max(top, std::log(d(i, j)) + qs * std::log(pp));
        }
    Scalar acc(0);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const Scalar pp = static_cast<Scalar>(p(i) * p(j));
            if (pp > Scalar(0) && d(i, j) > Scalar(0))
                acc += std::exp(std::log(d(i, j)) + qs * std::log(pp) - top);
        }
    const Scalar log_qq = top + std::log(acc);
    return std::exp((log_qq - std::log(q1)) / (Scalar(2) * (Scalar(1) - qs)));
}

/// S_ij = exp(-u D_ij).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
similarity_from_distance(const Eigen::MatrixBase<Derived>& d, double u, DiagonalPolicy diagonal = DiagonalPolicy::strict) {
    using Scalar = typename Derived::Scalar;
    if (!(u >= 0.0))
        throw DomainError("similarity scale u must be non-negative");
    validate_distance(d, diagonal);
    return (-static_cast<Scalar>(u) * d.array()).exp();
}

/// Leinster-Cobbold similarity-sensitive diversity
/// [sum_i p_i (S p)_i^(q-1)]^(1/(1-q)), summed over states with p_i > 0.
template <typename SDerived, typename PDerived>
typename SDerived::Scalar leinster_cobbold(const Eigen::MatrixBase<SDerived>& s, const Eigen::MatrixBase<PDerived>& p,
                                           Order q, DiagonalPolicy diagonal = DiagonalPolicy::strict) {
    using Scalar = typename SDerived::Scalar;
    validate_similarity(s, diagonal);
    validate_distribution(p);
    detail::require_same_size(s, p);
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pv = p.template cast<Scalar>();
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sp = s * pv;
    const Eigen::Index n = pv.size();
    auto present = [&](Eigen::Index i) { return pv(i) > Scalar(0); };
    for (Eigen::Index i = 0; i < n; ++i)
        if (present(i) && !(sp(i) > Scalar(0)))
            throw NumericalError("similarity-weighted abundance vanishes on an occupied state");

    if (q.is_infinite()) {
        Scalar top(0);
        for (Eigen::Index i = 0; i < n; ++i)
            if (present(i))
                top = std::max(top, sp(i));
        return Scalar(1) / top;
    }
    if (q.is_one()) {
        Scalar acc(0);
        for (Eigen::Index i = 0; i < n; ++i)
            if (present(i))
                acc += pv(i) * std::log(sp(i));
        return std::exp(-acc);
    }
    const Scalar qs = static_cast<Scalar>(q.value());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> terms(n);
    for (Eigen::Index i = 0; i < n; ++i)
        terms(i) = present(i) ? std::log(pv(i)) + (qs - Scalar(1)) * std::log(sp(i)) : Scalar(0);
    return std::exp(detail::masked_log_sum_exp<Scalar>(terms, present) / (Scalar(1) - qs));
}

/// Triangle inequality on every triple (with slack `tol`) and strictly
/// positive off-diagonal distances.
template <typename Derived>
bool is_metric(const Eigen::MatrixBase<Derived>& d, double tol = kMetricTolerance) {
    validate_distance(d);
    const Eigen::Index n = d.rows();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && !(static_cast<double>(d(i, j)) > tol))
                return false;
            for (Eigen::Index k = 0; k < n; ++k)
                if (static_cast<double>(d(i, k)) > static_cast<double>(d(i, j) + d(j, k)) + tol)
                    return false;
        }
    return true;
}

/// Metric with d(x, z) <= max(d(x, y), d(y, z)) + tol on every triple.
template <typename Derived>
bool is_ultrametric(const Eigen::MatrixBase<Derived>& d, double tol = kMetricTolerance) {
    if (!is_metric(d, tol))
        return false;
    const Eigen::Index n = d.rows();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k)
                if (static_cast<double>(d(i, k)) > static_cast<double>(std::max(d(i, j), d(j, k))) + tol)
                    return false;
    return true;
}

/// Three-state distribution proportional to (1, sqrt(kappa), kappa), with
/// kappa = 0 and kappa = inf mapped to the one-hot end points.
Eigen::Vector3d three_state_probs(double kappa);

/// Distances between the corners of a triangle with base b and height h:
/// states 1 and 2 span the base, state 3 is the apex.
Eigen::Matrix3d three_state_distance(double h, double b);

} // namespace hetlab
