#pragma once

#include <Eigen/Dense>

#include "hetlab/decomposition.hpp"
#include "hetlab/renyi.hpp"

namespace hetlab {

/// Effective number of latent categories occupied by one observation's soft
/// assignment: 1 for a certain assignment, n_z for a uniform one.
template <typename Derived>
typename Derived::Scalar point_heterogeneity(const Eigen::MatrixBase<Derived>& row, Order q) {
    return renyi_heterogeneity(row, q);
}

/// Pooled, within- and between-observation heterogeneity of a batch of soft
/// assignments (one observation per row).
template <typename AssignDerived, typename WeightDerived>
DecompositionResult rrh_decompose(const Eigen::MatrixBase<AssignDerived>& assignments,
                                  const Eigen::MatrixBase<WeightDerived>& weights, Order q) {
    return decompose(assignments, weights, q);
}

/// Uniform observation weights.
template <typename AssignDerived>
DecompositionResult rrh_decompose(const Eigen::MatrixBase<AssignDerived>& assignments, Order q) {
    const Eigen::VectorXd w =
        Eigen::VectorXd::Constant(assignments.rows(), 1.0 / static_cast<double>(assignments.rows()));
    return decompose(assignments, w, q);
}

} // namespace hetlab
