#pragma once

#include <optional>

#include <Eigen/Dense>

#include "hetlab/order.hpp"
#include "hetlab/special.hpp"

namespace hetlab {

/// Two-component beta mixture (1 - theta1) Beta(theta2, theta3) +
/// theta1 Beta(theta3, theta2). Component z = 2 carries prior theta1.
struct BetaMixtureParams {
    double theta1;
    double theta2;
    double theta3;

    BetaMixtureParams(double t1, double t2, double t3);

    special::BetaShape first() const { return {theta2, theta3}; }
    special::BetaShape second() const { return {theta3, theta2}; }
    Eigen::Vector2d prior() const { return {1.0 - theta1, theta1}; }
};

/// |theta2 - theta3| below which the components count as identical.
inline constexpr double kIdenticalShapeTolerance = 1e-12;

double bmm_marginal_pdf(double x, const BetaMixtureParams& theta);

/// Point where both posteriors equal 1/2; observations above it go to z = 2.
/// With identical components the threshold is 0 when theta1 > 1/2, else 1.
double optimal_threshold(const BetaMixtureParams& theta);

/// Expected assignment (P(x <= tau), P(x > tau)) under the marginal.
Eigen::Vector2d assignment_mass(const BetaMixtureParams& theta, double tau);

/// Between-observation heterogeneity of hard threshold assignments. The
/// within term is identically 1, so this is the Rényi heterogeneity of the
/// assignment mass.
double bmm_between_rrh(const BetaMixtureParams& theta, double tau, Order q);

/// E|X - Y| for independent X ~ Beta(a), Y ~ Beta(b), in closed form through
/// one regularized 3F2 at unit argument.
double beta_abs_distance(const special::BetaShape& a, const special::BetaShape& b);

/// Expected absolute distances between the two components, including the
/// non-zero self-distances on the diagonal.
Eigen::Matrix2d bmm_distance_matrix(const BetaMixtureParams& theta);

struct ComparisonRow {
    double rrh;
    double fhn;
    // Reported only at q = 2 and when the rescaled distance is well defined.
    std::optional<double> neqrqe;
    double lci;
};

/// Representational heterogeneity at the optimal threshold against the
/// functional Hill number, numbers-equivalent quadratic entropy and
/// Leinster-Cobbold index on the component distance matrix and prior.
ComparisonRow bmm_index_comparison(const BetaMixtureParams& theta, Order q, double u = 1.0);

} // namespace hetlab
