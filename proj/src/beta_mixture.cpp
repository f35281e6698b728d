#include "hetlab/beta_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hetlab/classic.hpp"
#include "hetlab/error.hpp"
#include "hetlab/renyi.hpp"

namespace hetlab {

BetaMixtureParams::BetaMixtureParams(double t1, double t2, double t3) : theta1(t1), theta2(t2), theta3(t3) {
    if (!(t1 > 0.0 && t1 < 1.0))
        throw DomainError("theta1 must lie in (0, 1), got " + std::to_string(t1));
    if (!(t2 > 0.0) || !(t3 > 0.0) || std::isinf(t2) || std::isinf(t3))
        throw DomainError("theta2 and theta3 must be positive and finite");
}

double bmm_marginal_pdf(double x, const BetaMixtureParams& theta) {
    return (1.0 - theta.theta1) * special::beta_pdf(x, theta.first()) +
           theta.theta1 * special::beta_pdf(x, theta.second());
}

double optimal_threshold(const BetaMixtureParams& theta) {
    const double gap = theta.theta2 - theta.theta3;
    if (std::abs(gap) < kIdenticalShapeTolerance)
        return theta.theta1 > 0.5 ? 0.0 : 1.0;
    // tau / (1 - tau) = (theta1 / (1 - theta1))^(1 / gap); evaluated as a
    // logistic so extreme ratios saturate to 0 or 1 instead of overflowing.
    const double r = (std::log1p(-theta.theta1) - std::log(theta.theta1)) / gap;
    if (r > 0.0) {
        const double e = std::exp(-r);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(r));
}

Eigen::Vector2d assignment_mass(const BetaMixtureParams& theta, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0))
        throw DomainError("threshold must lie in [0, 1], got " + std::to_string(tau));
    const double upper = (1.0 - theta.theta1) * special::gen_reg_inc_beta(tau, 1.0, theta.first()) +
                         theta.theta1 * special::gen_reg_inc_beta(tau, 1.0, theta.second());
    return {1.0 - upper, upper};
}

double bmm_between_rrh(const BetaMixtureParams& theta, double tau, Order q) {
    return renyi_heterogeneity(assignment_mass(theta, tau), q);
}

double beta_abs_distance(const special::BetaShape& a, const special::BetaShape& b) {
    // E|X - Y| is unchanged by swapping X and Y or reflecting both through
    // 1/2. The series alternates while k < b1 - 1, so the smallest of the
    // four shapes takes the b1 slot.
    const double smallest = std::min({a.alpha, a.beta, b.alpha, b.beta});
    special::BetaShape x = a;
    special::BetaShape y = b;
    if (smallest == b.beta || smallest == b.alpha)
        std::swap(x, y);
    if (smallest != x.beta) {
        x = x.swapped();
        y = y.swapped();
    }
    const double a1 = x.alpha;
    const double b1 = x.beta;
    const double a2 = y.alpha;
    const double b2 = y.beta;
    const double log_eta = std::log(2.0) + special::log_gamma(a1) + special::log_gamma(b2) +
                           special::log_gamma(a1 + a2 + 1.0) - special::log_beta(a1, b1) - special::log_beta(a2, b2);
    const double phi = special::reg_hyp3f2_unit({a1, a1 + a2 + 1.0, 1.0 - b1}, {a1 + 2.0, a1 + a2 + b2 + 1.0});
    const double d = x.mean() - y.mean() + std::exp(log_eta) * phi;
    return std::max(d, 0.0);
}

Eigen::Matrix2d bmm_distance_matrix(const BetaMixtureParams& theta) {
    const special::BetaShape first = theta.first();
    const special::BetaShape second = theta.second();
    const double cross = beta_abs_distance(first, second);
    Eigen::Matrix2d d;
    d << beta_abs_distance(first, first), cross,
         cross, beta_abs_distance(second, second);
    return d;
}

ComparisonRow bmm_index_comparison(const BetaMixtureParams& theta, Order q, double u) {
    const Eigen::Matrix2d d = bmm_distance_matrix(theta);
    const Eigen::Vector2d p = theta.prior();
    ComparisonRow row{};
    row.rrh = bmm_between_rrh(theta, optimal_threshold(theta), q);
    row.fhn = functional_hill(d, p, q, DiagonalPolicy::free);
    if (q == Order(2.0) && d.maxCoeff() > d.minCoeff()) {
        try {
            row.neqrqe = neqrqe(rescale_distance(d, DiagonalPolicy::free), p, DiagonalPolicy::free);
        } catch (const NumericalError&) {
            row.neqrqe.reset();
        }
    }
    row.lci = leinster_cobbold(similarity_from_distance(d, u, DiagonalPolicy::free), p, q, DiagonalPolicy::free);
    return row;
}

} // namespace hetlab
