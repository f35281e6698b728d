#pragma once

#include <array>

namespace hetlab::special {

/// Shape parameters (alpha, beta) of a beta distribution. Both must be > 0.
struct BetaShape {
    double alpha;
    double beta;

    BetaShape(double a, double b);

    BetaShape swapped() const { return {beta, alpha}; }
    double mean() const { return alpha / (alpha + beta); }
};

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// ln B(a, b).
double log_beta(double a, double b);

/// 1 / Gamma(x) for any real x; zero at the poles x = 0, -1, -2, ...
double reciprocal_gamma(double x);

/// Beta(alpha, beta) density at x in the open interval (0, 1).
double beta_pdf(double x, const BetaShape& shape);

/// Regularized incomplete beta I_x(a, b), i.e. the Beta(a, b) CDF at x.
double reg_inc_beta(double x, const BetaShape& shape);

/// I_{x1}(a, b) - I_{x0}(a, b) for 0 <= x0 <= x1 <= 1.
double gen_reg_inc_beta(double x0, double x1, const BetaShape& shape);

/// Regularized generalized hypergeometric function at unit argument,
///
///   3F2~(a; b; 1) = sum_k (a1)_k (a2)_k (a3)_k / (Gamma(b1 + k) Gamma(b2 + k) k!).
///
/// Terminating series (a numerator parameter that is a non-positive integer)
/// are summed exactly. Otherwise the series must converge at z = 1, which
/// needs b1 + b2 - a1 - a2 - a3 > 0; slowly converging tails are accelerated
/// by extrapolating the remainder from partial sums on a geometric ladder.
///
/// Throws ConvergenceError on divergent parameters and PrecisionError (with
/// the partial sum attached) when the iteration cap is reached.
double reg_hyp3f2_unit(const std::array<double, 3>& num, const std::array<double, 2>& den);

struct Hyp3F2Options {
    double term_tolerance = 1e-15;
    long max_terms = 100000;
    bool accelerate = true;
};

double reg_hyp3f2_unit(const std::array<double, 3>& num, const std::array<double, 2>& den,
                       const Hyp3F2Options& options);

} // namespace hetlab::special
