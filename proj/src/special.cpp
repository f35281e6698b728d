#include "hetlab/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hetlab/error.hpp"

namespace hetlab::special {

namespace {

constexpr double kIntegerSnap = 1e-12;

// glibc's lgamma writes the global signgam; lgamma_r keeps this reentrant.
double lgamma_signed(double x, int& sign) {
    return ::lgamma_r(x, &sign);
}

bool is_nonpositive_integer(double x) {
    return x <= kIntegerSnap && std::abs(x - std::round(x)) <= kIntegerSnap;
}

void require_unit_interval(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(x));
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 20000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny)
        d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny)
            d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny)
            c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny)
            d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny)
            c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) <= kEps)
            return h;
    }
    throw ConvergenceError("incomplete beta continued fraction did not converge");
}

// Remainder model for a series at unit argument whose term ratio tends to 1:
//
//   S = S_K + t_K * sum_i d_i (K / K0)^(1 - i),
//
// where S_K includes t_K. Sampling K on a geometric ladder K0 * 2^l keeps the
// linear system well conditioned; solving for (S, d_0, ...) extrapolates the
// tail.
struct TailSample {
    long index;
    long double partial;
    long double term;
};

long double extrapolate_tail(std::span<const TailSample> samples, long base) {
    const auto m = static_cast<Eigen::Index>(samples.size());
    using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    // Partial sums can be far from unit magnitude (1e-20 is common for the
    // regularized function), so work relative to the last partial sum and
    // equilibrate the columns before the solve.
    const long double reference = std::abs(samples.back().partial) > 0.0L ? std::abs(samples.back().partial) : 1.0L;
    MatrixL system(m, m);
    VectorL rhs(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const TailSample& s = samples[static_cast<std::size_t>(r)];
        const long double scaled = static_cast<long double>(s.index) / static_cast<long double>(base);
        system(r, 0) = 1.0L;
        long double power = scaled;
        for (Eigen::Index i = 1; i < m; ++i) {
            system(r, i) = -(s.term / reference) * power;
            power /= scaled;
        }
        rhs(r) = s.partial / reference;
    }
    for (Eigen::Index i = 1; i < m; ++i) {
        const long double norm = system.col(i).cwiseAbs().maxCoeff();
        if (norm > 0.0L)
            system.col(i) /= norm;
    }
    const VectorL solution = system.fullPivLu().solve(rhs);
    return solution(0) * reference;
}

} // namespace

BetaShape::BetaShape(double a, double b) : alpha(a), beta(b) {
    if (!(a > 0.0) || !(b > 0.0) || std::isinf(a) || std::isinf(b))
        throw DomainError("beta shape parameters must be positive and finite");
}

double log_gamma(double x) {
    if (!(x > 0.0) || std::isinf(x))
        throw DomainError("log_gamma requires a positive finite argument, got " + std::to_string(x));
    int sign = 1;
    return lgamma_signed(x, sign);
}

double log_beta(double a, double b) {
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double reciprocal_gamma(double x) {
    if (x <= 0.0 && x == std::round(x))
        return 0.0;
    int sign = 1;
    const double lg = lgamma_signed(x, sign);
    return sign * std::exp(-lg);
}

double beta_pdf(double x, const BetaShape& shape) {
    if (!(x > 0.0 && x < 1.0))
        throw DomainError("beta_pdf requires x in (0, 1), got " + std::to_string(x));
    const double log_density = (shape.alpha - 1.0) * std::log(x) + (shape.beta - 1.0) * std::log1p(-x) -
                               log_beta(shape.alpha, shape.beta);
    return std::exp(log_density);
}

double reg_inc_beta(double x, const BetaShape& shape) {
    require_unit_interval(x, "reg_inc_beta argument");
    if (x == 0.0)
        return 0.0;
    if (x == 1.0)
        return 1.0;
    const double a = shape.alpha;
    const double b = shape.beta;
    const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    const double front = std::exp(log_front);
    double value;
    if (x < (a + 1.0) / (a + b + 2.0))
        value = front * beta_continued_fraction(a, b, x) / a;
    else
        value = 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
    return std::clamp(value, 0.0, 1.0);
}

double gen_reg_inc_beta(double x0, double x1, const BetaShape& shape) {
    require_unit_interval(x0, "lower limit");
    require_unit_interval(x1, "upper limit");
    if (x0 > x1)
        throw DomainError("gen_reg_inc_beta requires x0 <= x1");
    if (x0 == x1)
        return 0.0;
    // Take the difference on whichever tail keeps both values small.
    const double mid = shape.alpha / (shape.alpha + shape.beta);
    double value;
    if (x1 <= mid) {
        value = reg_inc_beta(x1, shape) - reg_inc_beta(x0, shape);
    } else if (x0 >= mid) {
        const BetaShape mirror = shape.swapped();
        value = reg_inc_beta(1.0 - x0, mirror) - reg_inc_beta(1.0 - x1, mirror);
    } else {
        value = 1.0 - reg_inc_beta(x0, shape) - reg_inc_beta(1.0 - x1, shape.swapped());
    }
    return std::clamp(value, 0.0, 1.0);
}

double reg_hyp3f2_unit(const std::array<double, 3>& num, const std::array<double, 2>& den) {
    return reg_hyp3f2_unit(num, den, Hyp3F2Options{});
}

double reg_hyp3f2_unit(const std::array<double, 3>& num, const std::array<double, 2>& den,
                       const Hyp3F2Options& options) {
    for (double v : num)
        if (!std::isfinite(v))
            throw DomainError("3F2 numerator parameters must be finite");
    for (double v : den)
        if (!std::isfinite(v))
            throw DomainError("3F2 denominator parameters must be finite");

    std::array<double, 3> a = num;
    long terminate_at = -1;
    for (double& ai : a) {
        if (is_nonpositive_integer(ai)) {
            ai = std::round(ai);
            const long m = static_cast<long>(-ai);
            if (terminate_at < 0 || m < terminate_at)
                terminate_at = m;
        }
    }

    const double excess = den[0] + den[1] - a[0] - a[1] - a[2];
    if (terminate_at < 0 && !(excess > 0.0))
        throw ConvergenceError("3F2 at unit argument diverges: parametric excess " + std::to_string(excess) +
                               " is not positive");

    // Term k is sign * exp(log_mag); the numerator Pochhammer symbols are
    // accumulated in log space, the denominators come from lgamma directly.
    long double log_num = 0.0L;
    int num_sign = 1;
    // When both denominators stay off the poles and 1/(G(b1) G(b2)) fits in
    // long double, terms follow the exact Pochhammer ratio recurrence so each
    // carries only a few rounding errors. Terminating series cancel heavily
    // and need that accuracy.
    const bool pole_free = den[0] > 0.0 && den[1] > 0.0;
    const long double log_norm =
        pole_free ? -(std::lgamma(static_cast<long double>(den[0])) + std::lgamma(static_cast<long double>(den[1])))
                  : 0.0L;
    const bool use_ratio = pole_free && std::abs(log_norm) < 11000.0L;
    long double ratio_term = use_ratio ? std::exp(log_norm) : 0.0L;

    auto log_term = [&](long k) -> long double {
        long double log_den = 0.0L;
        int sign = num_sign;
        for (double bj : den) {
            const double arg = bj + static_cast<double>(k);
            if (arg <= 0.0 && arg == std::round(arg))
                return 0.0L;
            int s = 1;
            log_den += lgamma_signed(arg, s);
            sign *= s;
        }
        log_den += std::lgamma(static_cast<double>(k) + 1.0);
        return sign * std::exp(log_num - log_den);
    };
    auto term = [&](long k) -> long double { return use_ratio ? ratio_term : log_term(k); };
    auto advance = [&](long k) {
        if (use_ratio) {
            const long double kk = static_cast<long double>(k);
            ratio_term *= (static_cast<long double>(a[0]) + kk) * (static_cast<long double>(a[1]) + kk) *
                          (static_cast<long double>(a[2]) + kk) /
                          ((static_cast<long double>(den[0]) + kk) * (static_cast<long double>(den[1]) + kk) *
                           (kk + 1.0L));
            if (std::isfinite(ratio_term))
                return;
            throw NumericalError("3F2 term overflowed");
        }
        for (double ai : a) {
            const double f = ai + static_cast<double>(k);
            log_num += std::log(std::abs(static_cast<long double>(f)));
            if (f < 0.0)
                num_sign = -num_sign;
        }
    };

    if (terminate_at >= 0) {
        long double sum = 0.0L;
        for (long k = 0; k <= terminate_at; ++k) {
            sum += term(k);
            if (k < terminate_at)
                advance(k);
        }
        return static_cast<double>(sum);
    }

    double max_param = 0.0;
    for (double v : a)
        max_param = std::max(max_param, std::abs(v));
    for (double v : den)
        max_param = std::max(max_param, std::abs(v));
    // Beyond this index every Pochhammer factor is positive and the term
    // ratio behaves like 1 - (excess + 1) / k.
    const long asymptotic_start = static_cast<long>(std::ceil(max_param)) + 2;

    constexpr std::size_t kSamples = 9;
    const long ladder_base = std::max<long>(16, static_cast<long>(std::ceil(2.0 * max_param)));
    std::vector<TailSample> ladder;
    long next_sample = ladder_base;
    long double best_estimate = 0.0L;
    bool have_estimate = false;
    long double sum = 0.0L;

    for (long k = 0; k < options.max_terms; ++k) {
        const long double t = term(k);
        sum += t;
        advance(k);

        if (k < asymptotic_start)
            continue;
        if (std::abs(t) <= options.term_tolerance * std::abs(sum))
            return static_cast<double>(sum);

        if (!options.accelerate || k != next_sample)
            continue;
        ladder.push_back({k, sum, t});
        next_sample *= 2;
        if (ladder.size() < kSamples)
            continue;
        const std::span<const TailSample> window(ladder.data() + ladder.size() - kSamples, kSamples);
        const long double full = extrapolate_tail(window, ladder_base);
        const long double reduced = extrapolate_tail(window.first(kSamples - 1), ladder_base);
        best_estimate = full;
        have_estimate = true;
        if (std::abs(full - reduced) <= 1e-11L * std::abs(full))
            return static_cast<double>(full);
    }
    if (have_estimate)
        sum = best_estimate;
    throw PrecisionError("3F2 series reached the iteration cap of " + std::to_string(options.max_terms) +
                             " terms before converging",
                         static_cast<double>(sum));
}

} // namespace hetlab::special
