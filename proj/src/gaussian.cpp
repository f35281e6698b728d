#include "hetlab/gaussian.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "hetlab/renyi.hpp"

namespace hetlab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require_positive_finite_order(Order q, const char* what) {
    if (q.is_zero() || q.is_infinite())
        throw DomainError(std::string(what) + " is defined only for 0 < q < inf");
}

void check_weights(const Eigen::VectorXd& weights, Eigen::Index count) {
    if (weights.size() != count)
        throw ValidationError("ensemble has " + std::to_string(count) + " components but " +
                              std::to_string(weights.size()) + " weights");
    try {
        validate_distribution(weights);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("weights: ") + e.what());
    }
}

double within_from_log_dets(Eigen::Index n, const Eigen::VectorXd& weights, const Eigen::VectorXd& log_dets,
                            Order q) {
    if (q.is_zero())
        throw DomainError("Gaussian within-observation heterogeneity is undefined at q = 0");
    if (q.is_infinite())
        return 0.0;
    const double dim = static_cast<double>(n);
    auto active = [&](Eigen::Index i) { return weights(i) > 0.0; };
    if (q.is_one()) {
        double acc = dim;
        for (Eigen::Index i = 0; i < weights.size(); ++i)
            if (active(i))
                acc += weights(i) * (dim * kLog2Pi + log_dets(i));
        return std::exp(acc / 2.0);
    }
    const double qv = q.value();
    Eigen::VectorXd terms(weights.size());
    Eigen::VectorXd log_weights(weights.size());
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        log_weights(i) = active(i) ? qv * std::log(weights(i)) : 0.0;
        terms(i) = active(i) ? log_weights(i) + 0.5 * (1.0 - qv) * log_dets(i) : 0.0;
    }
    const double mixed = detail::masked_log_sum_exp<double>(terms, active) -
                         detail::masked_log_sum_exp<double>(log_weights, active);
    return std::exp(0.5 * dim * kLog2Pi - dim * std::log(qv) / (2.0 * (1.0 - qv)) + mixed / (1.0 - qv));
}

double pooled_from_component(const GaussianComponent& pool, Order q) {
    double log_det = 0.0;
    try {
        log_det = log_det_spd(pool.covariance);
    } catch (const ValidationError&) {
        throw NumericalError("pooled covariance is degenerate");
    }
    return std::exp(gaussian_log_renyi(pool.covariance.rows(), log_det, q));
}

template <typename Ensemble>
DecompositionResult decompose_impl(const Ensemble& ensemble, Order q) {
    require_positive_finite_order(q, "Gaussian between-observation heterogeneity");
    DecompositionResult r;
    r.pooled = pooled_from_component(gaussian_pool(ensemble), q);
    r.within = gaussian_within(ensemble, q);
    r.between = r.pooled / r.within;
    r.lande_warning = !weights_are_equal(ensemble.weights()) && !q.is_one();
    return r;
}

} // namespace

double gaussian_log_renyi(Eigen::Index n, double log_det, Order q) {
    if (q.is_zero())
        throw DomainError("Gaussian Rényi heterogeneity is undefined at q = 0");
    const double dim = static_cast<double>(n);
    double log_value = 0.5 * dim * kLog2Pi + 0.5 * log_det;
    if (q.is_one())
        log_value += 0.5 * dim;
    else if (!q.is_infinite())
        log_value += dim * std::log(q.value()) / (2.0 * (q.value() - 1.0));
    return log_value;
}

GaussianEnsemble::GaussianEnsemble(std::vector<GaussianComponent> components, Eigen::VectorXd weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
    if (components_.empty())
        throw ValidationError("Gaussian ensemble must have at least one component");
    check_weights(weights_, size());
    const Eigen::Index n = components_.front().mean.size();
    if (n == 0)
        throw ValidationError("Gaussian components must have positive dimension");
    log_dets_.resize(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
        const GaussianComponent& c = components_[static_cast<std::size_t>(i)];
        if (c.mean.size() != n || c.covariance.rows() != n || c.covariance.cols() != n)
            throw ValidationError("component " + std::to_string(i) + " does not match dimension " +
                                  std::to_string(n));
        if (!c.mean.allFinite())
            throw ValidationError("component " + std::to_string(i) + " has a non-finite mean");
        try {
            log_dets_(i) = log_det_spd(c.covariance);
        } catch (const ValidationError& e) {
            throw ValidationError("component " + std::to_string(i) + ": " + e.what());
        }
    }
}

DiagonalGaussianEnsemble::DiagonalGaussianEnsemble(Eigen::MatrixXd means, Eigen::MatrixXd variances,
                                                   Eigen::VectorXd weights)
    : means_(std::move(means)), variances_(std::move(variances)), weights_(std::move(weights)) {
    if (means_.rows() == 0 || means_.cols() == 0)
        throw ValidationError("Gaussian ensemble must have at least one component of positive dimension");
    if (variances_.rows() != means_.rows() || variances_.cols() != means_.cols())
        throw ValidationError("means and variances must have the same shape");
    if (!means_.allFinite() || !variances_.allFinite())
        throw ValidationError("means and variances must be finite");
    if (!(variances_.minCoeff() >= kPivotFloor))
        throw ValidationError("variances must be at least " + std::to_string(kPivotFloor));
    check_weights(weights_, size());
    log_dets_ = variances_.array().log().rowwise().sum();
}

DiagonalGaussianEnsemble::DiagonalGaussianEnsemble(Eigen::MatrixXd means, Eigen::MatrixXd variances)
    : DiagonalGaussianEnsemble(means, variances,
                               Eigen::VectorXd::Constant(means.rows(), 1.0 / static_cast<double>(means.rows()))) {}

GaussianEnsemble DiagonalGaussianEnsemble::to_full() const {
    std::vector<GaussianComponent> components;
    components.reserve(static_cast<std::size_t>(size()));
    for (Eigen::Index i = 0; i < size(); ++i)
        components.push_back({means_.row(i).transpose(), variances_.row(i).asDiagonal()});
    return {std::move(components), weights_};
}

double gaussian_within(const GaussianEnsemble& ensemble, Order q) {
    return within_from_log_dets(ensemble.dim(), ensemble.weights(), ensemble.log_dets(), q);
}

double gaussian_within(const DiagonalGaussianEnsemble& ensemble, Order q) {
    return within_from_log_dets(ensemble.dim(), ensemble.weights(), ensemble.log_dets(), q);
}

GaussianComponent gaussian_pool(const GaussianEnsemble& ensemble) {
    const Eigen::Index n = ensemble.dim();
    const Eigen::VectorXd& w = ensemble.weights();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < ensemble.size(); ++i)
        mean += w(i) * ensemble.component(i).mean;
    // Sum of w_i (Sigma_i + (mu_i - mu*)(mu_i - mu*)^T); algebraically equal
    // to the raw second moment minus mu* mu*^T, without the cancellation.
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < ensemble.size(); ++i) {
        const Eigen::VectorXd offset = ensemble.component(i).mean - mean;
        cov += w(i) * (ensemble.component(i).covariance + offset * offset.transpose());
    }
    cov = 0.5 * (cov + cov.transpose()).eval();
    return {mean, cov};
}

GaussianComponent gaussian_pool(const DiagonalGaussianEnsemble& ensemble) {
    const Eigen::VectorXd& w = ensemble.weights();
    const Eigen::VectorXd mean = ensemble.means().transpose() * w;
    const Eigen::MatrixXd centered = ensemble.means().rowwise() - mean.transpose();
    Eigen::MatrixXd cov = centered.transpose() * w.asDiagonal() * centered;
    cov.diagonal() += ensemble.variances().transpose() * w;
    cov = 0.5 * (cov + cov.transpose()).eval();
    return {mean, cov};
}

double gaussian_between(const GaussianEnsemble& ensemble, Order q) {
    return decompose_impl(ensemble, q).between;
}

double gaussian_between(const DiagonalGaussianEnsemble& ensemble, Order q) {
    return decompose_impl(ensemble, q).between;
}

DecompositionResult gaussian_decompose(const GaussianEnsemble& ensemble, Order q) {
    return decompose_impl(ensemble, q);
}

DecompositionResult gaussian_decompose(const DiagonalGaussianEnsemble& ensemble, Order q) {
    return decompose_impl(ensemble, q);
}

double model_average_pooled_numeric(const GaussianEnsemble& ensemble, Order q, const ModelAverageGrid& grid) {
    const Eigen::Index n = ensemble.dim();
    if (n > 3)
        throw DomainError("model-average integration supports at most 3 dimensions, got " + std::to_string(n));
    if (q.is_zero())
        throw DomainError("model-average heterogeneity is undefined at q = 0");
    if (!(grid.half_width > 0.0))
        throw DomainError("integration half-width must be positive");

    const GaussianComponent pool = gaussian_pool(ensemble);
    const Eigen::VectorXd pooled_sd = pool.covariance.diagonal().cwiseSqrt();

    struct Factor {
        Eigen::VectorXd mean;
        Eigen::MatrixXd lower;
        double log_norm;
        double log_weight;
    };
    std::vector<Factor> factors;
    double narrowest = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ensemble.size(); ++i) {
        if (!(ensemble.weights()(i) > 0.0))
            continue;
        const GaussianComponent& c = ensemble.component(i);
        const Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
        factors.push_back({c.mean, llt.matrixL(), -0.5 * static_cast<double>(n) * kLog2Pi - 0.5 * ensemble.log_dets()(i),
                           std::log(ensemble.weights()(i))});
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.covariance, Eigen::EigenvaluesOnly);
        narrowest = std::min(narrowest, std::sqrt(eig.eigenvalues().minCoeff()));
    }

    std::vector<double> logs(factors.size());

    long points = grid.points_per_axis;
    if (points <= 0) {
        const long cap = n == 1 ? 400001 : n == 2 ? 2001 : 161;
        const double span = 2.0 * grid.half_width * pooled_sd.maxCoeff();
        points = static_cast<long>(std::ceil(span / (narrowest / 4.0))) + 1;
        points = std::clamp(points, 101L, cap);
    }
    if (points < 2)
        throw DomainError("integration grid needs at least 2 points per axis");

    Eigen::VectorXd lo(n);
    Eigen::VectorXd step(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        lo(k) = pool.mean(k) - grid.half_width * pooled_sd(k);
        step(k) = 2.0 * grid.half_width * pooled_sd(k) / static_cast<double>(points - 1);
    }

    auto log_density = [&](const Eigen::VectorXd& z) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < factors.size(); ++i) {
            const Factor& f = factors[i];
            const Eigen::VectorXd white = f.lower.triangularView<Eigen::Lower>().solve(z - f.mean);
            logs[i] = f.log_weight + f.log_norm - 0.5 * white.squaredNorm();
            top = std::max(top, logs[i]);
        }
        double acc = 0.0;
        for (double v : logs)
            acc += std::exp(v - top);
        return top + std::log(acc);
    };

    // Mean-shift ascent on the mixture density; each step can only raise it.
    auto refine_peak = [&](Eigen::VectorXd x) {
        std::vector<Eigen::MatrixXd> precisions;
        for (const Factor& f : factors) {
            const Eigen::MatrixXd inv_lower =
                f.lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
            precisions.push_back(inv_lower.transpose() * inv_lower);
        }
        for (int iter = 0; iter < 1000; ++iter) {
            const double top = log_density(x);
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
            Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
            for (std::size_t i = 0; i < factors.size(); ++i) {
                const double r = std::exp(logs[i] - top);
                a += r * precisions[i];
                b += r * (precisions[i] * factors[i].mean);
            }
            const Eigen::VectorXd next = a.ldlt().solve(b);
            const double moved = (next - x).norm();
            x = next;
            if (moved <= 1e-14 * (1.0 + x.norm()))
                break;
        }
        return std::exp(log_density(x));
    };

    const long total = n == 1 ? points : n == 2 ? points * points : points * points * points;
    double integral = 0.0;
    double peak = 0.0;
    Eigen::VectorXd peak_at = pool.mean;
    Eigen::VectorXd z(n);
    for (long index = 0; index < total; ++index) {
        long rest = index;
        double trapezoid = 1.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const long node = rest % points;
            rest /= points;
            z(k) = lo(k) + step(k) * static_cast<double>(node);
            if (node == 0 || node == points - 1)
                trapezoid *= 0.5;
        }
        const double lf = log_density(z);
        const double f = std::exp(lf);
        if (f > peak) {
            peak = f;
            peak_at = z;
        }
        if (q.is_one())
            integral -= trapezoid * (f > 0.0 ? f * lf : 0.0);
        else if (!q.is_infinite())
            integral += trapezoid * std::exp(q.value() * lf);
    }
    const double cell = step.prod();
    if (q.is_infinite())
        return 1.0 / std::max(peak, refine_peak(peak_at));
    if (q.is_one())
        return std::exp(integral * cell);
    return std::pow(integral * cell, 1.0 / (1.0 - q.value()));
}

} // namespace hetlab
