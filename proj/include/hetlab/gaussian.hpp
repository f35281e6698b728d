#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "hetlab/decomposition.hpp"
#include "hetlab/error.hpp"
#include "hetlab/order.hpp"

namespace hetlab {

/// Smallest admissible pivot in the LDL^T factorization of a covariance.
inline constexpr double kPivotFloor = 1e-10;

/// ln |cov| for a symmetric positive-definite matrix. Throws ValidationError
/// if the matrix is not symmetric within 1e-12 or a pivot falls below 1e-10.
template <typename Derived>
double log_det_spd(const Eigen::MatrixBase<Derived>& cov) {
    if (cov.rows() != cov.cols() || cov.rows() == 0)
        throw ValidationError("covariance must be square and non-empty");
    const Eigen::MatrixXd c = cov.template cast<double>();
    if (!c.allFinite())
        throw ValidationError("covariance entries must be finite");
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("covariance is not symmetric");
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
    const Eigen::VectorXd pivots = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || !(pivots.minCoeff() >= kPivotFloor))
        throw ValidationError("covariance is not positive definite");
    return pivots.array().log().sum();
}

/// ln of the Rényi heterogeneity of an n-dimensional Gaussian with the given
/// log-determinant: (n/2) ln 2pi + n ln q / (2 (q - 1)) + ln|cov| / 2.
double gaussian_log_renyi(Eigen::Index n, double log_det, Order q);

/// Rényi heterogeneity (effective volume) of N(mu, cov). Undefined at q = 0.
template <typename Derived>
double gaussian_renyi(const Eigen::MatrixBase<Derived>& cov, Order q) {
    return std::exp(gaussian_log_renyi(cov.rows(), log_det_spd(cov), q));
}

struct GaussianComponent {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Weighted set of full-covariance Gaussians sharing one dimension.
class GaussianEnsemble {
public:
    GaussianEnsemble(std::vector<GaussianComponent> components, Eigen::VectorXd weights);

    Eigen::Index size() const { return static_cast<Eigen::Index>(components_.size()); }
    Eigen::Index dim() const { return components_.front().mean.size(); }
    const GaussianComponent& component(Eigen::Index i) const { return components_[static_cast<std::size_t>(i)]; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const Eigen::VectorXd& log_dets() const { return log_dets_; }

private:
    std::vector<GaussianComponent> components_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd log_dets_;
};

/// Weighted set of diagonal Gaussians stored as N x n matrices of means and
/// variances, one component per row.
class DiagonalGaussianEnsemble {
public:
    DiagonalGaussianEnsemble(Eigen::MatrixXd means, Eigen::MatrixXd variances, Eigen::VectorXd weights);

    /// Uniform weights.
    DiagonalGaussianEnsemble(Eigen::MatrixXd means, Eigen::MatrixXd variances);

    Eigen::Index size() const { return means_.rows(); }
    Eigen::Index dim() const { return means_.cols(); }
    const Eigen::MatrixXd& means() const { return means_; }
    const Eigen::MatrixXd& variances() const { return variances_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const Eigen::VectorXd& log_dets() const { return log_dets_; }

    GaussianEnsemble to_full() const;

private:
    Eigen::MatrixXd means_;
    Eigen::MatrixXd variances_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd log_dets_;
};

/// Within-observation heterogeneity
///   (2 pi)^(n/2) [sum_i wbar_i^q |Sigma_i|^((1-q)/2) q^(-n/2)]^(1/(1-q)),
/// with wbar_i^q = w_i^q / sum_j w_j^q. q = 1 gives
/// exp{(n + sum_i w_i ln|2 pi Sigma_i|) / 2}; q = inf returns 0.
double gaussian_within(const GaussianEnsemble& ensemble, Order q);
double gaussian_within(const DiagonalGaussianEnsemble& ensemble, Order q);

/// Moment-matched Gaussian of the mixture sum_i w_i N(mu_i, Sigma_i).
GaussianComponent gaussian_pool(const GaussianEnsemble& ensemble);
GaussianComponent gaussian_pool(const DiagonalGaussianEnsemble& ensemble);

/// Heterogeneity of the pooled Gaussian divided by the within term.
/// Defined for 0 < q < inf.
double gaussian_between(const GaussianEnsemble& ensemble, Order q);
double gaussian_between(const DiagonalGaussianEnsemble& ensemble, Order q);

/// Pooled (parametric), within and between heterogeneity in one pass.
DecompositionResult gaussian_decompose(const GaussianEnsemble& ensemble, Order q);
DecompositionResult gaussian_decompose(const DiagonalGaussianEnsemble& ensemble, Order q);

struct ModelAverageGrid {
    // Half-width of the integration box in pooled standard deviations.
    double half_width = 8.0;
    // Grid nodes per axis; 0 picks a count that resolves the narrowest
    // component.
    long points_per_axis = 0;
};

/// Heterogeneity of the mixture density sum_i w_i N(mu_i, Sigma_i) itself,
/// integrated on a tensor trapezoid grid. Supports n <= 3. At q = inf the
/// best grid node seeds a mean-shift ascent to the density's peak.
double model_average_pooled_numeric(const GaussianEnsemble& ensemble, Order q, const ModelAverageGrid& grid = {});

} // namespace hetlab
