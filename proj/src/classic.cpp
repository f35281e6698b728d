#include "hetlab/classic.hpp"

namespace hetlab {

Eigen::Vector3d three_state_probs(double kappa) {
    if (std::isnan(kappa) || kappa < 0.0)
        throw DomainError("kappa must be non-negative");
    if (kappa == 0.0)
        return {1.0, 0.0, 0.0};
    if (kappa == 1.0)
        return Eigen::Vector3d::Constant(1.0 / 3.0);
    if (std::isinf(kappa))
        return {0.0, 0.0, 1.0};
    const double root = std::sqrt(kappa);
    const double total = 1.0 + root + kappa;
    return Eigen::Vector3d(1.0, root, kappa) / total;
}

Eigen::Matrix3d three_state_distance(double h, double b) {
    if (!(h > 0.0) || !(b > 0.0) || std::isinf(h) || std::isinf(b))
        throw DomainError("triangle height and base must be positive and finite");
    const double side = std::sqrt(b * b / 4.0 + h * h);
    Eigen::Matrix3d d;
    d << 0.0, b, side,
         b, 0.0, side,
         side, side, 0.0;
    return d;
}

} // namespace hetlab
