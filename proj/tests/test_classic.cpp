#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "hetlab/classic.hpp"
#include "hetlab/error.hpp"
#include "property.hpp"

using namespace hetlab;
using hetlab::testing::for_all;
using hetlab::testing::Gen;
using hetlab::testing::rel_err;

namespace {

constexpr double kExactRel = 1e-12;
constexpr double kInsensitiveRel = 1e-9;
constexpr double kLimitRel = 1e-4;
constexpr double kInf = std::numeric_limits<double>::infinity();

const double kEquilateral = std::sqrt(3.0) / 2.0;

Eigen::MatrixXd categorical(Eigen::Index n) {
    return Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
}

Eigen::VectorXd uniform(Eigen::Index n) { return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)); }

// Random symmetric distance matrix with zero diagonal and a chance of
// repeated or vanishing off-diagonal entries.
Eigen::MatrixXd random_distance(Gen& g, long n) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j)
            d(i, j) = d(j, i) = g.coin(0.1) ? 0.0 : g.log_uniform(0.01, 10.0);
    return d;
}

// Euclidean distances between random points, which always form a metric.
Eigen::MatrixXd random_metric(Gen& g, long n) {
    Eigen::MatrixXd x(n, 3);
    for (long i = 0; i < n; ++i)
        for (long k = 0; k < 3; ++k)
            x(i, k) = g.normal();
    Eigen::MatrixXd d(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            d(i, j) = (x.row(i) - x.row(j)).norm();
    return d;
}

} // namespace

TEST_CASE("rqe examples") {
    CHECK(rel_err(rqe(categorical(2), uniform(2), Order(1.0)), 0.5) < kExactRel);
    CHECK(rqe(three_state_distance(0.7, 1.3), Eigen::Vector3d(1, 0, 0), Order(1.0)) == 0.0);
    CHECK(rel_err(rqe(three_state_distance(kEquilateral, 1.0), uniform(3), Order(1.0)), 2.0 / 3.0) < kExactRel);
}

TEST_CASE("rqe skips pairs with zero probability") {
    const Eigen::Vector3d p(0.5, 0.5, 0.0);
    CHECK(rel_err(rqe(categorical(3), p, Order(0.0)), 2.0) < kExactRel);
    CHECK(rel_err(rqe(categorical(3), p, Order(2.0)), 2.0 * 0.0625) < kExactRel);
}

TEST_CASE("rqe validation") {
    CHECK_THROWS_AS(rqe(categorical(3), uniform(2), Order(1.0)), ValidationError);
    Eigen::Matrix2d asym;
    asym << 0, 1, 2, 0;
    CHECK_THROWS_AS(rqe(asym, uniform(2), Order(1.0)), ValidationError);
    Eigen::Matrix2d diag;
    diag << 0.1, 1, 1, 0;
    CHECK_THROWS_AS(rqe(diag, uniform(2), Order(1.0)), ValidationError);
    CHECK_NOTHROW(rqe(diag, uniform(2), Order(1.0), DiagonalPolicy::free));
    Eigen::Matrix2d negative;
    negative << 0, -1, -1, 0;
    CHECK_THROWS_AS(rqe(negative, uniform(2), Order(1.0)), ValidationError);
    CHECK_THROWS_AS(rqe(categorical(2), uniform(2), Order::infinity()), DomainError);
}

TEST_CASE("rescale_distance examples") {
    CHECK(rescale_distance(categorical(4)).isApprox(categorical(4)));
    const Eigen::Matrix3d d = three_state_distance(0.4, 1.7);
    CHECK(rescale_distance(d).isApprox(rescale_distance((7.5 * d).eval()), 1e-15));

    const Eigen::MatrixXd r = rescale_distance(three_state_distance(1.0, 1.0));
    const double side = std::sqrt(1.25);
    CHECK(rel_err(r(0, 1), 1.0 / side) < kExactRel);
    CHECK(rel_err(r(0, 2), 1.0) < kExactRel);
    CHECK(rel_err(r(1, 2), 1.0) < kExactRel);
    CHECK(r.diagonal().isZero());
    CHECK_THROWS_AS(rescale_distance(Eigen::Matrix2d::Zero()), NumericalError);
}

TEST_CASE("neqrqe examples") {
    for_all(200, 51, [](Gen& g) {
        const long n = g.integer(2, 10);
        const Eigen::VectorXd p = g.simplex(n, 0.2);
        CHECK(rel_err(neqrqe(categorical(n), p), renyi_heterogeneity(p, Order(2.0))) < kExactRel);
    });
    CHECK(neqrqe(categorical(3), Eigen::Vector3d(0, 1, 0)) == 1.0);

    const double side = std::sqrt(0.5);
    const double q1 = 2.0 / 9.0 * (1.0 + 2.0 * side);
    CHECK(rel_err(neqrqe(rescale_distance(three_state_distance(0.5, 1.0)), uniform(3)), 1.0 / (1.0 - q1)) < kExactRel);
}

TEST_CASE("neqrqe requires rescaled distances and flags the singularity") {
    CHECK_THROWS_AS(neqrqe((2.0 * categorical(3)).eval(), uniform(3)), ValidationError);
    // Two states at unit distance with full mass split evenly: Q_1 = 0.5.
    CHECK_NOTHROW(neqrqe(categorical(2), uniform(2)));
    Eigen::Matrix2d d;
    d << 1, 1, 1, 1;
    CHECK_THROWS_AS(neqrqe(d, uniform(2), DiagonalPolicy::free), NumericalError);
}

TEST_CASE("functional_hill examples") {
    for (long n : {2L, 3L, 7L})
        for (double q : {0.5, 1.0, 2.0, 5.0, kInf})
            CHECK(rel_err(functional_hill(categorical(n), uniform(n), Order(q)), static_cast<double>(n)) <
                  kInsensitiveRel);
    const double f1 = functional_hill(three_state_distance(0.2, 1.0), three_state_probs(10.0), Order(1.0));
    CHECK(f1 > 3.0);
    CHECK_THROWS_AS(functional_hill(categorical(3), Eigen::Vector3d(1, 0, 0), Order(2.0)), NumericalError);
}

TEST_CASE("functional_hill is insensitive to distances under a uniform distribution") {
    for_all(1000, 52, [](Gen& g) {
        const long n = g.integer(2, 12);
        const Eigen::MatrixXd d = random_distance(g, n);
        if (!(d.sum() > 0.0))
            return;
        for (double q : {0.5, 2.0, 5.0})
            CHECK(rel_err(functional_hill(d, uniform(n), Order(q)), static_cast<double>(n)) < kInsensitiveRel);
    });
}

TEST_CASE("functional_hill q = 1 branch matches nearby orders") {
    for_all(1000, 53, [](Gen& g) {
        const long n = g.integer(2, 10);
        const Eigen::MatrixXd d = random_distance(g, n);
        const Eigen::VectorXd p = g.simplex(n, 0.2);
        if (!(rqe(d, p, Order(1.0)) > 1e-6))
            return;
        const double at_one = functional_hill(d, p, Order(1.0));
        for (double q : {1.0 - 1e-6, 1.0 + 1e-6})
            CHECK(std::abs(functional_hill(d, p, Order(q)) - at_one) <= kLimitRel * at_one);
    });
}

TEST_CASE("functional_hill q = inf branch is the large-order limit") {
    for_all(300, 54, [](Gen& g) {
        const long n = g.integer(2, 8);
        const Eigen::MatrixXd d = random_distance(g, n);
        const Eigen::VectorXd p = g.simplex(n, 0.0);
        if (!(rqe(d, p, Order(1.0)) > 0.0))
            return;
        const double at_inf = functional_hill(d, p, Order::infinity());
        CHECK(std::abs(functional_hill(d, p, Order(1e7)) - at_inf) <= 1e-5 * at_inf);
    });
}

TEST_CASE("functional_hill exceeds the state count somewhere on the sweep grid") {
    bool exceeded = false;
    for (int i = 1; i <= 30 && !exceeded; ++i)
        for (double kappa : {1.0, 2.0, 5.0, 10.0, 20.0, 50.0})
            exceeded = exceeded || functional_hill(three_state_distance(0.1 * i, 1.0), three_state_probs(kappa),
                                                   Order(1.0)) > 3.0;
    CHECK(exceeded);
}

TEST_CASE("similarity_from_distance examples") {
    const Eigen::MatrixXd d = three_state_distance(0.3, 2.0);
    CHECK(similarity_from_distance(d, 0.0).isApprox(Eigen::MatrixXd::Ones(3, 3)));
    CHECK((similarity_from_distance(d, 4.2).diagonal().array() == 1.0).all());
    const Eigen::MatrixXd s = similarity_from_distance(categorical(3), std::log(2.0));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j)
                CHECK(rel_err(s(i, j), 0.5) < kExactRel);
    CHECK_THROWS_AS(similarity_from_distance(d, -1.0), DomainError);
}

TEST_CASE("leinster_cobbold examples") {
    for_all(200, 55, [](Gen& g) {
        const long n = g.integer(1, 10);
        const Eigen::VectorXd p = g.simplex(n, 0.2);
        for (double q : {0.0, 0.5, 1.0, 2.0, kInf}) {
            CHECK(rel_err(leinster_cobbold(Eigen::MatrixXd::Identity(n, n), p, Order(q)),
                          renyi_heterogeneity(p, Order(q))) < kExactRel);
            CHECK(rel_err(leinster_cobbold(Eigen::MatrixXd::Ones(n, n), p, Order(q)), 1.0) < kExactRel);
        }
    });
    double previous = 0.0;
    for (double u : {1.0, 5.0, 10.0, 20.0, 40.0}) {
        const double l = leinster_cobbold(similarity_from_distance(categorical(3), u), uniform(3), Order(1.0));
        CHECK(l < 3.0);
        CHECK(l > previous);
        CHECK(rel_err(l, 3.0 / (1.0 + 2.0 * std::exp(-u))) < kExactRel);
        previous = l;
    }
}

TEST_CASE("leinster_cobbold validation") {
    CHECK_THROWS_AS(leinster_cobbold(Eigen::Matrix3d::Identity(), uniform(2), Order(1.0)), ValidationError);
    Eigen::Matrix2d s;
    s << 1, 1.5, 1.5, 1;
    CHECK_THROWS_AS(leinster_cobbold(s, uniform(2), Order(1.0)), ValidationError);
    s << 0.9, 0.2, 0.2, 1;
    CHECK_THROWS_AS(leinster_cobbold(s, uniform(2), Order(1.0)), ValidationError);
    CHECK_NOTHROW(leinster_cobbold(s, uniform(2), Order(1.0), DiagonalPolicy::free));
}

TEST_CASE("leinster_cobbold lies between 1 and the Renyi heterogeneity") {
    for_all(1000, 56, [](Gen& g) {
        const long n = g.integer(1, 12);
        const Eigen::VectorXd p = g.simplex(n, 0.2);
        Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
        for (long i = 0; i < n; ++i)
            for (long j = i + 1; j < n; ++j)
                s(i, j) = s(j, i) = g.coin(0.2) ? 0.0 : g.uniform();
        for (double q : {0.0, 0.5, 1.0, 2.0, 4.0, kInf}) {
            CAPTURE(q);
            const double l = leinster_cobbold(s, p, Order(q));
            CHECK(l >= 1.0 - kExactRel);
            CHECK(l <= renyi_heterogeneity(p, Order(q)) * (1.0 + kExactRel));
        }
    });
}

TEST_CASE("leinster_cobbold is non-decreasing in u") {
    for_all(300, 57, [](Gen& g) {
        const long n = g.integer(2, 10);
        const Eigen::MatrixXd d = random_distance(g, n);
        const Eigen::VectorXd p = g.simplex(n, 0.2);
        for (double q : {0.0, 0.5, 1.0, 2.0, kInf}) {
            double previous = 0.0;
            for (int k = 0; k <= 40; ++k) {
                const double u = k == 0 ? 0.0 : std::pow(10.0, -2.0 + 4.0 * k / 40.0);
                const double l = leinster_cobbold(similarity_from_distance(d, u), p, Order(q));
                CHECK(l >= previous * (1.0 - kExactRel));
                previous = l;
            }
        }
    });
}

TEST_CASE("leinster_cobbold q = 1 branch matches nearby orders") {
    for_all(1000, 58, [](Gen& g) {
        const long n = g.integer(1, 10);
        const Eigen::VectorXd p = g.simplex(n, 0.2);
        const Eigen::MatrixXd s = similarity_from_distance(random_distance(g, n), g.log_uniform(0.01, 10.0));
        const double at_one = leinster_cobbold(s, p, Order(1.0));
        for (double q : {1.0 - 1e-6, 1.0 + 1e-6})
            CHECK(std::abs(leinster_cobbold(s, p, Order(q)) - at_one) <= kLimitRel * at_one);
    });
}

TEST_CASE("metric predicates") {
    CHECK(is_metric(three_state_distance(0.5, 1.0)));
    CHECK_FALSE(is_ultrametric(three_state_distance(0.5, 1.0)));
    CHECK(is_metric(categorical(4)));
    CHECK(is_ultrametric(categorical(4)));
    CHECK(is_ultrametric(three_state_distance(kEquilateral, 1.0)));
    CHECK(is_ultrametric(three_state_distance(2.0, 1.0)));

    Eigen::Matrix3d violation;
    violation << 0, 1, 10, 1, 0, 1, 10, 1, 0;
    CHECK_FALSE(is_metric(violation));
    CHECK_FALSE(is_ultrametric(violation));

    Eigen::Matrix3d collapsed;
    collapsed << 0, 0, 1, 0, 0, 1, 1, 1, 0;
    CHECK_FALSE(is_metric(collapsed));
}

TEST_CASE("three-state triangles switch regime at the equilateral height") {
    for (int i = 1; i <= 30; ++i) {
        const double h = 0.1 * i;
        CAPTURE(h);
        const Eigen::Matrix3d d = three_state_distance(h, 1.0);
        CHECK(is_metric(d));
        CHECK(is_ultrametric(d) == (h >= kEquilateral));
    }
}

TEST_CASE("euclidean distances are metric") {
    for_all(300, 59, [](Gen& g) {
        const long n = g.integer(2, 10);
        CHECK(is_metric(random_metric(g, n)));
    });
}

TEST_CASE("three_state_probs examples") {
    CHECK(three_state_probs(1.0).isApprox(uniform(3)));
    CHECK(three_state_probs(0.0) == Eigen::Vector3d(1, 0, 0));
    CHECK(three_state_probs(kInf) == Eigen::Vector3d(0, 0, 1));
    CHECK(three_state_probs(4.0).isApprox(Eigen::Vector3d(1.0, 2.0, 4.0) / 7.0, 1e-15));
    CHECK_THROWS_AS(three_state_probs(-1.0), DomainError);
    CHECK(rel_err(three_state_probs(1e12)(2), 1.0 / (1.0 + 1e-6 + 1e-12)) < kExactRel);
}

TEST_CASE("three_state_distance examples") {
    const Eigen::Matrix3d eq = three_state_distance(kEquilateral, 1.0);
    CHECK(std::abs(eq(0, 1) - 1.0) < kExactRel);
    CHECK(std::abs(eq(0, 2) - 1.0) < kExactRel);
    CHECK(std::abs(eq(1, 2) - 1.0) < kExactRel);
    const Eigen::Matrix3d half = three_state_distance(0.5, 1.0);
    CHECK(half(0, 1) == 1.0);
    CHECK(rel_err(half(0, 2), std::sqrt(0.5)) < kExactRel);
    CHECK(rel_err(half(1, 2), std::sqrt(0.5)) < kExactRel);
    for_all(100, 60, [](Gen& g) {
        const Eigen::Matrix3d d = three_state_distance(g.log_uniform(0.01, 10.0), g.log_uniform(0.01, 10.0));
        CHECK(d.isApprox(d.transpose()));
        CHECK(d.diagonal().isZero());
    });
    CHECK_THROWS_AS(three_state_distance(0.0, 1.0), DomainError);
}

TEST_CASE("numbers-equivalent quadratic entropy peaks at the equilateral triangle") {
    double previous = 0.0;
    double peak = 0.0;
    double peak_h = 0.0;
    std::vector<double> values;
    for (int i = 1; i <= 30; ++i) {
        const double h = 0.1 * i;
        const double v = neqrqe(rescale_distance(three_state_distance(h, 1.0)), uniform(3));
        if (h < kEquilateral)
            CHECK(v > previous);
        else if (h - 0.1 > kEquilateral)
            CHECK(v < previous);
        if (v > peak) {
            peak = v;
            peak_h = h;
        }
        previous = v;
    }
    CHECK(std::abs(peak_h - kEquilateral) < 0.1);
    CHECK(rel_err(neqrqe(rescale_distance(three_state_distance(kEquilateral, 1.0)), uniform(3)), 3.0) < 1e-12);
}
