#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "hetlab/decomposition.hpp"
#include "hetlab/error.hpp"
#include "property.hpp"

using namespace hetlab;
using hetlab::testing::for_all;
using hetlab::testing::Gen;
using hetlab::testing::rel_err;

namespace {

constexpr double kExactRel = 1e-12;
constexpr double kReplicationRel = 1e-9;
constexpr double kBoundSlack = 1e-12;

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd table(std::initializer_list<std::initializer_list<double>> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double v : row)
            out(i, j++) = v;
        ++i;
    }
    return out;
}

// The q = inf within term is evaluated at a large finite order, which
// overstates the limit by at most a factor (N n)^(1 / (q - 1)).
double stand_in_slack(long rows, long cols) {
    return std::log(static_cast<double>(rows * cols)) / (kWithinInfinityStandIn - 1.0) + kBoundSlack;
}

Eigen::VectorXd equal_weights(Eigen::Index n) { return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)); }

Eigen::MatrixXd random_table(Gen& g, long rows, long cols, double zero_rate) {
    Eigen::MatrixXd t(rows, cols);
    for (long i = 0; i < rows; ++i)
        t.row(i) = g.simplex(cols, zero_rate).transpose();
    return t;
}

} // namespace

TEST_CASE("pooled examples") {
    const Eigen::MatrixXd single = table({{0.5, 0.3, 0.2}});
    for (double q : {0.0, 0.5, 1.0, 2.0, kInf})
        CHECK(rel_err(pooled_heterogeneity(single, Eigen::VectorXd::Ones(1), Order(q)),
                      renyi_heterogeneity(Eigen::Vector3d(0.5, 0.3, 0.2), Order(q))) < kExactRel);

    const Eigen::MatrixXd twins = table({{0.6, 0.4}, {0.6, 0.4}});
    for (double q : {0.0, 0.5, 1.0, 2.0, kInf})
        CHECK(rel_err(pooled_heterogeneity(twins, Eigen::Vector2d(0.9, 0.1), Order(q)),
                      renyi_heterogeneity(Eigen::Vector2d(0.6, 0.4), Order(q))) < kExactRel);

    CHECK(rel_err(pooled_heterogeneity(table({{1, 0}, {0, 1}}), equal_weights(2), Order(2.0)), 2.0) < kExactRel);
}

TEST_CASE("within examples") {
    const Eigen::MatrixXd one_hot = table({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
    for (double q : {0.0, 0.5, 1.0, 2.0, kInf})
        CHECK(rel_err(within_heterogeneity(one_hot, equal_weights(4), Order(q)), 1.0) < kExactRel);

    const Eigen::MatrixXd single = table({{0.5, 0.3, 0.2}});
    for (double q : {0.0, 0.5, 1.0, 2.0})
        CHECK(rel_err(within_heterogeneity(single, Eigen::VectorXd::Ones(1), Order(q)),
                      renyi_heterogeneity(Eigen::Vector3d(0.5, 0.3, 0.2), Order(q))) < kExactRel);

    CHECK(rel_err(within_heterogeneity(table({{0.5, 0.5, 0}, {0, 0.5, 0.5}}), equal_weights(2), Order(2.0)), 2.0) <
          kExactRel);
}

TEST_CASE("between examples") {
    const Eigen::MatrixXd same = table({{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}});
    for (double q : {0.0, 0.5, 1.0, 2.0})
        CHECK(rel_err(between_heterogeneity(same, equal_weights(3), Order(q)), 1.0) < kExactRel);

    CHECK(rel_err(between_heterogeneity(table({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), equal_weights(3), Order(1.0)),
                  3.0) < kExactRel);

    const double expected = std::exp(-0.7 * std::log(0.7) - 0.3 * std::log(0.3));
    CHECK(rel_err(between_heterogeneity(table({{1, 0}, {0, 1}}), Eigen::Vector2d(0.7, 0.3), Order(1.0)), expected) <
          kExactRel);
    CHECK(std::abs(expected - 1.8421) < 1e-4);
}

TEST_CASE("lande warning only for unequal weights away from q in {0, 1}") {
    const Eigen::MatrixXd t = table({{0.6, 0.4}, {0.1, 0.9}});
    const Eigen::Vector2d unequal(0.7, 0.3);
    CHECK_FALSE(decompose(t, unequal, Order(0.0)).lande_warning);
    CHECK_FALSE(decompose(t, unequal, Order(1.0)).lande_warning);
    CHECK(decompose(t, unequal, Order(0.5)).lande_warning);
    CHECK(decompose(t, unequal, Order(2.0)).lande_warning);
    CHECK(decompose(t, unequal, Order::infinity()).lande_warning);
    for (double q : {0.0, 0.5, 1.0, 2.0, kInf})
        CHECK_FALSE(decompose(t, equal_weights(2), Order(q)).lande_warning);
    CHECK_FALSE(decompose(t, Eigen::Vector2d(0.5 + 1e-13, 0.5 - 1e-13), Order(2.0)).lande_warning);
}

TEST_CASE("q = inf within is flagged as approximate") {
    const Eigen::MatrixXd t = table({{0.6, 0.4}, {0.1, 0.9}});
    CHECK(decompose(t, equal_weights(2), Order::infinity()).within_approximate);
    CHECK_FALSE(decompose(t, equal_weights(2), Order(50.0)).within_approximate);
    const double stand_in = within_heterogeneity(t, equal_weights(2), Order(kWithinInfinityStandIn));
    CHECK(within_heterogeneity(t, equal_weights(2), Order::infinity()) == stand_in);
}

TEST_CASE("zero-weight rows do not contribute") {
    const Eigen::MatrixXd t = table({{0.6, 0.4, 0.0}, {0.0, 0.1, 0.9}, {0.3, 0.3, 0.4}});
    const Eigen::Vector3d w(0.4, 0.0, 0.6);
    const Eigen::MatrixXd kept = table({{0.6, 0.4, 0.0}, {0.3, 0.3, 0.4}});
    const Eigen::Vector2d kept_w(0.4, 0.6);
    for (double q : {0.0, 0.5, 1.0, 2.0, kInf}) {
        CAPTURE(q);
        const auto a = decompose(t, w, Order(q));
        const auto b = decompose(kept, kept_w, Order(q));
        CHECK(rel_err(a.pooled, b.pooled) < kExactRel);
        CHECK(rel_err(a.within, b.within) < kExactRel);
    }
}

TEST_CASE("ensemble validation") {
    CHECK_THROWS_AS(decompose(table({{0.5, 0.6}}), Eigen::VectorXd::Ones(1), Order(1.0)), ValidationError);
    CHECK_THROWS_AS(decompose(table({{0.5, 0.5}}), Eigen::Vector2d(0.5, 0.5), Order(1.0)), ValidationError);
    CHECK_THROWS_AS(decompose(table({{0.5, 0.5}, {1, 0}}), Eigen::Vector2d(0.5, 0.6), Order(1.0)), ValidationError);
    CHECK_THROWS_AS(decompose(table({{0.5, 0.5}, {1, 0}}), Eigen::Vector2d(1.5, -0.5), Order(1.0)), ValidationError);
    CHECK_THROWS_AS(decompose(Eigen::MatrixXd(0, 0), Eigen::VectorXd(0), Order(1.0)), ValidationError);
    try {
        decompose(table({{0.5, 0.5}, {0.7, 0.7}}), equal_weights(2), Order(1.0));
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("pooled equals within times between") {
    for_all(1000, 31, [](Gen& g) {
        const long rows = g.integer(1, 8);
        const Eigen::MatrixXd t = random_table(g, rows, g.integer(1, 10), 0.2);
        const Eigen::VectorXd w = g.simplex(rows, 0.1);
        for (double q : {0.0, 0.3, 1.0, 2.5, kInf}) {
            const auto r = decompose(t, w, Order(q));
            CHECK(r.between == r.pooled / r.within);
            CHECK(std::abs(r.within * r.between - r.pooled) <= 4e-16 * r.pooled);
        }
    });
}

TEST_CASE("within never exceeds pooled at equal weights") {
    for_all(1000, 32, [](Gen& g) {
        const long rows = g.integer(1, 8);
        const long cols = g.integer(1, 10);
        const Eigen::MatrixXd t = random_table(g, rows, cols, 0.2);
        for (double q : {0.0, 0.1, 0.5, 0.99, 1.0, 1.01, 2.0, 5.0, 30.0, kInf}) {
            CAPTURE(q);
            const auto r = decompose(t, equal_weights(rows), Order(q));
            const double slack = std::isinf(q) ? stand_in_slack(rows, cols) : kBoundSlack;
            CHECK(r.between >= 1.0 - slack);
            CHECK(r.between <= static_cast<double>(rows) * (1.0 + kBoundSlack));
        }
    });
}

TEST_CASE("within never exceeds pooled at unequal weights for q in {0, 1}") {
    for_all(1000, 33, [](Gen& g) {
        const long rows = g.integer(2, 8);
        const Eigen::MatrixXd t = random_table(g, rows, g.integer(1, 10), 0.2);
        const Eigen::VectorXd w = g.simplex(rows, 0.0);
        for (double q : {0.0, 1.0}) {
            const auto r = decompose(t, w, Order(q));
            CHECK(r.between >= 1.0 - kBoundSlack);
            CHECK(r.between <= static_cast<double>(rows) * (1.0 + kBoundSlack));
            CHECK_FALSE(r.lande_warning);
        }
    });
}

TEST_CASE("within limit branches agree with nearby generic orders") {
    for_all(1000, 34, [](Gen& g) {
        const long rows = g.integer(1, 6);
        const Eigen::MatrixXd t = random_table(g, rows, g.integer(1, 8), 0.2);
        const Eigen::VectorXd w = g.simplex(rows, 0.0);
        const double at_one = within_heterogeneity(t, w, Order(1.0));
        for (double q : {1.0 - 1e-6, 1.0 + 1e-6})
            CHECK(std::abs(within_heterogeneity(t, w, Order(q)) - at_one) <= 1e-4 * at_one);
        const double at_zero = within_heterogeneity(t, w, Order(0.0));
        CHECK(std::abs(within_heterogeneity(t, w, Order(1e-9)) - at_zero) <= 1e-6 * at_zero);
    });
}

TEST_CASE("disjoint equally heterogeneous subsystems give between = N") {
    for_all(1000, 35, [](Gen& g) {
        const long m = g.integer(1, 8);
        const Eigen::VectorXd block = g.simplex(m, 0.2);
        for (long copies : {2L, 3L, 5L}) {
            Eigen::MatrixXd t = Eigen::MatrixXd::Zero(copies, copies * m);
            for (long c = 0; c < copies; ++c) {
                // Each subsystem permutes the shared block within its own columns.
                Eigen::VectorXd shuffled = block;
                std::shuffle(shuffled.data(), shuffled.data() + m, g.engine());
                t.block(c, c * m, 1, m) = shuffled.transpose();
            }
            for (double q : {0.0, 0.5, 1.0, 2.0, kInf}) {
                CAPTURE(copies);
                CAPTURE(q);
                const auto r = decompose(t, equal_weights(copies), Order(q));
                const double tol = std::isinf(q) ? stand_in_slack(copies, copies * m) : kReplicationRel;
                CHECK(rel_err(r.between, static_cast<double>(copies)) < tol);
                CHECK(rel_err(r.within, renyi_heterogeneity(block, Order(q))) < tol);
            }
        }
    });
}
