#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "ofusim/estimator.hpp"
#include "ofusim/rng.hpp"

using namespace ofusim;

namespace {

RegressionInputs three_row_fixture(double lambda = 1.0) {
    RegressionInputs in;
    in.Zbar = (MatrixXd(3, 2) << 1, 0, 0, 1, 1, 1).finished();
    in.Xbar = (MatrixXd(3, 1) << 0.5, 0.2, 0.7).finished();
    in.lambda = lambda;
    return in;
}

MatrixXd random_gram(GaussianStream& g, Eigen::Index p, double lambda, int rows) {
    MatrixXd V = lambda * MatrixXd::Identity(p, p);
    for (int k = 0; k < rows; ++k) {
        const VectorXd z = g.vector(p);
        V += z * z.transpose();
    }
    return V;
}

} // namespace

TEST_CASE("least squares: empty data gives the zero estimate") {
    RegressionInputs in;
    in.Zbar = MatrixXd(0, 2);
    in.Xbar = MatrixXd(0, 1);
    in.lambda = 1.0;
    const MatrixXd th = least_squares_estimate(in);
    REQUIRE(th.rows() == 2);
    REQUIRE(th.cols() == 1);
    CHECK(th.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("least squares: three-row ridge fixture") {
    const MatrixXd th = least_squares_estimate(three_row_fixture());
    CHECK(th(0, 0) == doctest::Approx(0.3375).epsilon(1e-12));
    CHECK(th(1, 0) == doctest::Approx(0.1875).epsilon(1e-12));
}

TEST_CASE("least squares: ridge shrinkage is monotone in lambda") {
    double prev = least_squares_estimate(three_row_fixture(1.0)).norm();
    for (const double lam : {10.0, 100.0, 1000.0}) {
        const double cur = least_squares_estimate(three_row_fixture(lam)).norm();
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("least squares: row-count mismatch is rejected") {
    RegressionInputs in;
    in.Zbar = MatrixXd::Zero(3, 2);
    in.Xbar = MatrixXd::Zero(2, 1);
    in.lambda = 1.0;
    CHECK_THROWS_AS(least_squares_estimate(in), DimensionMismatch);
}

TEST_CASE("covariance: no rows is lambda I, one row matches hand arithmetic") {
    CHECK((covariance(MatrixXd(0, 2), 1.0) - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() ==
          0.0);
    const MatrixXd V = covariance((MatrixXd(1, 2) << 1, 1).finished(), 1.0);
    MatrixXd expect(2, 2);
    expect << 2, 1, 1, 2;
    CHECK((V - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("covariance: batch and incremental agree, determinant nondecreasing") {
    GaussianStream g(3);
    const int t = 40;
    MatrixXd Zbar(t, 3);
    CovarianceAccumulator acc(3, 0.5);
    double prev_log_det = acc.log_det();
    for (int k = 0; k < t; ++k) {
        const VectorXd z = g.vector(3);
        Zbar.row(k) = z.transpose();
        acc.add(z);
        const double cur = acc.log_det();
        CHECK(cur >= prev_log_det - 1e-12);
        prev_log_det = cur;
    }
    const MatrixXd batch = covariance(Zbar, 0.5);
    CHECK((batch - acc.V()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(acc.count() == t);
    CHECK(log_det_spd(batch) == doctest::Approx(acc.log_det()).epsilon(1e-12));
}

TEST_CASE("clean radius: V = lambda I closed form and the benchmark inputs") {
    AttackBudget budget;
    budget.L = 0.1;
    budget.s = 1.0;
    const double delta = 1.0 / 8000.0;
    const double beta = clean_radius(MatrixXd::Identity(2, 2), budget, delta, 1.0, 1);
    const double expect = std::pow(0.1 * std::sqrt(2.0 * std::log(8000.0)) + 1.0, 2.0);
    CHECK(beta == doctest::Approx(expect).epsilon(1e-12));
    // direct evaluation of the formula at these inputs
    CHECK(beta == doctest::Approx(2.02767).epsilon(1e-5));
}

TEST_CASE("clean radius grows as rows are appended") {
    GaussianStream g(5);
    AttackBudget budget;
    budget.L = 0.1;
    budget.s = 1.0;
    CovarianceAccumulator acc(2, 1.0);
    double prev = clean_radius(acc.V(), budget, 0.05, 1.0, 1);
    for (int k = 0; k < 25; ++k) {
        acc.add(g.vector(2));
        const double cur = clean_radius(acc.V(), budget, 0.05, 1.0, 1);
        CHECK(cur >= prev - 1e-12);
        prev = cur;
    }
}

TEST_CASE("attacked radius: zero attack collapses to the clean radius") {
    GaussianStream g(9);
    AttackBudget budget;
    budget.L = 0.1;
    budget.s = 1.0;
    for (int i = 0; i < 200; ++i) {
        const MatrixXd V = random_gram(g, 2, 0.5 + 2.0 * g.uniform01(), 1 + (i % 7));
        const double lambda = V(0, 0) < 1.0 ? 0.5 : 1.0; // any positive value
        const double clean = clean_radius(V, budget, 0.05, lambda, 1);
        const double attacked = attacked_radius_oracle(V, AttackNorms{}, budget, 0.05, lambda, 1);
        CHECK(std::abs(attacked - clean) <= 1e-12 * clean);
    }
}

TEST_CASE("attacked radius: any target poisoning strictly inflates") {
    AttackBudget budget;
    budget.L = 0.1;
    budget.s = 1.0;
    const MatrixXd V = MatrixXd::Identity(2, 2) * 2.0;
    const double clean = clean_radius(V, budget, 0.05, 1.0, 1);
    AttackNorms norms;
    norms.ZtH = 0.3;
    CHECK(attacked_radius_oracle(V, norms, budget, 0.05, 1.0, 1) > clean);
}

TEST_CASE("attacked radius: single-row case matches the direct formula") {
    const MatrixXd Zbar = (MatrixXd(1, 2) << 1, 0).finished();
    const MatrixXd H = MatrixXd::Constant(1, 1, 0.5);   // eta with norm 0.5
    const MatrixXd Y = (MatrixXd(1, 2) << 0.5, 0).finished();
    const double lambda = 1.0, delta = 0.05;
    AttackBudget budget;
    budget.L = 0.1;
    budget.s = 1.0;
    const MatrixXd V = covariance(Zbar, lambda);

    const double from_matrices = attacked_radius_oracle(V, Zbar, H, Y, budget, delta, lambda, 1);
    AttackNorms norms;
    norms.ZtH = operator_norm(Zbar.transpose() * H);
    norms.ZtY = operator_norm(Zbar.transpose() * Y);
    const double from_norms = attacked_radius_oracle(V, norms, budget, delta, lambda, 1);
    const double log_ratio = log_confidence_ratio(V, lambda, delta);
    const double direct = std::pow(0.1 * std::sqrt(2.0 * log_ratio) + norms.ZtH / std::sqrt(lambda) +
                                       (std::sqrt(lambda) + norms.ZtY / std::sqrt(lambda)) * 1.0,
                                   2.0);
    CHECK(from_matrices == doctest::Approx(direct).epsilon(1e-12));
    CHECK(from_norms == doctest::Approx(direct).epsilon(1e-12));
    CHECK(norms.ZtH == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(norms.ZtY == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("a priori radius: Lambda = 0 reduction and monotonicity") {
    AttackBudget budget;
    budget.Lambda = 0.0;
    budget.X_a = 1.3;
    budget.C = 1.0;
    budget.L = 0.1;
    budget.s = 1.0;
    const double delta = 0.05, lambda = 1.0;
    const Eigen::Index t = 500;
    const double got = attacked_radius_apriori(budget, t, delta, lambda, 1, 1);
    const double p = 2.0;
    const double X2 = budget.X_a * budget.X_a;
    const double expect =
        std::pow(1.0 * budget.L *
                         std::sqrt(p * std::log((p * lambda +
                                                 2.0 * static_cast<double>(t) * (1.0 + 1.0) * X2) /
                                                (p * delta * lambda))) +
                     std::sqrt(lambda) * budget.s,
                 2.0);
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));

    AttackBudget attacked = budget;
    attacked.Lambda = 0.5;
    const double base = attacked_radius_apriori(attacked, t, delta, lambda, 1, 1);
    CHECK(base > got);
    CHECK(attacked_radius_apriori(attacked, t + 100, delta, lambda, 1, 1) > base);
    AttackBudget bigger = attacked;
    bigger.Lambda = 0.7;
    CHECK(attacked_radius_apriori(bigger, t, delta, lambda, 1, 1) > base);
    bigger = attacked;
    bigger.X_a = 2.0;
    CHECK(attacked_radius_apriori(bigger, t, delta, lambda, 1, 1) > base);
}

TEST_CASE("determinant upper bound: hand fixture and random domination") {
    CHECK(det_upper_bound({}, {}, 1.0, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(det_upper_bound({}, {}, 0.5, 3) == doctest::Approx(0.125).epsilon(1e-12));
    // one row with ||z||^2 = 2, no regressor poisoning: bound 9, actual det 3
    const double bound = det_upper_bound({std::sqrt(2.0)}, {0.0}, 1.0, 2);
    CHECK(bound == doctest::Approx(9.0).epsilon(1e-12));
    const MatrixXd V = covariance((MatrixXd(1, 2) << 1, 1).finished(), 1.0);
    CHECK(V.determinant() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(V.determinant() <= bound);

    GaussianStream g(13);
    for (int i = 0; i < 200; ++i) {
        const int t = 1 + (i % 9);
        MatrixXd Zbar(t, 2);
        std::vector<double> z_norms, zeta_norms;
        for (int k = 0; k < t; ++k) {
            VectorXd z = g.vector(2);
            const VectorXd zeta = 0.3 * g.vector(2); // pretend poisoning already inside z
            z += zeta;
            Zbar.row(k) = z.transpose();
            z_norms.push_back(z.norm());
            zeta_norms.push_back(zeta.norm());
        }
        const double lam = 0.5 + 2.0 * g.uniform01();
        const MatrixXd Vt = covariance(Zbar, lam);
        CHECK(Vt.determinant() <= det_upper_bound(z_norms, zeta_norms, lam, 2) * (1.0 + 1e-12));
        CHECK(log_det_spd(Vt) <= log_det_upper_bound(z_norms, zeta_norms, lam, 2) + 1e-9);
    }
}

TEST_CASE("membership: center, boundary tie, and just outside") {
    ConfidenceEllipsoid set;
    set.center = MatrixXd::Zero(2, 1);
    set.shape = MatrixXd::Identity(2, 2);
    set.radius = 1.0;
    set.delta = 0.05;
    CHECK(membership(set, MatrixXd::Zero(2, 1)));
    CHECK(membership(set, (MatrixXd(2, 1) << 1.0, 0.0).finished()));
    CHECK_FALSE(membership(set, (MatrixXd(2, 1) << std::sqrt(1.0001), 0.0).finished()));
    CHECK_THROWS_AS(membership(set, MatrixXd::Zero(3, 1)), DimensionMismatch);
}

TEST_CASE("self-normalized check: zero noise and the hand fixture") {
    const MatrixXd Zbar = MatrixXd::Constant(1, 1, 1.0);
    const auto zero = self_normalized_check(Zbar, MatrixXd::Zero(1, 1), 1.0, 0.1, 0.05);
    CHECK(zero.lhs == 0.0);
    CHECK(zero.holds);

    const auto r = self_normalized_check(Zbar, MatrixXd::Constant(1, 1, 0.05), 1.0, 0.1, 0.05);
    CHECK(r.lhs == doctest::Approx(0.00125).epsilon(1e-12));
    CHECK(r.rhs == doctest::Approx(2.0 * 0.01 * std::log(std::sqrt(2.0) / 0.05)).epsilon(1e-12));
    CHECK(r.rhs == doctest::Approx(0.0668).epsilon(1e-3));
    CHECK(r.holds);
}

TEST_CASE("log confidence ratio matches its definition") {
    GaussianStream g(17);
    const MatrixXd V = random_gram(g, 2, 1.0, 6);
    const double got = log_confidence_ratio(V, 1.0, 0.05);
    const double expect = 0.5 * (std::log(V.determinant()) - 2.0 * std::log(1.0)) -
                          std::log(0.05);
    CHECK(got == doctest::Approx(expect).epsilon(1e-10));
}
