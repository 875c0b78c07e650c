#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "ofusim/database.hpp"
#include "ofusim/rng.hpp"

using namespace ofusim;

namespace {

VectorXd v1(double a) { return VectorXd::Constant(1, a); }
VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

// records (z_k, x_{k+1}) for the scalar trajectory 0.1, 0.3, 0.5, 0.7 with
// controls 0.2, 0.4, 0.6
LearningDatabase three_row_db() {
    LearningDatabase db(1, 1);
    db.append(v2(0.1, 0.2), v1(0.3));
    db.append(v2(0.3, 0.4), v1(0.5));
    db.append(v2(0.5, 0.6), v1(0.7));
    return db;
}

AttackPlan constant_plan(double Lambda) {
    AttackPlan plan;
    plan.mode = AttackMode::constant_bias;
    plan.Lambda = Lambda;
    return plan;
}

LearningDatabase random_db(GaussianStream& g, int t) {
    LearningDatabase db(2, 1);
    for (int k = 0; k < t; ++k) db.append(g.vector(3), g.vector(2));
    return db;
}

} // namespace

TEST_CASE("append keeps stored equal to true and steps in order") {
    LearningDatabase db(1, 1);
    db.append(v2(0.1, 0.2), v1(0.3));
    REQUIRE(db.now() == 1);
    CHECK(db.rows()[0].z == db.rows()[0].z_true);
    CHECK(db.rows()[0].x_next == db.rows()[0].x_next_true);
    db.append(v2(0.3, 0.4), v1(0.5));
    CHECK(db.now() == 2);
    CHECK_THROWS_AS(db.append(v1(0.0), v1(0.0)), DimensionMismatch);
}

TEST_CASE("constant bias hand trace: three rows, Lambda = 0.5") {
    LearningDatabase db = three_row_db();
    db.apply_attack(constant_plan(0.5), 3);

    // x_1 and x_2 shifted by +0.5 everywhere they appear; x_0 and x_3 intact
    CHECK(db.rows()[0].z == v2(0.1, 0.2));
    CHECK(db.rows()[0].x_next == v1(0.8));
    CHECK(db.rows()[1].z == v2(0.8, 0.4));
    CHECK(db.rows()[1].x_next == v1(1.0));
    CHECK(db.rows()[2].z == v2(1.0, 0.6));
    CHECK(db.rows()[2].x_next == v1(0.7));

    const auto am = db.attack_matrices_oracle();
    CHECK(am.H.col(0).isApprox((VectorXd(3) << 0.5, 0.5, 0.0).finished(), 1e-15));
    CHECK(am.Y.col(0).isApprox((VectorXd(3) << 0.0, 0.5, 0.5).finished(), 1e-15));
    CHECK(am.Y.col(1).cwiseAbs().maxCoeff() == 0.0); // controls never touched
}

TEST_CASE("applying the same attack twice is a no-op the second time") {
    LearningDatabase once = three_row_db();
    once.apply_attack(constant_plan(0.5));
    LearningDatabase twice = three_row_db();
    twice.apply_attack(constant_plan(0.5));
    twice.apply_attack(constant_plan(0.5));
    for (int k = 0; k < 3; ++k) {
        CHECK(once.rows()[k].z == twice.rows()[k].z);
        CHECK(once.rows()[k].x_next == twice.rows()[k].x_next);
    }
}

TEST_CASE("mode none leaves the database unchanged with zero attack matrices") {
    LearningDatabase db = three_row_db();
    AttackPlan plan;
    plan.mode = AttackMode::none;
    db.apply_attack(plan);
    const auto am = db.attack_matrices_oracle();
    CHECK(am.H.cwiseAbs().maxCoeff() == 0.0);
    CHECK(am.Y.cwiseAbs().maxCoeff() == 0.0);
    CHECK(db.rows()[1].z == db.rows()[1].z_true);
}

TEST_CASE("append after an attack leaves history alone and stores clean") {
    LearningDatabase db = three_row_db();
    db.apply_attack(constant_plan(0.5));
    db.append(v2(0.7, 0.8), v1(0.9));
    CHECK(db.rows()[3].z == db.rows()[3].z_true);
    CHECK(db.rows()[3].x_next == db.rows()[3].x_next_true);
    CHECK(db.rows()[1].z == v2(0.8, 0.4)); // earlier poisoning untouched by append
    // re-applying at the new clock reaches the previously protected x_3
    db.apply_attack(constant_plan(0.5), 4);
    CHECK(db.rows()[2].x_next == v1(1.2));
    CHECK(db.rows()[3].z == v2(1.2, 0.8));
    CHECK(db.rows()[3].x_next == v1(0.9)); // freshest target still clean
}

TEST_CASE("explicit clock must match the record count") {
    LearningDatabase db = three_row_db();
    CHECK_THROWS_AS(db.apply_attack(constant_plan(0.5), 2), LengthMismatch);
}

TEST_CASE("eta stays inside the Lambda ball in every mode") {
    for (const AttackMode mode :
         {AttackMode::constant_bias, AttackMode::sinusoid, AttackMode::random_bounded}) {
        AttackPlan plan;
        plan.mode = mode;
        plan.Lambda = 0.4;
        plan.frequency = 0.05;
        plan.phase = 0.3;
        plan.seed = 21;
        for (Eigen::Index s = 1; s < 60; ++s)
            CHECK(plan.eta(s, 2).norm() <= 0.4 * (1.0 + 1e-12));
    }
}

TEST_CASE("attack matrix row norms respect the budget on random databases") {
    GaussianStream g(23);
    for (int i = 0; i < 30; ++i) {
        LearningDatabase db = random_db(g, 2 + (i % 10));
        AttackPlan plan;
        plan.mode = i % 2 == 0 ? AttackMode::random_bounded : AttackMode::sinusoid;
        plan.Lambda = 0.6;
        plan.frequency = 0.02;
        plan.seed = 100 + static_cast<std::uint64_t>(i);
        db.apply_attack(plan);
        const auto am = db.attack_matrices_oracle();
        CHECK(am.H.rowwise().norm().maxCoeff() <= 0.6 * (1.0 + 1e-12));
        CHECK(am.Y.rowwise().norm().maxCoeff() <= 0.6 * (1.0 + 1e-12));
    }
}

TEST_CASE("materialize matches the stored rows and the H/Y identities") {
    LearningDatabase db = three_row_db();
    const auto clean = db.materialize(1.0);
    const auto truth = db.true_inputs_oracle(1.0);
    CHECK(clean.Zbar == truth.Zbar);
    CHECK(clean.Xbar == truth.Xbar);
    REQUIRE(clean.Zbar.rows() == 3);
    REQUIRE(clean.Zbar.cols() == 2);
    REQUIRE(clean.Xbar.cols() == 1);

    db.apply_attack(constant_plan(0.5));
    const auto stored = db.materialize(1.0);
    const auto am = db.attack_matrices_oracle();
    CHECK((stored.Xbar - truth.Xbar - am.H).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((stored.Zbar - truth.Zbar - am.Y).cwiseAbs().maxCoeff() < 1e-15);
    // reversibility: subtracting the oracle matrices recovers the truth up to
    // the rounding of the stored sum z_true + eta
    CHECK((stored.Zbar - am.Y - truth.Zbar).cwiseAbs().maxCoeff() < 1e-15);

    LearningDatabase empty(1, 1);
    CHECK_THROWS_AS(empty.materialize(1.0), EmptyDatabase);
}

TEST_CASE("||Z^T H|| never exceeds the triangle-inequality mass") {
    GaussianStream g(29);
    for (int i = 0; i < 200; ++i) {
        LearningDatabase db = random_db(g, 2 + (i % 8));
        AttackPlan plan;
        plan.mode = AttackMode::random_bounded;
        plan.Lambda = 0.5;
        plan.seed = 7000 + static_cast<std::uint64_t>(i);
        db.apply_attack(plan);
        const auto stored = db.materialize(1.0);
        const auto am = db.attack_matrices_oracle();
        double mass = 0.0;
        for (Eigen::Index k = 0; k < stored.Zbar.rows(); ++k)
            mass += stored.Zbar.row(k).norm() * am.H.row(k).norm();
        CHECK(operator_norm(stored.Zbar.transpose() * am.H) <= mass + 1e-12);
    }
}

TEST_CASE("det_bound_mass sums stored-row and poisoning masses") {
    LearningDatabase db = three_row_db();
    db.apply_attack(constant_plan(0.5));
    double expect = 0.0;
    for (const DbRow& row : db.rows())
        expect += row.z.squaredNorm() + (row.z - row.z_true).squaredNorm();
    CHECK(db.det_bound_mass() == doctest::Approx(expect).epsilon(1e-12));
}
