#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ofusim/estimator.hpp"
#include "ofusim/errors.hpp"

namespace ofusim {

enum class AttackMode { none, constant_bias, sinusoid, random_bounded };

// How the adversary perturbs stored states.  Each eligible state x_s receives
// an additive eta_s with ||eta_s|| <= Lambda; the control components of a
// record are never touched.
struct AttackPlan {
    AttackMode mode = AttackMode::none;
    double Lambda = 0.0;
    VectorXd direction;     // unit direction for the deterministic modes; empty -> e_1
    double frequency = 0.0; // cycles per step, sinusoid mode
    double phase = 0.0;
    std::uint64_t seed = 0; // random_bounded mode

    // Perturbation applied to state x_s (state dimension n).
    VectorXd eta(Eigen::Index s, Eigen::Index n) const;
};

AttackMode parse_attack_mode(const std::string& name);
std::string to_string(AttackMode m);

// One learning record: regressor z_k = (x_k; u_k) and successor x_{k+1}.
// The *_true fields shadow the values as generated by the plant, so the
// attack can be recomputed (idempotently) or undone at any time.
struct DbRow {
    VectorXd z;
    VectorXd x_next;
    VectorXd z_true;
    VectorXd x_next_true;
};

// Append-only learning database.  Record k holds (z_k, x_{k+1}); `now` equals
// the number of records.  The adversary may rewrite every stored occurrence of
// x_s for 1 <= s <= now-1: that state appears as the successor of record s-1
// and in the state block of record s.  x_0 (known initial state) and x_now
// (the most recent successor) are out of reach.
class LearningDatabase {
public:
    LearningDatabase(Eigen::Index n, Eigen::Index m);

    void append(const VectorXd& z, const VectorXd& x_next);

    Eigen::Index now() const { return static_cast<Eigen::Index>(rows_.size()); }
    Eigen::Index n() const { return n_; }
    Eigen::Index m() const { return m_; }
    const std::vector<DbRow>& rows() const { return rows_; }

    // Recompute every stored value from the true shadows and the plan.
    // Calling twice with the same plan is a no-op the second time.  The
    // explicit-`now` form asserts the caller's clock against the record count.
    void apply_attack(const AttackPlan& plan);
    void apply_attack(const AttackPlan& plan, Eigen::Index now_step);

    // Stored (possibly poisoned) regression view: the only data a defender sees.
    RegressionInputs materialize(double lambda) const;

    // Oracle view over the true shadow records (diagnostics and baselines only).
    RegressionInputs true_inputs_oracle(double lambda) const;

    // H = Xbar_stored - Xbar_true (rows eta_{k+1}^T), Y = Zbar_stored - Zbar_true
    // (rows zeta_k^T = (eta_k; 0)^T).  Oracle use only.
    struct AttackMatrices {
        MatrixXd H;
        MatrixXd Y;
    };
    AttackMatrices attack_matrices_oracle() const;

    // sum_k (||z_k^stored||^2 + ||zeta_k||^2), the quantity entering the
    // determinant upper bound.
    double det_bound_mass() const;

private:
    Eigen::Index n_, m_;
    std::vector<DbRow> rows_;
};

} // namespace ofusim
