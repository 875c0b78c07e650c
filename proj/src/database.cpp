#include "ofusim/database.hpp"

#include <cmath>

#include "ofusim/rng.hpp"

namespace ofusim {

VectorXd AttackPlan::eta(Eigen::Index s, Eigen::Index n) const {
    if (mode == AttackMode::none || Lambda == 0.0) return VectorXd::Zero(n);
    if (Lambda < 0.0) throw BudgetViolation("attack budget Lambda must be nonnegative");

    VectorXd d;
    if (direction.size() == 0) {
        d = VectorXd::Zero(n);
        d(0) = 1.0;
    } else {
        if (direction.size() != n)
            throw DimensionMismatch("attack direction does not match the state dimension");
        const double nrm = direction.norm();
        if (nrm == 0.0) throw BudgetViolation("attack direction must be nonzero");
        d = direction / nrm;
    }

    switch (mode) {
        case AttackMode::constant_bias:
            return Lambda * d;
        case AttackMode::sinusoid:
            return Lambda * std::sin(2.0 * M_PI * frequency * static_cast<double>(s) + phase) * d;
        case AttackMode::random_bounded: {
            // uniform draw in the Lambda-ball, one independent stream per
            // target state so the result does not depend on application order
            GaussianStream g(derive_seed(seed, static_cast<std::uint64_t>(s)));
            VectorXd v = g.vector(n);
            const double nrm = v.norm();
            if (nrm == 0.0) return VectorXd::Zero(n);
            const double r = std::pow(g.uniform01(), 1.0 / static_cast<double>(n));
            return (Lambda * r / nrm) * v;
        }
        case AttackMode::none:
            break;
    }
    return VectorXd::Zero(n);
}

AttackMode parse_attack_mode(const std::string& name) {
    if (name == "none") return AttackMode::none;
    if (name == "constant_bias") return AttackMode::constant_bias;
    if (name == "sinusoid") return AttackMode::sinusoid;
    if (name == "random_bounded") return AttackMode::random_bounded;
    throw ConfigInvalid("unknown attack mode: " + name);
}

std::string to_string(AttackMode m) {
    switch (m) {
        case AttackMode::none: return "none";
        case AttackMode::constant_bias: return "constant_bias";
        case AttackMode::sinusoid: return "sinusoid";
        case AttackMode::random_bounded: return "random_bounded";
    }
    return "none";
}

LearningDatabase::LearningDatabase(Eigen::Index n, Eigen::Index m) : n_(n), m_(m) {
    if (n < 1 || m < 1) throw DimensionMismatch("database needs n >= 1, m >= 1");
}

void LearningDatabase::append(const VectorXd& z, const VectorXd& x_next) {
    if (z.size() != n_ + m_) throw DimensionMismatch("regressor must have length n+m");
    if (x_next.size() != n_) throw DimensionMismatch("successor state must have length n");
    rows_.push_back(DbRow{z, x_next, z, x_next});
}

void LearningDatabase::apply_attack(const AttackPlan& plan) {
    // reset to the truth, then poison each reachable state everywhere it
    // appears; recomputing from the shadows makes this idempotent
    for (DbRow& r : rows_) {
        r.z = r.z_true;
        r.x_next = r.x_next_true;
    }
    const Eigen::Index t_now = now();
    for (Eigen::Index s = 1; s <= t_now - 1; ++s) {
        const VectorXd e = plan.eta(s, n_);
        const double nrm = e.norm();
        if (nrm > plan.Lambda * (1.0 + 1e-12))
            throw BudgetViolation("attack perturbation exceeds Lambda");
        rows_[s - 1].x_next += e;       // x_s as successor of record s-1
        rows_[s].z.head(n_) += e;       // x_s inside regressor z_s
    }
}

void LearningDatabase::apply_attack(const AttackPlan& plan, Eigen::Index now_step) {
    if (now_step != now())
        throw LengthMismatch("apply_attack: `now` must equal the stored record count");
    apply_attack(plan);
}

RegressionInputs LearningDatabase::materialize(double lambda) const {
    if (rows_.empty()) throw EmptyDatabase("no records to regress on");
    RegressionInputs in;
    in.lambda = lambda;
    in.Zbar.resize(now(), n_ + m_);
    in.Xbar.resize(now(), n_);
    for (Eigen::Index k = 0; k < now(); ++k) {
        in.Zbar.row(k) = rows_[k].z.transpose();
        in.Xbar.row(k) = rows_[k].x_next.transpose();
    }
    return in;
}

RegressionInputs LearningDatabase::true_inputs_oracle(double lambda) const {
    if (rows_.empty()) throw EmptyDatabase("no records to regress on");
    RegressionInputs in;
    in.lambda = lambda;
    in.Zbar.resize(now(), n_ + m_);
    in.Xbar.resize(now(), n_);
    for (Eigen::Index k = 0; k < now(); ++k) {
        in.Zbar.row(k) = rows_[k].z_true.transpose();
        in.Xbar.row(k) = rows_[k].x_next_true.transpose();
    }
    return in;
}

LearningDatabase::AttackMatrices LearningDatabase::attack_matrices_oracle() const {
    if (rows_.empty()) throw EmptyDatabase("no records to diff");
    AttackMatrices out;
    out.H.resize(now(), n_);
    out.Y.resize(now(), n_ + m_);
    for (Eigen::Index k = 0; k < now(); ++k) {
        out.H.row(k) = (rows_[k].x_next - rows_[k].x_next_true).transpose();
        out.Y.row(k) = (rows_[k].z - rows_[k].z_true).transpose();
    }
    return out;
}

double LearningDatabase::det_bound_mass() const {
    double acc = 0.0;
    for (const DbRow& r : rows_) {
        acc += r.z.squaredNorm();
        acc += (r.z - r.z_true).squaredNorm();
    }
    return acc;
}

} // namespace ofusim
