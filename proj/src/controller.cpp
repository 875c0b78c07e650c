#include "ofusim/controller.hpp"

#include <cmath>

#include "ofusim/rng.hpp"

namespace ofusim {

ControllerMode parse_controller_mode(const std::string& name) {
    if (name == "naive") return ControllerMode::naive;
    if (name == "self_correcting") return ControllerMode::self_correcting;
    if (name == "oracle_clean") return ControllerMode::oracle_clean;
    throw ConfigInvalid("unknown controller mode: " + name);
}

std::string to_string(ControllerMode m) {
    switch (m) {
        case ControllerMode::naive: return "naive";
        case ControllerMode::self_correcting: return "self_correcting";
        case ControllerMode::oracle_clean: return "oracle_clean";
    }
    return "naive";
}

Controller::Controller(Eigen::Index n, Eigen::Index m, ControllerConfig cfg)
    : n_(n), m_(m), cfg_(std::move(cfg)), db_(n, m), V_now_(n + m, cfg_.lambda) {
    cfg_.weights.validate();
    if (cfg_.weights.Q.rows() != n || cfg_.weights.R.rows() != m)
        throw DimensionMismatch("cost weights do not match the system dimensions");
    st_.log_det_at_switch = V_now_.log_det();
}

bool Controller::should_switch() const {
    if (st_.t == 0) return true;
    return V_now_.log_det() > std::log(2.0) + st_.log_det_at_switch;
}

bool Controller::maybe_switch() {
    st_.switched_this_step = false;
    if (!should_switch()) return false;
    recompute_policy();
    st_.switched_this_step = true;
    return true;
}

VectorXd Controller::act(const VectorXd& x) const {
    if (st_.K.size() == 0)
        throw MissingSnapshot("act() before the first policy computation");
    if (x.size() != n_) throw DimensionMismatch("state size does not match the controller");
    return st_.K * x;
}

void Controller::observe(const VectorXd& x, const VectorXd& u, const VectorXd& x_next) {
    VectorXd z(n_ + m_);
    z << x, u;
    db_.append(z, x_next);
    V_now_.add(z);
    ++st_.t;
}

void Controller::recompute_policy() {
    ConfidenceEllipsoid set;
    set.delta = cfg_.delta;
    const Eigen::Index t_now = db_.now();

    // budget view carrying the clean-radius inputs
    AttackBudget clean_budget;
    clean_budget.L = cfg_.L;
    clean_budget.s = cfg_.s;

    if (t_now == 0) {
        // nothing observed yet: the set is centered at zero with shape lambda I
        set.center = MatrixXd::Zero(n_ + m_, n_);
        set.shape = cfg_.lambda * MatrixXd::Identity(n_ + m_, n_ + m_);
        set.radius = (cfg_.mode == ControllerMode::self_correcting)
                         ? attacked_radius_apriori(cfg_.budget, 0, cfg_.delta, cfg_.lambda, n_, m_)
                         : clean_radius(set.shape, clean_budget, cfg_.delta, cfg_.lambda, n_);
    } else {
        db_.apply_attack(cfg_.attack); // lazy: poison only when the db is read
        const RegressionInputs in = (cfg_.mode == ControllerMode::oracle_clean)
                                        ? db_.true_inputs_oracle(cfg_.lambda)
                                        : db_.materialize(cfg_.lambda);
        set.center = least_squares_estimate(in);
        set.shape = covariance(in.Zbar, cfg_.lambda);
        switch (cfg_.mode) {
            case ControllerMode::naive:
            case ControllerMode::oracle_clean:
                set.radius = clean_radius(set.shape, clean_budget, cfg_.delta, cfg_.lambda, n_);
                break;
            case ControllerMode::self_correcting:
                set.radius =
                    attacked_radius_apriori(cfg_.budget, t_now, cfg_.delta, cfg_.lambda, n_, m_);
                break;
        }
    }

    OfuConfig ofu = cfg_.ofu;
    ofu.seed = derive_seed(cfg_.ofu.seed, 0xabcdULL + static_cast<std::uint64_t>(st_.switches));
    const MatrixXd* warm = (st_.theta_tilde.size() != 0) ? &st_.theta_tilde : nullptr;

    try {
        const OfuResult res = select_optimistic(set, cfg_.weights, cfg_.s, t_now, ofu, warm);
        const RiccatiSolution sol = solve_dare(res.params, cfg_.weights);
        st_.theta_tilde = res.params.theta();
        st_.K = sol.K;
        st_.J_tilde = sol.J;
        st_.set = set;
    } catch (const NoFeasiblePoint&) {
        if (st_.K.size() == 0) throw; // nothing to fall back on at t = 0
        ++st_.failed_switches;        // keep the previous policy, retry at the next doubling
        st_.set = set;
    }

    ++st_.switches;
    st_.switch_log.push_back(st_.t);
    st_.log_det_at_switch = V_now_.log_det();
}

} // namespace ofusim
