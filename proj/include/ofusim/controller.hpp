#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ofusim/database.hpp"
#include "ofusim/estimator.hpp"
#include "ofusim/lqr.hpp"
#include "ofusim/ofu.hpp"

namespace ofusim {

// How the controller treats the (possibly poisoned) learning database.
//   naive           trusts stored records and uses the clean-data radius
//   self_correcting trusts stored records but inflates the radius to the
//                   data-free attacked bound, restoring coverage
//   oracle_clean    reads the true shadow records (diagnostic baseline)
enum class ControllerMode { naive, self_correcting, oracle_clean };

ControllerMode parse_controller_mode(const std::string& name);
std::string to_string(ControllerMode m);

struct ControllerConfig {
    CostWeights weights;
    double lambda = 1.0;
    double delta = 1.0 / 8000.0;
    double s = 1.0; // parameter ball radius
    double L = 0.1; // sub-Gaussian scale entering the radii
    ControllerMode mode = ControllerMode::naive;
    AttackPlan attack;
    AttackBudget budget; // used by the self-correcting radius
    OfuConfig ofu;
};

struct ControllerState {
    Eigen::Index t = 0;      // steps observed so far
    MatrixXd theta_tilde;    // committed optimistic parameter
    MatrixXd K;              // committed feedback gain
    double J_tilde = 0.0;    // trace(P(theta_tilde))
    ConfidenceEllipsoid set; // ellipsoid active since the last switch
    int switches = 0;        // policy recomputations (includes t = 0)
    int failed_switches = 0; // recomputations that found no feasible point
    std::vector<Eigen::Index> switch_log;
    double log_det_at_switch = 0.0;
    bool switched_this_step = false;
};

// Certainty-equivalent switching controller: re-estimates and re-optimizes
// only when the determinant of the regressor Gram matrix has doubled since
// the last switch, committing to a fixed gain in between.
class Controller {
public:
    Controller(Eigen::Index n, Eigen::Index m, ControllerConfig cfg);

    // Call once per step before acting; recomputes the policy when the
    // doubling test fires (always at t = 0).  Returns true on a switch.
    bool maybe_switch();

    // u_t = K x_t with the committed gain.
    VectorXd act(const VectorXd& x) const;

    // Record the transition (z_t, x_{t+1}); the switch statistic V_now grows
    // with the row as written, before any later poisoning.
    void observe(const VectorXd& x, const VectorXd& u, const VectorXd& x_next);

    bool should_switch() const;

    const ControllerState& state() const { return st_; }
    const LearningDatabase& database() const { return db_; }
    LearningDatabase& database() { return db_; }
    const MatrixXd& V_now() const { return V_now_.V(); }
    const ControllerConfig& config() const { return cfg_; }

private:
    void recompute_policy();

    Eigen::Index n_, m_;
    ControllerConfig cfg_;
    LearningDatabase db_;
    CovarianceAccumulator V_now_;
    ControllerState st_;
};

} // namespace ofusim
