#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "ofusim/estimator.hpp"
#include "ofusim/lqr.hpp"

namespace ofusim {

struct OfuConfig {
    int steps = 200;                      // Newton iterations per restart
    double step_size = 0.1;               // initial step length, halved on backtracking
    int restarts = 4;                     // center, warm start, random feasible draws
    double fd_eps = 1e-4;                 // central-difference step
    double hessian_regularization = 1e-6; // diagonal loading, relative to max |H_ij|
    std::uint64_t seed = 0;               // seeds the random restarts
};

struct OfuResult {
    SystemParams params; // admissible, inside the ellipsoid
    double J = 0.0;      // trace(P(params))
    int iterations = 0;  // Newton steps taken by the winning restart
};

// Gradient / Hessian of Theta -> trace(P(Theta)) by central differences over
// the flattened parameter.  If the DARE fails at a probe point the step is
// shrunk once; a second failure propagates NonConvergent.
MatrixXd trace_p_gradient(const SystemParams& params, const CostWeights& w, double fd_eps);
MatrixXd trace_p_hessian(const SystemParams& params, const CostWeights& w, double fd_eps);

// Exact projection onto the ellipsoid in its own V-metric: if
// q = trace(D^T V D) > beta for D = Theta - center, pull back along D by
// sqrt(beta / q), landing on the boundary.
MatrixXd project_to_confidence(const MatrixXd& candidate, const ConfidenceEllipsoid& set);
SystemParams project_to_confidence(const SystemParams& candidate, const ConfidenceEllipsoid& set);

// Scale into the trace ball, then insist on admissibility; a rank failure is
// retried once with B perturbed by 1e-8 before giving up with Inadmissible.
SystemParams project_to_admissible(const SystemParams& candidate, double s, const CostWeights& w);

// Optimism in the face of uncertainty: minimize trace(P(Theta)) over the
// intersection of the confidence ellipsoid with the admissible set, aiming at
// the 1/sqrt(t) slack of the OFU rule.  Projected Newton with a fallback to
// projected gradient when the Hessian is indefinite; multiple restarts guard
// against the nonconvex landscape.  Throws NoFeasiblePoint if no admissible
// stabilizing parameter is found in the set.
OfuResult select_optimistic(const ConfidenceEllipsoid& set, const CostWeights& w, double s,
                            Eigen::Index t, const OfuConfig& cfg,
                            const MatrixXd* warm_start = nullptr);

} // namespace ofusim
