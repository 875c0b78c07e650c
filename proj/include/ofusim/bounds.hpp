#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "ofusim/estimator.hpp"
#include "ofusim/lqr.hpp"

namespace ofusim {

// Constants entering the theoretical regret and state bounds.  D, C, rho and
// eta_spec are suprema over the admissible set, estimated by a seeded random
// sweep; the rest follow closed forms (with the conventional defaults nu = 1,
// M = s where the source analysis leaves them free).
struct BoundConstants {
    double D = 0.0;        // sup ||P(Theta)||
    double C = 0.0;        // sup ||K(Theta)||
    double rho = 0.0;      // contraction bound for well-controlled steps, < 1
    double eta_spec = 0.0; // norm bound for not-well-controlled steps
    double L = 0.1;        // sub-Gaussian noise scale of the analysis
    double nu = 1.0;       // free constant in B'
    double M = 1.0;        // free constant in the H_c formula
    double U0 = 1.0;
    double Hc = 16.0;
    double G = 0.0;
    std::string method = "defaults"; // how the suprema were estimated

    void validate() const; // throws InvalidConstants
};

// Estimate D, C, rho, eta_spec by sampling admissible parameters in the trace
// ball of radius s and solving each DARE; rho is capped at 0.99 so the
// geometric prefactors stay finite.  Then fill U0, Hc, G from their closed
// forms for dimension p = n + m.
BoundConstants derive_constants(const SystemParams& true_sys, const CostWeights& w, double s,
                                int samples, std::uint64_t seed);

// Closed-form auxiliary constants alone (U0, Hc, G) for given p, s, M.
void fill_aux_constants(BoundConstants& c, Eigen::Index p, double s);

// Realized per-episode quantities consumed by theoretical_bound.
struct RealizedQuantities {
    double X = 1.0;            // max state norm (clean X_T or attacked X_{a,T})
    double Lambda_T = 0.0;     // attack budget realized/configured
    double log_det_V = 0.0;    // log det of the terminal Gram matrix (or its upper bound)
    double beta_T = 0.0;       // radius at horizon, evaluated at delta/4
    double zeta_sum = -1.0;    // sum_s min(||zeta_s||^2 in V_s^{-1}, 1/2); < 0 -> use T/2
};

enum class BoundKind { clean, attacked };

// Evaluate the four-term regret bound for a horizon T at confidence delta.
double theoretical_bound(BoundKind kind, const BoundConstants& consts,
                         const RealizedQuantities& realized, Eigen::Index T, double delta,
                         double lambda, Eigen::Index n, Eigen::Index m);

// High-probability bound on the attacked state norm at step t.
double state_bound_alpha(const BoundConstants& consts, double beta_a, double Z_a, double Lambda,
                         Eigen::Index t, double delta, Eigen::Index n, Eigen::Index m);

// Upper bound on the number of policy switches over horizon T.
double switch_bound(Eigen::Index T, double lambda, double X_a, double C, double Lambda,
                    Eigen::Index n, Eigen::Index m);

} // namespace ofusim
