#pragma once

#include <Eigen/Dense>

#include "ofusim/errors.hpp"

namespace ofusim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Linear system x_{t+1} = A x_t + B u_t + w_t, equivalently x_{t+1} = Theta^T z_t + w_t
// with z = (x; u) and Theta = (A, B)^T of size (n+m) x n.  `s` is the radius of
// the admissible parameter ball trace(Theta^T Theta) <= s^2.
struct SystemParams {
    MatrixXd A; // n x n
    MatrixXd B; // n x m
    double s = 1.0;

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index m() const { return B.cols(); }

    // Stacked parameter matrix Theta = [A^T; B^T], (n+m) x n.
    MatrixXd theta() const;
    static SystemParams from_theta(const MatrixXd& theta, Eigen::Index n, double s);

    void validate() const; // throws DimensionMismatch
};

// Quadratic stage cost x^T Q x + u^T R u.
struct CostWeights {
    MatrixXd Q; // n x n, SPD
    MatrixXd R; // m x m, SPD

    void validate() const; // throws NonPositiveDefinite / DimensionMismatch
};

// Infinite-horizon average-cost LQ design.  The stability figures are
// diagnostics: a closed-loop norm >= 1 is reportable, not fatal.
struct RiccatiSolution {
    MatrixXd P;     // n x n, SPD fixed point of the DARE
    MatrixXd K;     // m x n, u = K x
    double J = 0.0; // trace(P)
    double closed_loop_norm = 0.0;            // ||A + B K|| (operator 2-norm)
    double closed_loop_spectral_radius = 0.0; // rho(A + B K)
};

struct DareOptions {
    double tol = 1e-10;
    int max_iter = 10000;
    MatrixXd P0; // optional warm start; empty means start from Q
};

// Fixed-point DARE solver: P <- Q + A^T P A - A^T P B (B^T P B + R)^{-1} B^T P A.
// Throws NonConvergent when max_iter is exhausted or the iterates blow up
// (non-stabilizable or near-boundary parameters).
RiccatiSolution solve_dare(const MatrixXd& A, const MatrixXd& B, const CostWeights& w,
                           const DareOptions& opts = {});
RiccatiSolution solve_dare(const SystemParams& sys, const CostWeights& w,
                           const DareOptions& opts = {});

// J(Theta) = trace(P(Theta)); the OFU objective.
double average_cost(const SystemParams& sys, const CostWeights& w, const DareOptions& opts = {});

// Spectral radius of a (generally non-symmetric) square matrix.
double spectral_radius(const MatrixXd& M);

// Largest singular value (operator 2-norm).
double operator_norm(const MatrixXd& M);

// Symmetric PSD square root (used for the observability pair (A, Q^{1/2})).
MatrixXd symmetric_sqrt(const MatrixXd& Q);

// True iff trace(Theta^T Theta) <= s^2, (A, B) is controllable and
// (A, Q^{1/2}) is observable.  Rank deficiency yields false, never a throw.
bool check_admissible(const SystemParams& sys, const CostWeights& w, double s);
bool check_admissible(const SystemParams& sys, const CostWeights& w);

// Scale Theta back onto the trace ball if it lies outside (no-op otherwise).
MatrixXd project_to_ball(const MatrixXd& theta, double s);

} // namespace ofusim
