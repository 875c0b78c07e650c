#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ofusim/errors.hpp"
#include "ofusim/lqr.hpp"

namespace ofusim {

// Regression data for x_{t+1} = Theta^T z_t + w_t: row k of Zbar is z_k^T,
// row k of Xbar is x_{k+1}^T.  Zero rows (t = 0) are legal.
struct RegressionInputs {
    MatrixXd Zbar;       // t x (n+m)
    MatrixXd Xbar;       // t x n
    double lambda = 1.0; // ridge weight, > 0

    void validate() const;
};

// Ellipsoid { Theta : trace((center-Theta)^T shape (center-Theta)) <= radius }.
struct ConfidenceEllipsoid {
    MatrixXd center; // (n+m) x n
    MatrixXd shape;  // (n+m) x (n+m), SPD
    double radius = 0.0;
    double delta = 0.0; // confidence level the radius was built for
};

// A priori budgets entering the radii and the theoretical bounds.
struct AttackBudget {
    double Lambda = 0.0; // per-step poisoning magnitude ||eta_t|| <= Lambda
    double X_a = 1.0;    // bound on attacked state norms, max ||x_s^a|| <= X_a
    double C = 1.0;      // bound on controller gain ||K||
    double L = 1.0;      // sub-Gaussian scale of the process noise
    double s = 1.0;      // parameter ball radius
};

// Ridge estimate (Zbar^T Zbar + lambda I)^{-1} Zbar^T Xbar via an SPD solve.
// With no rows the estimate is zero.
MatrixXd least_squares_estimate(const RegressionInputs& in);

// Batch Gram matrix V = lambda I + Zbar^T Zbar.
MatrixXd covariance(const MatrixXd& Zbar, double lambda);

// Incremental form of the same: V accumulates rank-one updates z z^T.
class CovarianceAccumulator {
public:
    CovarianceAccumulator(Eigen::Index p, double lambda);

    void add(const VectorXd& z);
    const MatrixXd& V() const { return V_; }
    double log_det() const;
    Eigen::Index count() const { return count_; }

private:
    MatrixXd V_;
    Eigen::Index count_ = 0;
};

// log det of an SPD matrix through its Cholesky factor (never the raw
// determinant, which overflows over long horizons).
double log_det_spd(const MatrixXd& V);

// log( det(V)^{1/2} det(lambda I)^{-1/2} / delta ) for V of size p x p.
double log_confidence_ratio(const MatrixXd& V, double lambda, double delta);

// Radius of the clean-data confidence set:
//   beta = ( n L sqrt(2 log(det(V)^{1/2} det(lambda I)^{-1/2} / delta)) + sqrt(lambda) s )^2
double clean_radius(const MatrixXd& shape, const AttackBudget& budget, double delta, double lambda,
                    Eigen::Index n);

// Operator norms of Zbar^T H and Zbar^T Y, the interaction of the stored
// regressors with the poisoning of targets (H) and regressors (Y).
struct AttackNorms {
    double ZtH = 0.0;
    double ZtY = 0.0;
};

// Radius valid on poisoned data, given the true attack matrices (oracle /
// diagnostic use; a real defender cannot observe H and Y):
//   beta^a = ( n L sqrt(2 log(...)) + ||Z^T H||/sqrt(lambda)
//              + (sqrt(lambda) + ||Z^T Y||/sqrt(lambda)) s )^2
double attacked_radius_oracle(const MatrixXd& shape, const AttackNorms& norms,
                              const AttackBudget& budget, double delta, double lambda,
                              Eigen::Index n);
double attacked_radius_oracle(const MatrixXd& shape, const MatrixXd& Zbar, const MatrixXd& H,
                              const MatrixXd& Y, const AttackBudget& budget, double delta,
                              double lambda, Eigen::Index n);

// Data-free upper bound on the attacked radius: only the step count and the
// budgets enter, so a defender can size the set without seeing the attack.
double attacked_radius_apriori(const AttackBudget& budget, Eigen::Index t, double delta,
                               double lambda, Eigen::Index n, Eigen::Index m);

// Deterministic bound det(V) <= ((p lambda + 2 sum_k (||z_k||^2 + ||zeta_k||^2)) / p)^p
// from the row norms; log variant for long horizons.
double det_upper_bound(const std::vector<double>& z_norms, const std::vector<double>& zeta_norms,
                       double lambda, Eigen::Index p);
double log_det_upper_bound(const std::vector<double>& z_norms,
                           const std::vector<double>& zeta_norms, double lambda, Eigen::Index p);

// Boundary-inclusive ellipsoid membership.
bool membership(const ConfidenceEllipsoid& set, const MatrixXd& theta);
bool membership(const ConfidenceEllipsoid& set, const SystemParams& candidate);

// One draw of the self-normalized inequality
//   || Zbar^T W ||_{V^{-1}}^2 <= 2 L^2 log( det(V)^{1/2} det(lambda I)^{-1/2} / delta )
// where the weighted norm is trace(S^T V^{-1} S), S = Zbar^T W.  Test/oracle
// use only: requires the realized noise matrix W.
struct SelfNormalizedCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};
SelfNormalizedCheck self_normalized_check(const MatrixXd& Zbar, const MatrixXd& W, double lambda,
                                          double L, double delta);

} // namespace ofusim
