#include "ofusim/estimator.hpp"

#include <cmath>
#include <vector>

namespace ofusim {

void RegressionInputs::validate() const {
    if (Zbar.rows() != Xbar.rows())
        throw DimensionMismatch("Zbar and Xbar must have the same number of rows");
    if (!(lambda > 0.0)) throw NonPositiveDefinite("ridge weight lambda must be positive");
}

MatrixXd least_squares_estimate(const RegressionInputs& in) {
    in.validate();
    if (in.Zbar.rows() == 0) return MatrixXd::Zero(in.Zbar.cols(), in.Xbar.cols());
    const MatrixXd V = covariance(in.Zbar, in.lambda);
    Eigen::LLT<MatrixXd> llt(V);
    if (llt.info() != Eigen::Success)
        throw NonPositiveDefinite("regularized Gram matrix is not SPD");
    return llt.solve(in.Zbar.transpose() * in.Xbar);
}

MatrixXd covariance(const MatrixXd& Zbar, double lambda) {
    if (!(lambda > 0.0)) throw NonPositiveDefinite("ridge weight lambda must be positive");
    const Eigen::Index p = Zbar.cols();
    MatrixXd V = lambda * MatrixXd::Identity(p, p);
    if (Zbar.rows() > 0) V.noalias() += Zbar.transpose() * Zbar;
    return V;
}

CovarianceAccumulator::CovarianceAccumulator(Eigen::Index p, double lambda)
    : V_(lambda * MatrixXd::Identity(p, p)) {
    if (!(lambda > 0.0)) throw NonPositiveDefinite("ridge weight lambda must be positive");
}

void CovarianceAccumulator::add(const VectorXd& z) {
    if (z.size() != V_.rows()) throw DimensionMismatch("regressor size does not match V");
    V_.noalias() += z * z.transpose();
    ++count_;
}

double CovarianceAccumulator::log_det() const { return log_det_spd(V_); }

double log_det_spd(const MatrixXd& V) {
    Eigen::LLT<MatrixXd> llt(V);
    if (llt.info() != Eigen::Success) throw NonPositiveDefinite("log_det of a non-SPD matrix");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double log_confidence_ratio(const MatrixXd& V, double lambda, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConstants("delta must lie in (0,1)");
    const double p = static_cast<double>(V.rows());
    return 0.5 * (log_det_spd(V) - p * std::log(lambda)) - std::log(delta);
}

double clean_radius(const MatrixXd& shape, const AttackBudget& budget, double delta, double lambda,
                    Eigen::Index n) {
    const double ratio = log_confidence_ratio(shape, lambda, delta);
    const double root = static_cast<double>(n) * budget.L * std::sqrt(2.0 * std::max(ratio, 0.0)) +
                        std::sqrt(lambda) * budget.s;
    return root * root;
}

double attacked_radius_oracle(const MatrixXd& shape, const AttackNorms& norms,
                              const AttackBudget& budget, double delta, double lambda,
                              Eigen::Index n) {
    const double ratio = log_confidence_ratio(shape, lambda, delta);
    const double rl = std::sqrt(lambda);
    const double root = static_cast<double>(n) * budget.L * std::sqrt(2.0 * std::max(ratio, 0.0)) +
                        norms.ZtH / rl + (rl + norms.ZtY / rl) * budget.s;
    return root * root;
}

double attacked_radius_oracle(const MatrixXd& shape, const MatrixXd& Zbar, const MatrixXd& H,
                              const MatrixXd& Y, const AttackBudget& budget, double delta,
                              double lambda, Eigen::Index n) {
    AttackNorms norms;
    norms.ZtH = operator_norm(Zbar.transpose() * H);
    norms.ZtY = operator_norm(Zbar.transpose() * Y);
    return attacked_radius_oracle(shape, norms, budget, delta, lambda, n);
}

double attacked_radius_apriori(const AttackBudget& budget, Eigen::Index t, double delta,
                               double lambda, Eigen::Index n, Eigen::Index m) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConstants("delta must lie in (0,1)");
    const double p = static_cast<double>(n + m);
    const double td = static_cast<double>(t);
    const double C2 = budget.C * budget.C;
    const double zsq = (1.0 + C2) * budget.X_a * budget.X_a + budget.Lambda * budget.Lambda;
    const double logarg = (p * lambda + 2.0 * td * zsq) / (p * delta * lambda);
    const double rho_z = std::sqrt(1.0 + C2) * budget.X_a + budget.Lambda;
    const double rl = std::sqrt(lambda);
    const double cross = rho_z * budget.Lambda * td / rl;
    const double root = static_cast<double>(n) * budget.L * std::sqrt(p * std::log(logarg)) +
                        cross + (rl + cross) * budget.s;
    return root * root;
}

double log_det_upper_bound(const std::vector<double>& z_norms,
                           const std::vector<double>& zeta_norms, double lambda, Eigen::Index p) {
    if (z_norms.size() != zeta_norms.size())
        throw LengthMismatch("z and zeta norm sequences differ in length");
    double mass = 0.0;
    for (std::size_t k = 0; k < z_norms.size(); ++k)
        mass += z_norms[k] * z_norms[k] + zeta_norms[k] * zeta_norms[k];
    const double pd = static_cast<double>(p);
    return pd * std::log((pd * lambda + 2.0 * mass) / pd);
}

double det_upper_bound(const std::vector<double>& z_norms, const std::vector<double>& zeta_norms,
                       double lambda, Eigen::Index p) {
    return std::exp(log_det_upper_bound(z_norms, zeta_norms, lambda, p));
}

bool membership(const ConfidenceEllipsoid& set, const MatrixXd& theta) {
    if (theta.rows() != set.center.rows() || theta.cols() != set.center.cols())
        throw DimensionMismatch("candidate Theta does not match the ellipsoid center");
    const MatrixXd d = set.center - theta;
    const double q = (d.transpose() * set.shape * d).trace();
    return q <= set.radius + 1e-12 * std::max(1.0, set.radius);
}

bool membership(const ConfidenceEllipsoid& set, const SystemParams& candidate) {
    return membership(set, candidate.theta());
}

SelfNormalizedCheck self_normalized_check(const MatrixXd& Zbar, const MatrixXd& W, double lambda,
                                          double L, double delta) {
    if (Zbar.rows() != W.rows())
        throw DimensionMismatch("Zbar and W must have the same number of rows");
    const MatrixXd V = covariance(Zbar, lambda);
    const MatrixXd S = Zbar.transpose() * W;
    Eigen::LLT<MatrixXd> llt(V);
    SelfNormalizedCheck out;
    out.lhs = (S.transpose() * llt.solve(S)).trace();
    out.rhs = 2.0 * L * L * log_confidence_ratio(V, lambda, delta);
    out.holds = out.lhs <= out.rhs;
    return out;
}

} // namespace ofusim
