#include "ofusim/lqr.hpp"

#include <cmath>
#include <string>

namespace ofusim {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw DimensionMismatch(what);
}

bool is_symmetric(const MatrixXd& M, double tol = 1e-12) {
    return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, M.cwiseAbs().maxCoeff());
}

} // namespace

MatrixXd SystemParams::theta() const {
    MatrixXd th(n() + m(), n());
    th.topRows(n()) = A.transpose();
    th.bottomRows(m()) = B.transpose();
    return th;
}

SystemParams SystemParams::from_theta(const MatrixXd& theta, Eigen::Index n, double s) {
    if (theta.cols() != n || theta.rows() <= n)
        throw DimensionMismatch("from_theta: need (n+m) x n with m >= 1");
    SystemParams sys;
    sys.A = theta.topRows(n).transpose();
    sys.B = theta.bottomRows(theta.rows() - n).transpose();
    sys.s = s;
    return sys;
}

void SystemParams::validate() const {
    require(A.rows() == A.cols(), "A must be square");
    require(B.rows() == A.rows(), "B row count must match state dimension");
    require(B.cols() >= 1, "B must have at least one column");
    if (!(s > 0.0)) throw DimensionMismatch("parameter ball radius s must be positive");
}

void CostWeights::validate() const {
    require(Q.rows() == Q.cols(), "Q must be square");
    require(R.rows() == R.cols(), "R must be square");
    if (!is_symmetric(Q) || !is_symmetric(R))
        throw NonPositiveDefinite("cost weights must be symmetric");
    Eigen::LLT<MatrixXd> lq(Q), lr(R);
    if (lq.info() != Eigen::Success || lr.info() != Eigen::Success)
        throw NonPositiveDefinite("cost weights must be positive definite");
}

double spectral_radius(const MatrixXd& M) {
    Eigen::EigenSolver<MatrixXd> es(M, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double operator_norm(const MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    return Eigen::JacobiSVD<MatrixXd>(M).singularValues()(0);
}

MatrixXd symmetric_sqrt(const MatrixXd& Q) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Q);
    if (es.info() != Eigen::Success) throw NonPositiveDefinite("eigendecomposition failed");
    VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-12) throw NonPositiveDefinite("matrix square root of an indefinite matrix");
        ev(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

RiccatiSolution solve_dare(const MatrixXd& A, const MatrixXd& B, const CostWeights& w,
                           const DareOptions& opts) {
    const Eigen::Index n = A.rows();
    require(A.cols() == n, "A must be square");
    require(B.rows() == n, "B row count must match A");
    require(w.Q.rows() == n, "Q dimension must match A");
    require(w.R.rows() == B.cols(), "R dimension must match B");
    if (!(opts.tol > 0.0) || opts.max_iter < 1)
        throw NonConvergent("solve_dare needs tol > 0 and max_iter >= 1");

    MatrixXd P = (opts.P0.size() != 0) ? opts.P0 : w.Q;
    bool converged = false;
    for (int it = 0; it < opts.max_iter; ++it) {
        const MatrixXd PA = P * A;
        const MatrixXd G = B.transpose() * P * B + w.R; // m x m, SPD for P >= 0
        Eigen::LLT<MatrixXd> llt(G);
        if (llt.info() != Eigen::Success)
            throw NonPositiveDefinite("B^T P B + R lost positive definiteness");
        MatrixXd Pn = w.Q + A.transpose() * PA - PA.transpose() * B * llt.solve(B.transpose() * PA);
        Pn = 0.5 * (Pn + Pn.transpose()); // keep symmetric against drift
        const double delta = (Pn - P).cwiseAbs().maxCoeff();
        P = Pn;
        if (P.cwiseAbs().maxCoeff() > 1e100)
            throw NonConvergent("DARE iterates diverge (non-stabilizable parameters)");
        if (delta < opts.tol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NonConvergent("DARE fixed-point iteration did not converge");

    const MatrixXd G = B.transpose() * P * B + w.R;
    RiccatiSolution sol;
    sol.P = P;
    sol.K = -Eigen::LLT<MatrixXd>(G).solve(B.transpose() * P * A);
    sol.J = P.trace();
    const MatrixXd closed = A + B * sol.K;
    sol.closed_loop_norm = operator_norm(closed);
    sol.closed_loop_spectral_radius = spectral_radius(closed);
    return sol;
}

RiccatiSolution solve_dare(const SystemParams& sys, const CostWeights& w, const DareOptions& opts) {
    return solve_dare(sys.A, sys.B, w, opts);
}

double average_cost(const SystemParams& sys, const CostWeights& w, const DareOptions& opts) {
    return solve_dare(sys, w, opts).J;
}

namespace {

bool full_rank(const MatrixXd& M, Eigen::Index want) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(M);
    qr.setThreshold(1e-10);
    return qr.rank() >= want;
}

bool controllable(const MatrixXd& A, const MatrixXd& B) {
    const Eigen::Index n = A.rows();
    MatrixXd ctrb(n, n * B.cols());
    MatrixXd AkB = B;
    for (Eigen::Index k = 0; k < n; ++k) {
        ctrb.middleCols(k * B.cols(), B.cols()) = AkB;
        AkB = A * AkB;
    }
    return full_rank(ctrb, n);
}

bool observable(const MatrixXd& A, const MatrixXd& M) {
    const Eigen::Index n = A.rows();
    MatrixXd obsv(n * M.rows(), n);
    MatrixXd MAk = M;
    for (Eigen::Index k = 0; k < n; ++k) {
        obsv.middleRows(k * M.rows(), M.rows()) = MAk;
        MAk = MAk * A;
    }
    return full_rank(obsv, n);
}

} // namespace

bool check_admissible(const SystemParams& sys, const CostWeights& w, double s) {
    sys.validate();
    w.validate();
    if (!(s > 0.0)) return false;
    const MatrixXd th = sys.theta();
    if ((th.transpose() * th).trace() > s * s * (1.0 + 1e-12)) return false;
    if (!controllable(sys.A, sys.B)) return false;
    return observable(sys.A, symmetric_sqrt(w.Q));
}

bool check_admissible(const SystemParams& sys, const CostWeights& w) {
    return check_admissible(sys, w, sys.s);
}

MatrixXd project_to_ball(const MatrixXd& theta, double s) {
    const double tr = (theta.transpose() * theta).trace();
    if (tr <= s * s || tr == 0.0) return theta;
    return theta * (s / std::sqrt(tr));
}

} // namespace ofusim
