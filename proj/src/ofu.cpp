#include "ofusim/ofu.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "ofusim/rng.hpp"

namespace ofusim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MatrixXd unflatten(const VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const MatrixXd>(v.data(), rows, cols);
}

VectorXd flatten(const MatrixXd& M) {
    return Eigen::Map<const VectorXd>(M.data(), M.size());
}

// Objective with warm-started DARE solves; parameters where the DARE fails
// evaluate to +inf so the line search simply rejects them.
class Objective {
public:
    Objective(const CostWeights& w, double s) : w_(w), s_(s) {}

    double operator()(const MatrixXd& theta) {
        SystemParams sys;
        try {
            sys = SystemParams::from_theta(theta, w_.Q.rows(), s_);
        } catch (const Error&) {
            return kInf;
        }
        DareOptions opts;
        opts.P0 = last_P_;
        try {
            RiccatiSolution sol = solve_dare(sys, w_, opts);
            last_P_ = sol.P;
            return sol.J;
        } catch (const Error&) {
            if (last_P_.size() != 0) {
                // retry cold in case the warm start poisoned the iteration
                try {
                    RiccatiSolution sol = solve_dare(sys, w_, {});
                    last_P_ = sol.P;
                    return sol.J;
                } catch (const Error&) {
                }
            }
            return kInf;
        }
    }

private:
    CostWeights w_;
    double s_;
    MatrixXd last_P_;
};

VectorXd fd_gradient(Objective& f, const MatrixXd& theta, double eps) {
    const VectorXd x = flatten(theta);
    VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        VectorXd xp = x, xm = x;
        xp(i) += eps;
        xm(i) -= eps;
        const double fp = f(unflatten(xp, theta.rows(), theta.cols()));
        const double fm = f(unflatten(xm, theta.rows(), theta.cols()));
        if (std::isfinite(fp) && std::isfinite(fm)) {
            g(i) = (fp - fm) / (2.0 * eps);
        } else {
            // one-sided fallback near the stabilizability boundary
            const double f0 = f(theta);
            if (std::isfinite(fp))
                g(i) = (fp - f0) / eps;
            else if (std::isfinite(fm))
                g(i) = (f0 - fm) / eps;
            else
                g(i) = 0.0;
        }
    }
    return g;
}

MatrixXd fd_hessian(Objective& f, const MatrixXd& theta, double eps) {
    const VectorXd x = flatten(theta);
    const Eigen::Index d = x.size();
    MatrixXd H(d, d);
    const double f0 = f(theta);
    auto eval = [&](const VectorXd& v) { return f(unflatten(v, theta.rows(), theta.cols())); };
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i; j < d; ++j) {
            double hij;
            if (i == j) {
                VectorXd xp = x, xm = x;
                xp(i) += eps;
                xm(i) -= eps;
                hij = (eval(xp) - 2.0 * f0 + eval(xm)) / (eps * eps);
            } else {
                VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
                xpp(i) += eps;
                xpp(j) += eps;
                xpm(i) += eps;
                xpm(j) -= eps;
                xmp(i) -= eps;
                xmp(j) += eps;
                xmm(i) -= eps;
                xmm(j) -= eps;
                hij = (eval(xpp) - eval(xpm) - eval(xmp) + eval(xmm)) / (4.0 * eps * eps);
            }
            if (!std::isfinite(hij)) hij = 0.0;
            H(i, j) = hij;
            H(j, i) = hij;
        }
    }
    return H;
}

} // namespace

MatrixXd trace_p_gradient(const SystemParams& params, const CostWeights& w, double fd_eps) {
    const MatrixXd theta = params.theta();
    for (double eps : {fd_eps, 0.5 * fd_eps}) {
        bool ok = true;
        VectorXd g(theta.size());
        const VectorXd x = flatten(theta);
        for (Eigen::Index i = 0; i < x.size() && ok; ++i) {
            VectorXd xp = x, xm = x;
            xp(i) += eps;
            xm(i) -= eps;
            try {
                const CostWeights& wc = w;
                const double fp = average_cost(
                    SystemParams::from_theta(unflatten(xp, theta.rows(), theta.cols()),
                                             params.n(), params.s),
                    wc);
                const double fm = average_cost(
                    SystemParams::from_theta(unflatten(xm, theta.rows(), theta.cols()),
                                             params.n(), params.s),
                    wc);
                g(i) = (fp - fm) / (2.0 * eps);
            } catch (const NonConvergent&) {
                ok = false; // shrink the step once, then propagate
            }
        }
        if (ok) return unflatten(g, theta.rows(), theta.cols());
    }
    throw NonConvergent("DARE failed at finite-difference probe points");
}

MatrixXd trace_p_hessian(const SystemParams& params, const CostWeights& w, double fd_eps) {
    Objective f(w, params.s);
    const MatrixXd theta = params.theta();
    for (double eps : {fd_eps, 0.5 * fd_eps}) {
        MatrixXd H = fd_hessian(f, theta, eps);
        if (H.allFinite()) return H;
    }
    throw NonConvergent("DARE failed at finite-difference probe points");
}

MatrixXd project_to_confidence(const MatrixXd& candidate, const ConfidenceEllipsoid& set) {
    const MatrixXd D = candidate - set.center;
    const double q = (D.transpose() * set.shape * D).trace();
    if (q <= set.radius || q == 0.0) return candidate;
    return set.center + D * std::sqrt(set.radius / q);
}

SystemParams project_to_confidence(const SystemParams& candidate, const ConfidenceEllipsoid& set) {
    return SystemParams::from_theta(project_to_confidence(candidate.theta(), set), candidate.n(),
                                    candidate.s);
}

SystemParams project_to_admissible(const SystemParams& candidate, double s, const CostWeights& w) {
    SystemParams out =
        SystemParams::from_theta(project_to_ball(candidate.theta(), s), candidate.n(), s);
    if (check_admissible(out, w, s)) return out;
    // a rank fluke (e.g. an exactly-zero B) gets one nudge before we give up
    SystemParams nudged = out;
    nudged.B.array() += 1e-8;
    if (check_admissible(nudged, w, s)) return nudged;
    throw Inadmissible("candidate remains inadmissible after perturbing B");
}

OfuResult select_optimistic(const ConfidenceEllipsoid& set, const CostWeights& w, double s,
                            Eigen::Index t, const OfuConfig& cfg, const MatrixXd* warm_start) {
    w.validate();
    if (cfg.steps < 1 || !(cfg.step_size > 0.0) || !(cfg.fd_eps > 0.0))
        throw ConfigInvalid("ofu: steps >= 1, step_size > 0 and fd_eps > 0 required");
    const Eigen::Index rows = set.center.rows();
    const Eigen::Index cols = set.center.cols();
    const Eigen::Index n = cols;
    Objective f(w, s);
    GaussianStream rng(derive_seed(cfg.seed, 0xf0f0f0f0ULL));
    const double slack = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(t, 1)));

    // Feasible-set landing: alternate the two (convex) projections, then
    // demand the ellipsoid constraint really holds -- when the set misses the
    // admissible ball entirely the alternation stalls at the closest-pair
    // points and the residual stays large.  Rejected candidates are signalled
    // by an empty matrix.
    auto land = [&](MatrixXd theta) -> MatrixXd {
        for (int i = 0; i < 30; ++i) {
            theta = project_to_confidence(theta, set);
            theta = project_to_ball(theta, s);
        }
        const MatrixXd D = theta - set.center;
        const double q = (D.transpose() * set.shape * D).trace();
        if (q > set.radius + 1e-6 * std::max(1.0, set.radius)) return MatrixXd();
        try {
            return project_to_admissible(SystemParams::from_theta(theta, n, s), s, w).theta();
        } catch (const Inadmissible&) {
            return MatrixXd();
        }
    };

    Eigen::LLT<MatrixXd> llt(set.shape);
    if (llt.info() != Eigen::Success)
        throw NonPositiveDefinite("confidence ellipsoid shape must be SPD");
    const MatrixXd Lt = MatrixXd(llt.matrixL()).transpose();
    const MatrixXd Lt_inv =
        Lt.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(rows, rows));

    std::vector<MatrixXd> starts;
    starts.push_back(land(set.center));
    if (warm_start && warm_start->rows() == rows && warm_start->cols() == cols)
        starts.push_back(land(*warm_start));
    while (static_cast<int>(starts.size()) < cfg.restarts) {
        MatrixXd G(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) G(i, j) = rng.next();
        const double q = G.squaredNorm();
        MatrixXd D = Lt_inv * G;
        if (q > 0.0) D *= std::sqrt(set.radius * rng.uniform01() / q);
        starts.push_back(land(set.center + D));
    }

    MatrixXd best_theta;
    double best_J = kInf;
    int best_iters = 0;
    for (const MatrixXd& start : starts) {
        if (start.size() == 0) continue;
        MatrixXd theta = start;
        double J = f(theta);
        int it = 0;
        if (std::isfinite(J)) {
            for (; it < cfg.steps; ++it) {
                const VectorXd g = fd_gradient(f, theta, cfg.fd_eps);
                MatrixXd H = fd_hessian(f, theta, cfg.fd_eps);
                const double hmax = H.cwiseAbs().maxCoeff();
                H.diagonal().array() += cfg.hessian_regularization * std::max(hmax, 1.0);

                VectorXd dir;
                Eigen::LLT<MatrixXd> hllt(H);
                if (hllt.info() == Eigen::Success) {
                    dir = -hllt.solve(g);
                } else {
                    dir = -g; // indefinite curvature: steepest descent
                }

                double alpha = cfg.step_size;
                MatrixXd accepted;
                double J_new = J;
                for (int h = 0; h < 20; ++h) {
                    const MatrixXd cand = land(theta + alpha * unflatten(dir, rows, cols));
                    if (cand.size() != 0) {
                        const double Jc = f(cand);
                        if (Jc < J) {
                            accepted = cand;
                            J_new = Jc;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if (accepted.size() == 0) break; // no descent left
                const double step = (accepted - theta).norm();
                const double gain = J - J_new;
                theta = accepted;
                J = J_new;
                if (step <= 1e-10 * std::max(1.0, theta.norm()) && gain <= 1e-2 * slack) break;
            }
        }
        if (J < best_J) {
            best_J = J;
            best_theta = theta;
            best_iters = it;
        }
    }

    if (!std::isfinite(best_J))
        throw NoFeasiblePoint("no admissible stabilizing parameter inside the confidence set");
    OfuResult out;
    out.params = SystemParams::from_theta(best_theta, n, s);
    out.J = best_J;
    out.iterations = best_iters;
    return out;
}

} // namespace ofusim
