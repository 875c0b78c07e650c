#include "ofusim/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "ofusim/rng.hpp"

namespace ofusim {

void BoundConstants::validate() const {
    if (!(D > 0.0) || !(C > 0.0) || !std::isfinite(D) || !std::isfinite(C))
        throw InvalidConstants("D and C must be finite and positive");
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidConstants("rho must lie in (0,1)");
    if (!(eta_spec > 0.0)) throw InvalidConstants("eta_spec must be positive");
    if (!(nu > 0.0) || !(U0 > 0.0) || !(Hc > 0.0) || !(G > 0.0))
        throw InvalidConstants("auxiliary constants must be positive");
}

void fill_aux_constants(BoundConstants& c, Eigen::Index p, double s) {
    const double pd = static_cast<double>(p);
    const double S = s;
    c.U0 = 1.0 / (std::pow(16.0, pd - 2.0) * std::max(1.0, std::pow(S, 2.0 * (pd - 2.0))));
    c.Hc = std::max(16.0, 4.0 * S * S * c.M * c.M / (pd * c.U0));
    const double U = c.U0 / c.Hc;
    c.G = 2.0 * std::pow(2.0 * S * std::pow(pd, pd + 0.5) / std::sqrt(U), 1.0 / (pd + 1.0));
}

BoundConstants derive_constants(const SystemParams& true_sys, const CostWeights& w, double s,
                                int samples, std::uint64_t seed) {
    true_sys.validate();
    w.validate();
    const Eigen::Index n = true_sys.n();
    const Eigen::Index m = true_sys.m();
    const Eigen::Index p = n + m;

    BoundConstants c;
    c.M = s;
    c.nu = 1.0;
    fill_aux_constants(c, p, s);

    GaussianStream rng(derive_seed(seed, 0xb0755ULL));
    double D = 0.0, C = 0.0, rho = 0.0, eta = 0.0;
    int used = 0;
    for (int k = 0; k < samples; ++k) {
        // uniform direction, radius biased toward the boundary where the
        // suprema live
        MatrixXd theta(p, n);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < n; ++j) theta(i, j) = rng.next();
        const double nrm = std::sqrt((theta.transpose() * theta).trace());
        if (nrm == 0.0) continue;
        const double r = s * std::sqrt(rng.uniform01());
        theta *= r / nrm;
        SystemParams sys = SystemParams::from_theta(theta, n, s);
        if (!check_admissible(sys, w, s)) continue;
        try {
            const RiccatiSolution sol = solve_dare(sys, w);
            D = std::max(D, operator_norm(sol.P));
            C = std::max(C, operator_norm(sol.K));
            rho = std::max(rho, sol.closed_loop_norm);
            eta = std::max(eta, operator_norm(true_sys.A + true_sys.B * sol.K));
            ++used;
        } catch (const NonConvergent&) {
            // boundary draws without a stabilizing solution don't contribute
        }
    }
    // the true parameters always participate in the suprema
    const RiccatiSolution star = solve_dare(true_sys, w);
    D = std::max(D, operator_norm(star.P));
    C = std::max(C, operator_norm(star.K));
    rho = std::max(rho, star.closed_loop_norm);
    eta = std::max(eta, operator_norm(true_sys.A + true_sys.B * star.K));

    c.D = D;
    c.C = C;
    c.rho = std::min(rho, 0.99); // keep 1/(1-rho) finite
    c.eta_spec = std::max(eta, 1e-12);
    c.method = "randomized sweep, " + std::to_string(used) + " admissible samples";
    c.validate();
    return c;
}

namespace {

// B' constant of the R1 bound; shared by both kinds with the appropriate X.
// The free constants nu and v are both taken as consts.nu.
double b_prime(const BoundConstants& c, Eigen::Index T, double delta, double X, double s,
               Eigen::Index n) {
    const double mass = c.nu + static_cast<double>(T) * c.D * c.D * s * s * X * X *
                                   (1.0 + c.C * c.C);
    const double n_term = 4.0 * static_cast<double>(n) / (delta * std::sqrt(c.nu));
    return mass * std::log(n_term * std::sqrt(mass));
}

} // namespace

double theoretical_bound(BoundKind kind, const BoundConstants& consts,
                         const RealizedQuantities& realized, Eigen::Index T, double delta,
                         double lambda, Eigen::Index n, Eigen::Index m) {
    consts.validate();
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConstants("delta must lie in (0,1)");
    const double Td = static_cast<double>(T);
    const double nd = static_cast<double>(n);
    const double pd = static_cast<double>(n + m);
    const double X2 = realized.X * realized.X;
    const double C2 = consts.C * consts.C;
    const double L2 = realized.Lambda_T * realized.Lambda_T;
    const double s = consts.M; // M defaults to the ball radius s

    // sub-Gaussian envelope W; the attacked analysis pays an extra log T
    const double W = (kind == BoundKind::clean)
                         ? consts.L * nd *
                               std::sqrt(2.0 * nd * std::log(8.0 * nd / delta))
                         : consts.L * nd *
                               std::sqrt(2.0 * nd * std::log(8.0 * nd * Td / delta));

    const double term1 = 2.0 * consts.D * W * W * std::sqrt(2.0 * Td * std::log(8.0 / delta));
    const double term2 = nd * std::sqrt(b_prime(consts, T, delta, realized.X, s, n));

    const double switch_mass =
        (kind == BoundKind::clean) ? X2 * (1.0 + C2) : X2 * (1.0 + C2) + L2;
    const double term3 =
        2.0 * consts.D * X2 * pd * std::log2(1.0 + (2.0 * Td / lambda) * switch_mass);

    const double log_ratio = realized.log_det_V - pd * std::log(lambda);
    double term4;
    if (kind == BoundKind::clean) {
        term4 = (8.0 / std::sqrt(lambda)) * ((1.0 + C2) * X2) * s * consts.D *
                std::sqrt(std::max(realized.beta_T, 0.0)) *
                std::sqrt(std::max(log_ratio, 0.0)) * std::sqrt(Td);
    } else {
        const double zeta_sum = realized.zeta_sum >= 0.0 ? realized.zeta_sum : Td / 2.0;
        term4 = (8.0 / std::sqrt(lambda)) * ((1.0 + C2) * X2 + L2) * s * consts.D *
                std::sqrt(std::max(realized.beta_T, 0.0)) *
                std::sqrt(std::max(2.0 * log_ratio + zeta_sum, 0.0)) * std::sqrt(Td);
    }
    return term1 + term2 + term3 + term4;
}

double state_bound_alpha(const BoundConstants& consts, double beta_a, double Z_a, double Lambda,
                         Eigen::Index t, double delta, Eigen::Index n, Eigen::Index m) {
    consts.validate();
    if (!(consts.rho < 1.0)) throw InvalidConstants("rho must be < 1");
    const double pd = static_cast<double>(n + m);
    const double nd = static_cast<double>(n);
    const double td = static_cast<double>(std::max<Eigen::Index>(t, 1));
    // the geometric prefactor needs eta >= rho to be meaningful
    const double eta_eff = std::max(consts.eta_spec, consts.rho);
    const double prefactor =
        (1.0 / (1.0 - consts.rho)) * std::pow(eta_eff / consts.rho, pd);
    const double s = consts.M;
    const double drift = 2.0 * s * Lambda +
                         consts.G * std::pow(Z_a + Lambda, pd / (pd + 1.0)) *
                             std::pow(std::max(beta_a, 0.0), 1.0 / (2.0 * (pd + 1.0)));
    const double noise =
        2.0 * consts.L * std::sqrt(nd * std::log(4.0 * nd * td * (td + 1.0) / delta));
    return prefactor * (drift + noise);
}

double switch_bound(Eigen::Index T, double lambda, double X_a, double C, double Lambda,
                    Eigen::Index n, Eigen::Index m) {
    const double pd = static_cast<double>(n + m);
    const double mass = X_a * X_a * (1.0 + C * C) + Lambda * Lambda;
    return pd * std::log2(1.0 + (2.0 * static_cast<double>(T) / lambda) * mass);
}

} // namespace ofusim
