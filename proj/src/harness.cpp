#include "ofusim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ofusim/rng.hpp"

namespace ofusim {

void NoiseModel::validate() const {
    if (!(sigma >= 0.0)) throw InvalidConstants("NoiseModel: sigma must be >= 0");
    if (!(L > 0.0)) throw InvalidConstants("NoiseModel: L must be > 0");
    if (L < sigma && !allow_sigma_above_L)
        throw InvalidConstants(
            "NoiseModel: sub-Gaussian scale L is below sigma, so the confidence radii "
            "would be too small for the simulated noise; set allow_sigma_above_L to force");
}

VectorXd simulate_step(const SystemParams& truth, const VectorXd& x, const VectorXd& u,
                       const VectorXd& noise) {
    if (x.size() != truth.n() || u.size() != truth.m() || noise.size() != truth.n())
        throw DimensionMismatch("simulate_step: x/u/noise sizes do not match the system");
    return truth.A * x + truth.B * u + noise;
}

double zeta_sum_oracle(const LearningDatabase& db, double lambda) {
    const Eigen::Index p = db.n() + db.m();
    MatrixXd V = lambda * MatrixXd::Identity(p, p);
    double sum = 0.0;
    for (const DbRow& row : db.rows()) {
        // weight matrix excludes the current record, as in the potential argument
        const VectorXd zeta = row.z - row.z_true;
        if (zeta.squaredNorm() > 0.0) {
            const VectorXd w = V.llt().solve(zeta);
            sum += std::min(zeta.dot(w), 0.5);
        }
        V.noalias() += row.z * row.z.transpose();
    }
    return sum;
}

EpisodeTrace run_episode(const EpisodeConfig& config) {
    const SystemParams& truth = config.true_system;
    truth.validate();
    config.noise.validate();
    if (config.horizon < 1) throw ConfigInvalid("run_episode: horizon must be >= 1");
    if (!(config.blow_up > 0.0)) throw ConfigInvalid("run_episode: blow_up must be > 0");
    const CostWeights& w = config.controller.weights;
    w.validate();
    const Eigen::Index n = truth.n();
    const Eigen::Index m = truth.m();
    if (w.Q.rows() != n || w.R.rows() != m)
        throw DimensionMismatch("run_episode: cost weights do not match the system dimensions");

    EpisodeTrace trace;
    trace.seed = config.noise.seed;
    const double sigma = config.noise.sigma;
    const double J_star =
        config.J_star ? *config.J_star : sigma * sigma * average_cost(truth, w);
    trace.J_star = J_star;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    trace.R1 = trace.R2 = trace.R3 = nan;
    trace.estimate_error_committed = nan;
    trace.estimate_error_center = nan;

    Controller ctl(n, m, config.controller);
    GaussianStream noise(config.noise.seed);
    const MatrixXd theta_true = truth.theta();

    trace.membership_tracked = config.track_membership;
    CovarianceAccumulator V_acc(n + m, config.controller.lambda);
    MatrixXd S_acc = MatrixXd::Zero(n + m, n);
    AttackBudget clean_budget;
    clean_budget.L = config.controller.L;
    clean_budget.s = config.controller.s;

    VectorXd x = VectorXd::Zero(n);
    double cum = 0.0;
    trace.steps.reserve(static_cast<std::size_t>(config.horizon));
    trace.cum_regret.reserve(static_cast<std::size_t>(config.horizon));

    try {
        for (Eigen::Index t = 0; t < config.horizon; ++t) {
            const bool switched = ctl.maybe_switch();
            const ControllerState& st = ctl.state();
            if (switched) {
                SwitchSnapshot snap;
                snap.t = t;
                snap.theta = SystemParams::from_theta(st.theta_tilde, n, config.controller.s);
                snap.J = st.J_tilde;
                snap.beta = st.set.radius;
                snap.center = st.set.center;
                snap.member = membership(st.set, theta_true);
                trace.membership_at_switches = trace.membership_at_switches && snap.member;
                trace.switches.push_back(std::move(snap));
            }
            const VectorXd u = ctl.act(x);
            const double cost = x.dot(w.Q * x) + u.dot(w.R * u);
            const VectorXd omega = sigma * noise.vector(n);
            const VectorXd x_next = simulate_step(truth, x, u, omega);

            StepRecord rec;
            rec.x = x;
            rec.u = u;
            rec.cost = cost;
            rec.switched = switched;
            rec.beta = st.set.radius;
            trace.steps.push_back(std::move(rec));
            cum += cost - J_star;
            trace.cum_regret.push_back(cum);

            ctl.observe(x, u, x_next);
            trace.X_max = std::max({trace.X_max, x.norm(), x_next.norm()});

            if (config.track_membership) {
                VectorXd z(n + m);
                z << x, u;
                V_acc.add(z);
                S_acc.noalias() += z * x_next.transpose();
                ConfidenceEllipsoid set;
                set.shape = V_acc.V();
                set.center = set.shape.llt().solve(S_acc);
                set.delta = config.controller.delta;
                set.radius =
                    clean_radius(set.shape, clean_budget, set.delta, config.controller.lambda, n);
                if (!membership(set, theta_true)) trace.membership_all_steps = false;
            }

            if (x_next.norm() > config.blow_up) {
                trace.aborted = true;
                trace.abort_step = t + 1;
                trace.abort_reason = "state norm exceeded the blow-up threshold";
                break;
            }
            x = x_next;
        }
    } catch (const Error& e) {
        trace.aborted = true;
        trace.abort_step = static_cast<Eigen::Index>(trace.steps.size());
        trace.abort_reason = e.what();
    }

    // Terminal diagnostics over the final database contents.  The attack is
    // applied lazily, so bring the stored records up to date first.
    const ControllerConfig& cc = ctl.config();
    LearningDatabase& db = ctl.database();
    if (cc.attack.mode != AttackMode::none && db.now() > 0) db.apply_attack(cc.attack);
    if (db.now() > 0) {
        const double lambda = cc.lambda;
        const RegressionInputs stored = db.materialize(lambda);
        const RegressionInputs clean = db.true_inputs_oracle(lambda);
        const MatrixXd V_stored = covariance(stored.Zbar, lambda);
        const MatrixXd V_true = covariance(clean.Zbar, lambda);
        trace.log_det_V_stored = log_det_spd(V_stored);
        trace.log_det_V_true = log_det_spd(V_true);
        const LearningDatabase::AttackMatrices am = db.attack_matrices_oracle();
        double lam_real = 0.0;
        for (Eigen::Index k = 0; k < am.H.rows(); ++k)
            lam_real = std::max({lam_real, am.H.row(k).norm(), am.Y.row(k).norm()});
        trace.lambda_realized = lam_real;
        const double d4 = cc.delta / 4.0;
        trace.beta_clean_final = clean_radius(V_true, clean_budget, d4, lambda, n);
        trace.beta_attacked_final =
            attacked_radius_oracle(V_stored, stored.Zbar, am.H, am.Y, clean_budget, d4, lambda, n);
        trace.zeta_sum = zeta_sum_oracle(db, lambda);
        std::vector<double> z_norms;
        std::vector<double> zeta_norms;
        for (const DbRow& row : db.rows()) {
            z_norms.push_back(row.z.norm());
            zeta_norms.push_back((row.z - row.z_true).norm());
        }
        trace.log_det_upper = log_det_upper_bound(z_norms, zeta_norms, lambda, n + m);
    }
    if (config.keep_database) trace.db = std::make_shared<LearningDatabase>(db);
    trace.failed_switches = ctl.state().failed_switches;
    if (!trace.switches.empty()) {
        trace.estimate_error_committed = operator_norm(trace.switches.back().theta.A - truth.A);
        const MatrixXd& center = ctl.state().set.center;
        if (center.size() > 0) {
            const MatrixXd A_hat = center.topRows(n).transpose();
            trace.estimate_error_center = operator_norm(A_hat - truth.A);
        }
    }
    if (!trace.aborted && !trace.switches.empty()) {
        try {
            RiccatiCache cache(w);
            const RegretDecomposition d = regret_decomposition(trace, truth, cache);
            trace.R1 = d.R1;
            trace.R2 = d.R2;
            trace.R3 = d.R3;
        } catch (const Error&) {
            // decomposition is a diagnostic; the trace stands without it
        }
    }
    return trace;
}

std::vector<double> empirical_regret(const std::vector<EpisodeTrace>& traces, double J_star) {
    if (traces.empty()) return {};
    const std::size_t T = traces.front().steps.size();
    for (const EpisodeTrace& tr : traces)
        if (tr.steps.size() != T)
            throw LengthMismatch("empirical_regret: traces have different lengths");
    std::vector<double> out(T, 0.0);
    double cum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        double mean = 0.0;
        for (const EpisodeTrace& tr : traces) mean += tr.steps[t].cost;
        mean /= static_cast<double>(traces.size());
        cum += mean - J_star;
        out[t] = cum;
    }
    return out;
}

const RiccatiSolution& RiccatiCache::solution_for(const SystemParams& params) {
    const MatrixXd theta = params.theta();
    for (const auto& entry : entries_) {
        const MatrixXd& key = entry.first;
        if (key.rows() == theta.rows() && key.cols() == theta.cols() &&
            (key.array() == theta.array()).all())
            return entry.second;
    }
    entries_.emplace_back(theta, solve_dare(params, w_));
    return entries_.back().second;
}

RegretDecomposition regret_decomposition(const EpisodeTrace& trace, const SystemParams& truth,
                                         RiccatiCache& cache) {
    RegretDecomposition out;
    const std::size_t N = trace.steps.size();
    if (N == 0) return out;
    if (trace.switches.empty() || trace.switches.front().t > 0)
        throw MissingSnapshot(
            "regret_decomposition: no committed parameters recorded for the first steps");

    std::vector<const SwitchSnapshot*> at(N, nullptr);
    std::size_t k = 0;
    for (std::size_t t = 0; t < N; ++t) {
        while (k + 1 < trace.switches.size() &&
               static_cast<std::size_t>(trace.switches[k + 1].t) <= t)
            ++k;
        at[t] = &trace.switches[k];
    }

    // P in force per step; the horizon carries the last value since no switch
    // happens there.  Copies, because the cache may reallocate while filling.
    std::vector<MatrixXd> P(N + 1);
    for (std::size_t t = 0; t < N; ++t) P[t] = cache.solution_for(at[t]->theta).P;
    P[N] = P[N - 1];

    for (std::size_t t = 0; t < N; ++t) {
        const VectorXd& x = trace.steps[t].x;
        const VectorXd& u = trace.steps[t].u;
        const VectorXd pred_true = truth.A * x + truth.B * u;
        const VectorXd pred_opt = at[t]->theta.A * x + at[t]->theta.B * u;
        out.R1 += x.dot(P[t] * x) - pred_true.dot(P[t + 1] * pred_true);
        out.R2 += pred_true.dot((P[t] - P[t + 1]) * pred_true);
        out.R3 += pred_opt.dot(P[t] * pred_opt) - pred_true.dot(P[t + 1] * pred_true);
    }
    return out;
}

ExponentFit fit_regret_exponent(const std::vector<double>& curve, double burn_in) {
    if (!(burn_in >= 0.0 && burn_in < 1.0))
        throw ConfigInvalid("fit_regret_exponent: burn_in must lie in [0, 1)");
    const std::size_t T = curve.size();
    const std::size_t start = static_cast<std::size_t>(burn_in * static_cast<double>(T));
    if (T < 2 || start >= T) throw DegenerateCurve("fit_regret_exponent: curve too short");

    const std::size_t window = T - start;
    std::size_t usable = 0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = start; i < T; ++i) {
        if (!(curve[i] > 0.0)) continue;
        const double lx = std::log(static_cast<double>(i + 1));
        const double ly = std::log(curve[i]);
        ++usable;
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    if (usable < 2 || 2 * usable <= window)
        throw DegenerateCurve("fit_regret_exponent: nonpositive regret dominates the fit window");
    const double nd = static_cast<double>(usable);
    const double denom = nd * sxx - sx * sx;
    if (!(std::abs(denom) > 0.0))
        throw DegenerateCurve("fit_regret_exponent: no spread in the fit window");

    ExponentFit fit;
    fit.exponent = (nd * sxy - sx * sy) / denom;
    fit.coefficient = std::exp((sy - fit.exponent * sx) / nd);
    fit.points = static_cast<Eigen::Index>(usable);
    return fit;
}

BatchSummary aggregate(const std::vector<EpisodeTrace>& traces) {
    BatchSummary s;
    s.episodes = static_cast<int>(traces.size());

    std::vector<const EpisodeTrace*> order;
    order.reserve(traces.size());
    for (const EpisodeTrace& t : traces) order.push_back(&t);
    std::sort(order.begin(), order.end(),
              [](const EpisodeTrace* a, const EpisodeTrace* b) { return a->run_index < b->run_index; });

    std::vector<const EpisodeTrace*> done;
    for (const EpisodeTrace* t : order) {
        ++s.switch_histogram[static_cast<int>(t->switches.size())];
        if (t->aborted) {
            ++s.aborted;
            s.abort_reasons.push_back("run " + std::to_string(t->run_index) + ": " +
                                      t->abort_reason);
        } else {
            done.push_back(t);
        }
    }
    if (done.empty()) return s;

    const std::size_t T = done.front()->cum_regret.size();
    for (const EpisodeTrace* t : done)
        if (t->cum_regret.size() != T)
            throw LengthMismatch("aggregate: completed traces differ in length");
    s.mean_regret.assign(T, 0.0);
    s.max_regret.assign(T, -std::numeric_limits<double>::infinity());
    s.min_regret.assign(T, std::numeric_limits<double>::infinity());
    for (const EpisodeTrace* t : done) {
        for (std::size_t i = 0; i < T; ++i) {
            s.mean_regret[i] += t->cum_regret[i];
            s.max_regret[i] = std::max(s.max_regret[i], t->cum_regret[i]);
            s.min_regret[i] = std::min(s.min_regret[i], t->cum_regret[i]);
        }
    }
    const double count = static_cast<double>(done.size());
    for (double& v : s.mean_regret) v /= count;
    return s;
}

BatchResult monte_carlo(const EpisodeConfig& config, int n_runs, std::uint64_t base_seed) {
    if (n_runs < 1) throw ConfigInvalid("monte_carlo: n_runs must be >= 1");
    BatchResult out;
    out.traces.reserve(static_cast<std::size_t>(n_runs));
    for (int i = 0; i < n_runs; ++i) {
        EpisodeConfig cfg = config;
        const std::uint64_t idx = static_cast<std::uint64_t>(i);
        cfg.noise.seed = derive_seed(base_seed, 3 * idx);
        cfg.controller.ofu.seed = derive_seed(base_seed, 3 * idx + 1);
        cfg.controller.attack.seed = derive_seed(base_seed, 3 * idx + 2);
        EpisodeTrace tr = run_episode(cfg);
        tr.run_index = i;
        out.traces.push_back(std::move(tr));
    }
    out.summary = aggregate(out.traces);
    return out;
}

} // namespace ofusim
