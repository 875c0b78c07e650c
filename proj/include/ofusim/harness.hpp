#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ofusim/bounds.hpp"
#include "ofusim/controller.hpp"
#include "ofusim/errors.hpp"

namespace ofusim {

// Gaussian process noise with per-component standard deviation sigma.  The
// sub-Gaussian scale L used by the confidence radii travels with the model so
// that sigma > L (radii too small for the actual noise) cannot happen
// silently; set allow_sigma_above_L to study that mismatch deliberately.
struct NoiseModel {
    double sigma = 0.1;
    double L = 0.1;
    std::uint64_t seed = 0;
    bool allow_sigma_above_L = false;

    void validate() const; // throws InvalidConstants
};

// One simulated step: the state and input the controller actually saw, the
// realized stage cost, and the confidence radius in force.
struct StepRecord {
    VectorXd x;
    VectorXd u;
    double cost = 0.0;
    bool switched = false;
    double beta = 0.0;
};

// Policy recomputation event: the committed optimistic parameters and the
// confidence set they were drawn from.
struct SwitchSnapshot {
    Eigen::Index t = 0;
    SystemParams theta;      // committed optimistic parameters
    double J = 0.0;          // trace(P(theta)), unit-covariance convention
    double beta = 0.0;       // radius of the set in force
    MatrixXd center;         // estimate the set was built around
    bool member = false;     // true parameters inside that set
};

// Full record of one closed-loop episode plus the terminal diagnostics the
// bound evaluations consume.
struct EpisodeTrace {
    int run_index = 0;
    std::uint64_t seed = 0;

    std::vector<StepRecord> steps;
    std::vector<SwitchSnapshot> switches;
    std::vector<double> cum_regret; // realized sum of (cost - J_star)
    double J_star = 0.0;

    double X_max = 0.0; // running max ||x_t|| including the final state
    bool aborted = false;
    Eigen::Index abort_step = -1;
    std::string abort_reason;
    int failed_switches = 0;

    // Good-event flags.
    bool membership_at_switches = true; // true params inside every committed set
    bool membership_tracked = false;    // per-step clean-set containment checked?
    bool membership_all_steps = true;

    // Terminal diagnostics (after the final lazy attack application).
    double lambda_realized = 0.0;     // max per-step poisoning norm actually applied
    double log_det_V_stored = 0.0;    // log det of the stored-data Gram matrix
    double log_det_V_true = 0.0;      // same over the true shadow records
    double log_det_upper = 0.0;       // row-norm determinant bound, log form
    double beta_clean_final = 0.0;    // clean radius at delta/4 from true data
    double beta_attacked_final = 0.0; // oracle attacked radius at delta/4
    double zeta_sum = 0.0;            // sum_s min(||zeta_s||^2_{V_s^-1}, 1/2)
    double estimate_error_committed = 0.0; // ||A_tilde - A*|| at the last switch
    double estimate_error_center = 0.0;    // ||A_hat - A*|| of the last set center

    // Regret decomposition (NaN when the episode aborted before completion).
    double R1 = 0.0, R2 = 0.0, R3 = 0.0;

    // Final learning database (only when EpisodeConfig::keep_database is set).
    std::shared_ptr<const LearningDatabase> db;
};

// Everything needed to run one episode.
struct EpisodeConfig {
    SystemParams true_system;
    ControllerConfig controller;
    Eigen::Index horizon = 1000;
    NoiseModel noise;
    double blow_up = 1e6;          // abort when ||x|| exceeds this
    bool track_membership = false; // per-step containment of the true params in
                                   // the clean set built from the true rows
    bool keep_database = false;    // copy the final database onto the trace
    std::optional<double> J_star;  // default: sigma^2 * trace(P(true_system))
};

// x_{t+1} = A x_t + B u_t + w.
VectorXd simulate_step(const SystemParams& truth, const VectorXd& x, const VectorXd& u,
                       const VectorXd& noise);

// Closed loop of plant + switching controller for `horizon` steps.  Dynamics
// failures (no feasible optimistic point, state blow-up) abort the episode
// and are recorded on the trace; configuration errors throw.
EpisodeTrace run_episode(const EpisodeConfig& config);

// sum_s min(||zeta_s||^2 in the V_s^{-1} metric, 1/2) where zeta_s is the
// regressor poisoning of record s and V_s the stored-data Gram matrix over
// the records before s.  Oracle diagnostic for the attacked regret bound.
double zeta_sum_oracle(const LearningDatabase& db, double lambda);

// Cross-episode mean of the per-step cost, cumulatively summed against
// J_star.  All traces must have equal length.
std::vector<double> empirical_regret(const std::vector<EpisodeTrace>& traces, double J_star);

// Memoized Riccati solves keyed on the committed parameter matrix.
class RiccatiCache {
public:
    explicit RiccatiCache(CostWeights weights) : w_(std::move(weights)) {}

    const RiccatiSolution& solution_for(const SystemParams& params);

private:
    CostWeights w_;
    std::vector<std::pair<MatrixXd, RiccatiSolution>> entries_;
};

struct RegretDecomposition {
    double R1 = 0.0; // telescoping value terms
    double R2 = 0.0; // value-function jumps, nonzero only at switches
    double R3 = 0.0; // optimistic vs true one-step predictions
};

// Decompose the episode's regret with noise-free plug-in predictions: the
// conditional mean of x_{t+1} is replaced by Theta*^T z_t (true model) or
// Theta_tilde^T z_t (optimistic model) as each term requires.  The parameter
// in force at the horizon is carried over from the last step, since no switch
// happens there.  Throws MissingSnapshot when steps precede the first switch.
RegretDecomposition regret_decomposition(const EpisodeTrace& trace, const SystemParams& truth,
                                         RiccatiCache& cache);

// Least-squares fit of log R_t against log t over the tail t > burn_in * T.
struct ExponentFit {
    double exponent = 0.0;
    double coefficient = 0.0;   // exp(intercept)
    Eigen::Index points = 0;    // samples entering the fit
};
ExponentFit fit_regret_exponent(const std::vector<double>& curve, double burn_in = 0.25);

// Order-free fold over completed traces.
struct BatchSummary {
    std::vector<double> mean_regret;     // cross-episode mean cumulative regret
    std::vector<double> max_regret;      // pointwise max across episodes
    std::vector<double> min_regret;      // pointwise min across episodes
    std::map<int, int> switch_histogram; // switch count -> episodes
    int aborted = 0;
    int episodes = 0;
    std::vector<std::string> abort_reasons;
};

struct BatchResult {
    std::vector<EpisodeTrace> traces;
    BatchSummary summary;
};

// Aggregation sums in run-index order regardless of the order traces are
// handed in, so permuting episodes cannot change a single output byte.
BatchSummary aggregate(const std::vector<EpisodeTrace>& traces);

// Seeded batch: episode i draws its noise, solver and attack seeds from
// derive_seed(base_seed, 3i), (3i+1) and (3i+2).  Episode aborts land in the
// summary; they never fail the batch.
BatchResult monte_carlo(const EpisodeConfig& config, int n_runs, std::uint64_t base_seed);

} // namespace ofusim
