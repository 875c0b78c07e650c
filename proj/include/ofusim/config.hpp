#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ofusim/bounds.hpp"
#include "ofusim/harness.hpp"

namespace ofusim {

// Flat experiment description, read from `key = value` text ('#' comments,
// last duplicate wins).  Matrices use ';' between rows and ',' within a row.
// `horizon` is the one required key; everything else defaults to the stock
// scalar benchmark below, with delta falling back to 1/horizon.
struct ExperimentConfig {
    // plant and cost
    Eigen::Index n = 1;
    Eigen::Index m = 1;
    MatrixXd A = MatrixXd::Constant(1, 1, 0.001);
    MatrixXd B = MatrixXd::Constant(1, 1, 0.001);
    MatrixXd Q = MatrixXd::Identity(1, 1);
    MatrixXd R = MatrixXd::Constant(1, 1, 0.1);

    // learning and control
    Eigen::Index horizon = 8000;
    std::optional<double> delta;  // resolved as 1/horizon when unset
    double lambda = 1.0;
    double L = 0.1;
    double s = 1.0;
    double sigma = 0.1;
    bool allow_sigma_above_L = false;
    ControllerMode mode = ControllerMode::oracle_clean;

    // attack
    AttackMode attack = AttackMode::none;
    double attack_lambda = 0.5;
    VectorXd attack_direction; // empty -> first basis vector
    double attack_frequency = 0.01;
    double attack_phase = 0.0;

    // a priori budgets for the self-correcting radius
    double budget_X_a = 1.0;
    double budget_C = 1.0;

    // batch
    int runs = 1;
    std::uint64_t seed = 0;
    std::string out_dir; // empty -> resolved by the CLI
    double burn_in = 0.25;
    double blow_up = 1e6;
    bool track_membership = false;
    std::optional<double> J_star;

    // optimizer
    OfuConfig ofu;

    // theoretical-bound constants; unset entries are derived by sampling
    int bound_samples = 1000;
    std::optional<double> bound_D;
    std::optional<double> bound_C;
    std::optional<double> bound_rho;
    std::optional<double> bound_eta_spec;
    std::optional<double> bound_nu;
    std::optional<double> bound_M;

    double resolved_delta() const { return delta ? *delta : 1.0 / static_cast<double>(horizon); }

    void validate() const; // throws ConfigInvalid naming the offending key

    SystemParams system() const;
    CostWeights weights() const;
    EpisodeConfig episode() const;

    // Derived (or overridden) constants for the bound evaluations; the sweep
    // seed is derived from `seed`, so a resolved config pins them exactly.
    BoundConstants constants() const;
};

// Set one key from its textual value; unknown keys and unparsable values
// throw ConfigInvalid naming the key.  This is also the `--set` path.
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Parse a whole config text / file.  Missing `horizon` is an error.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path); // IoError on read failure

// Canonical `key = value` rendering of the fully resolved config; feeding it
// back through parse_config_text reproduces the exact same serialization.
std::string serialize_config(const ExperimentConfig& cfg);

// Built-in experiment presets (the three benchmark settings).
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
ExperimentConfig preset(const std::string& name); // ConfigInvalid for unknown names

} // namespace ofusim
