// Batch experiment runner: loads a preset or config file, runs the Monte
// Carlo batch, and writes CSV tables, SVG figures, and the resolved config
// into the output directory.  Exit codes: 0 success, 2 config error, 3 batch
// failure.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ofusim/config.hpp"
#include "ofusim/csvio.hpp"
#include "ofusim/errors.hpp"
#include "ofusim/harness.hpp"
#include "ofusim/lqr.hpp"
#include "ofusim/rng.hpp"
#include "ofusim/svg.hpp"

namespace {

using namespace ofusim;

std::string trimmed(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct RunFlags {
    std::string source;
    std::vector<std::string> sets;
    std::string runs, seed, mode, attack, lambda_budget, out;
};

ExperimentConfig resolve_config(const RunFlags& fl) {
    ExperimentConfig cfg = is_preset(fl.source) ? preset(fl.source) : parse_config_file(fl.source);
    for (const std::string& kv : fl.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigInvalid("--set expects key=value, got `" + kv + "`");
        apply_override(cfg, trimmed(kv.substr(0, eq)), trimmed(kv.substr(eq + 1)));
    }
    if (!fl.runs.empty()) apply_override(cfg, "runs", fl.runs);
    if (!fl.seed.empty()) apply_override(cfg, "seed", fl.seed);
    if (!fl.mode.empty()) apply_override(cfg, "mode", fl.mode);
    if (!fl.attack.empty()) apply_override(cfg, "attack", fl.attack);
    if (!fl.lambda_budget.empty()) apply_override(cfg, "attack_lambda", fl.lambda_budget);
    if (!fl.out.empty()) apply_override(cfg, "out_dir", fl.out);
    cfg.validate();
    return cfg;
}

int cmd_run(const RunFlags& fl) {
    ExperimentConfig cfg;
    BoundConstants consts;
    try {
        cfg = resolve_config(fl);
        consts = cfg.constants();
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    std::string out_dir = cfg.out_dir;
    if (out_dir.empty()) {
        const char* env = std::getenv("OFUSIM_OUT_DIR");
        out_dir = (env != nullptr && *env != '\0') ? env : "out";
    }

    try {
        std::filesystem::create_directories(out_dir);

        EpisodeConfig ep = cfg.episode();
        ep.keep_database = true;
        const double J_star =
            ep.J_star ? *ep.J_star
                      : cfg.sigma * cfg.sigma * average_cost(cfg.system(), cfg.weights());

        // echo the fully resolved configuration, derived constants included;
        // out_dir stays blank so reruns into different directories produce
        // byte-identical artifacts
        ExperimentConfig resolved = cfg;
        resolved.out_dir.clear();
        resolved.delta = cfg.resolved_delta();
        resolved.J_star = J_star;
        resolved.bound_D = consts.D;
        resolved.bound_C = consts.C;
        resolved.bound_rho = consts.rho;
        resolved.bound_eta_spec = consts.eta_spec;
        resolved.bound_nu = consts.nu;
        resolved.bound_M = consts.M;
        {
            const std::string path = out_dir + "/resolved_config.txt";
            std::ofstream f(path, std::ios::binary);
            if (!f) throw IoError("cannot open for writing: " + path);
            f << serialize_config(resolved);
            f.flush();
            if (!f) throw IoError("write failed: " + path);
        }

        const BatchResult batch = monte_carlo(ep, cfg.runs, cfg.seed);

        std::vector<std::string> artifacts{"resolved_config.txt"};
        const std::string mode_name = to_string(cfg.mode);
        for (const EpisodeTrace& tr : batch.traces) {
            char name[40];
            std::snprintf(name, sizeof name, "trace_%03d.csv", tr.run_index);
            write_trace_csv(out_dir + "/" + name, tr, mode_name);
            artifacts.emplace_back(name);
        }
        write_summary_csv(out_dir + "/summary.csv", batch.traces, cfg.burn_in);
        artifacts.emplace_back("summary.csv");
        if (!batch.traces.empty() && batch.traces.front().db) {
            write_db_csv(out_dir + "/db_000.csv", *batch.traces.front().db);
            artifacts.emplace_back("db_000.csv");
        }
        for (const std::string& p : emit_plots(out_dir, "figure", {{mode_name, &batch}},
                                               cfg.system()))
            artifacts.push_back(std::filesystem::path(p).filename().string());

        const int completed = batch.summary.episodes - batch.summary.aborted;
        std::cout << "source: " << fl.source << '\n'
                  << "mode: " << mode_name << "  attack: " << to_string(cfg.attack)
                  << "  runs: " << cfg.runs << "  horizon: " << cfg.horizon
                  << "  seed: " << cfg.seed << '\n'
                  << "out: " << out_dir << '\n'
                  << "completed: " << completed << "/" << batch.summary.episodes << '\n';
        if (!batch.summary.mean_regret.empty()) {
            std::cout << "terminal regret mean: " << fmt6(batch.summary.mean_regret.back())
                      << "  min: " << fmt6(batch.summary.min_regret.back())
                      << "  max: " << fmt6(batch.summary.max_regret.back()) << '\n';
        }
        std::cout << "switch counts:";
        for (const auto& [count, eps] : batch.summary.switch_histogram)
            std::cout << ' ' << count << "x" << eps;
        std::cout << '\n' << "artifacts:";
        for (const std::string& a : artifacts) std::cout << ' ' << a;
        std::cout << '\n';

        if (batch.summary.aborted > 0) {
            for (const std::string& r : batch.summary.abort_reasons)
                std::cerr << "aborted " << r << '\n';
            if (batch.summary.aborted == batch.summary.episodes) {
                std::cerr << "error: every run aborted\n";
                return 3;
            }
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive LQ control under learning-data attacks: experiment runner"};
    app.require_subcommand(1);

    RunFlags fl;
    CLI::App* run = app.add_subcommand("run", "run an experiment preset or config file");
    std::string presets;
    for (const std::string& p : ofusim::preset_names())
        presets += (presets.empty() ? "" : ", ") + p;
    run->add_option("source", fl.source, "preset (" + presets + ") or config file path")
        ->required();
    run->add_option("--runs", fl.runs, "number of Monte Carlo runs");
    run->add_option("--seed", fl.seed, "base seed");
    run->add_option("--mode", fl.mode, "controller mode: naive|self-correcting|oracle-clean");
    run->add_option("--attack", fl.attack, "attack: none|constant|sinusoid|random");
    run->add_option("--lambda-budget", fl.lambda_budget, "attack budget Lambda");
    run->add_option("--out", fl.out, "output directory (default: $OFUSIM_OUT_DIR or ./out)");
    run->add_option("--set", fl.sets, "override a config key, e.g. --set horizon=4000")
        ->allow_extra_args(false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    return cmd_run(fl);
}
