#include "ofusim/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ofusim/csvio.hpp"
#include "ofusim/rng.hpp"

namespace ofusim {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
    throw ConfigInvalid("config key `" + key + "`: " + why);
}

double parse_double(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v.empty()) bad_key(key, "empty value");
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size()) bad_key(key, "not a number: `" + v + "`");
    return x;
}

long long parse_int(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v.empty()) bad_key(key, "empty value");
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size()) bad_key(key, "not an integer: `" + v + "`");
    return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v.empty()) bad_key(key, "empty value");
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size()) bad_key(key, "not an unsigned integer: `" + v + "`");
    return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_key(key, "not a boolean: `" + v + "`");
}

// rows separated by ';', entries by ','
MatrixXd parse_matrix(const std::string& key, const std::string& value) {
    const std::vector<std::string> rows = split(value, ';');
    if (rows.empty()) bad_key(key, "empty matrix");
    std::vector<std::vector<double>> data;
    for (const std::string& row : rows) {
        std::vector<double> r;
        for (const std::string& cell : split(row, ',')) r.push_back(parse_double(key, cell));
        if (!data.empty() && r.size() != data.front().size())
            bad_key(key, "ragged matrix rows");
        data.push_back(std::move(r));
    }
    MatrixXd M(static_cast<Eigen::Index>(data.size()),
               static_cast<Eigen::Index>(data.front().size()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            M(i, j) = data[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return M;
}

VectorXd parse_vec(const std::string& key, const std::string& value) {
    const MatrixXd M = parse_matrix(key, value);
    if (M.rows() != 1 && M.cols() != 1) bad_key(key, "expected a vector");
    VectorXd v(M.size());
    for (Eigen::Index i = 0; i < M.size(); ++i) v(i) = M(i);
    return v;
}

std::string format_matrix(const MatrixXd& M) {
    std::string out;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        if (i) out += ';';
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j) out += ',';
            out += g17(M(i, j));
        }
    }
    return out;
}

std::string format_vec(const VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += g17(v(i));
    }
    return out;
}

std::string underscored(std::string v) {
    for (char& c : v)
        if (c == '-') c = '_';
    return v;
}

ControllerMode parse_mode_value(const std::string& key, const std::string& value) {
    try {
        return parse_controller_mode(underscored(trim(value)));
    } catch (const Error& e) {
        bad_key(key, e.what());
    }
}

AttackMode parse_attack_value(const std::string& key, const std::string& value) {
    std::string v = underscored(trim(value));
    if (v == "constant") v = "constant_bias";
    if (v == "random") v = "random_bounded";
    try {
        return parse_attack_mode(v);
    } catch (const Error& e) {
        bad_key(key, e.what());
    }
}

} // namespace

void apply_override(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
    const std::string key = trim(raw_key);
    if (key.empty()) throw ConfigInvalid("config: empty key");

    if (key == "n") cfg.n = parse_int(key, value);
    else if (key == "m") cfg.m = parse_int(key, value);
    else if (key == "a") cfg.A = parse_matrix(key, value);
    else if (key == "b") cfg.B = parse_matrix(key, value);
    else if (key == "q") cfg.Q = parse_matrix(key, value);
    else if (key == "r") cfg.R = parse_matrix(key, value);
    else if (key == "horizon") cfg.horizon = parse_int(key, value);
    else if (key == "delta") cfg.delta = parse_double(key, value);
    else if (key == "lambda") cfg.lambda = parse_double(key, value);
    else if (key == "L") cfg.L = parse_double(key, value);
    else if (key == "s") cfg.s = parse_double(key, value);
    else if (key == "sigma") cfg.sigma = parse_double(key, value);
    else if (key == "allow_sigma_above_L") cfg.allow_sigma_above_L = parse_bool(key, value);
    else if (key == "mode") cfg.mode = parse_mode_value(key, value);
    else if (key == "attack") cfg.attack = parse_attack_value(key, value);
    else if (key == "attack_lambda") cfg.attack_lambda = parse_double(key, value);
    else if (key == "attack_direction") cfg.attack_direction = parse_vec(key, value);
    else if (key == "attack_frequency") cfg.attack_frequency = parse_double(key, value);
    else if (key == "attack_phase") cfg.attack_phase = parse_double(key, value);
    else if (key == "budget_X_a") cfg.budget_X_a = parse_double(key, value);
    else if (key == "budget_C") cfg.budget_C = parse_double(key, value);
    else if (key == "runs") cfg.runs = static_cast<int>(parse_int(key, value));
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "out_dir") cfg.out_dir = trim(value);
    else if (key == "burn_in") cfg.burn_in = parse_double(key, value);
    else if (key == "blow_up") cfg.blow_up = parse_double(key, value);
    else if (key == "track_membership") cfg.track_membership = parse_bool(key, value);
    else if (key == "J_star") cfg.J_star = parse_double(key, value);
    else if (key == "ofu_steps") cfg.ofu.steps = static_cast<int>(parse_int(key, value));
    else if (key == "ofu_step_size") cfg.ofu.step_size = parse_double(key, value);
    else if (key == "ofu_restarts") cfg.ofu.restarts = static_cast<int>(parse_int(key, value));
    else if (key == "ofu_fd_eps") cfg.ofu.fd_eps = parse_double(key, value);
    else if (key == "ofu_hessian_reg") cfg.ofu.hessian_regularization = parse_double(key, value);
    else if (key == "bound_samples") cfg.bound_samples = static_cast<int>(parse_int(key, value));
    else if (key == "bound_D") cfg.bound_D = parse_double(key, value);
    else if (key == "bound_C") cfg.bound_C = parse_double(key, value);
    else if (key == "bound_rho") cfg.bound_rho = parse_double(key, value);
    else if (key == "bound_eta_spec") cfg.bound_eta_spec = parse_double(key, value);
    else if (key == "bound_nu") cfg.bound_nu = parse_double(key, value);
    else if (key == "bound_M") cfg.bound_M = parse_double(key, value);
    else throw ConfigInvalid("config: unknown key `" + key + "`");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigInvalid("config line " + std::to_string(lineno) +
                                ": expected `key = value`, got `" + body + "`");
        const std::string key = trim(body.substr(0, eq));
        apply_override(cfg, key, body.substr(eq + 1));
        seen.insert(key);
    }
    if (!seen.count("horizon")) throw ConfigInvalid("config: missing required key `horizon`");
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void ExperimentConfig::validate() const {
    if (n < 1) bad_key("n", "must be >= 1");
    if (m < 1) bad_key("m", "must be >= 1");
    if (A.rows() != n || A.cols() != n) bad_key("a", "must be n x n");
    if (B.rows() != n || B.cols() != m) bad_key("b", "must be n x m");
    if (Q.rows() != n || Q.cols() != n) bad_key("q", "must be n x n");
    if (R.rows() != m || R.cols() != m) bad_key("r", "must be m x m");
    if (horizon < 1) bad_key("horizon", "must be >= 1");
    const double d = resolved_delta();
    if (!(d > 0.0 && d < 1.0)) bad_key("delta", "must lie in (0, 1)");
    if (!(lambda > 0.0)) bad_key("lambda", "must be > 0");
    if (!(L > 0.0)) bad_key("L", "must be > 0");
    if (!(s > 0.0)) bad_key("s", "must be > 0");
    if (!(sigma >= 0.0)) bad_key("sigma", "must be >= 0");
    if (sigma > L && !allow_sigma_above_L)
        bad_key("sigma", "exceeds the sub-Gaussian scale L; set allow_sigma_above_L to force");
    if (!(attack_lambda >= 0.0)) bad_key("attack_lambda", "must be >= 0");
    if (attack_direction.size() != 0 && attack_direction.size() != n)
        bad_key("attack_direction", "must have length n");
    if (!(budget_X_a > 0.0)) bad_key("budget_X_a", "must be > 0");
    if (!(budget_C >= 0.0)) bad_key("budget_C", "must be >= 0");
    if (runs < 1) bad_key("runs", "must be >= 1");
    if (!(burn_in >= 0.0 && burn_in < 1.0)) bad_key("burn_in", "must lie in [0, 1)");
    if (!(blow_up > 0.0)) bad_key("blow_up", "must be > 0");
    if (ofu.steps < 1) bad_key("ofu_steps", "must be >= 1");
    if (!(ofu.step_size > 0.0)) bad_key("ofu_step_size", "must be > 0");
    if (ofu.restarts < 1) bad_key("ofu_restarts", "must be >= 1");
    if (!(ofu.fd_eps > 0.0)) bad_key("ofu_fd_eps", "must be > 0");
    if (!(ofu.hessian_regularization >= 0.0)) bad_key("ofu_hessian_reg", "must be >= 0");
    if (bound_samples < 1) bad_key("bound_samples", "must be >= 1");
    if (bound_D && !(*bound_D > 0.0)) bad_key("bound_D", "must be > 0");
    if (bound_C && !(*bound_C > 0.0)) bad_key("bound_C", "must be > 0");
    if (bound_rho && !(*bound_rho > 0.0 && *bound_rho < 1.0)) bad_key("bound_rho", "must lie in (0, 1)");
    if (bound_eta_spec && !(*bound_eta_spec > 0.0)) bad_key("bound_eta_spec", "must be > 0");
    if (bound_nu && !(*bound_nu > 0.0)) bad_key("bound_nu", "must be > 0");
    if (bound_M && !(*bound_M > 0.0)) bad_key("bound_M", "must be > 0");
    try {
        weights().validate();
    } catch (const Error& e) {
        throw ConfigInvalid(std::string("config keys `q`/`r`: ") + e.what());
    }
}

SystemParams ExperimentConfig::system() const {
    SystemParams sys;
    sys.A = A;
    sys.B = B;
    sys.s = s;
    return sys;
}

CostWeights ExperimentConfig::weights() const {
    CostWeights w;
    w.Q = Q;
    w.R = R;
    return w;
}

EpisodeConfig ExperimentConfig::episode() const {
    EpisodeConfig e;
    e.true_system = system();
    e.horizon = horizon;
    e.blow_up = blow_up;
    e.track_membership = track_membership;
    e.J_star = J_star;

    e.noise.sigma = sigma;
    e.noise.L = L;
    e.noise.allow_sigma_above_L = allow_sigma_above_L;

    ControllerConfig& c = e.controller;
    c.weights = weights();
    c.lambda = lambda;
    c.delta = resolved_delta();
    c.s = s;
    c.L = L;
    c.mode = mode;
    c.ofu = ofu;

    c.attack.mode = attack;
    c.attack.Lambda = attack_lambda;
    c.attack.direction = attack_direction;
    c.attack.frequency = attack_frequency;
    c.attack.phase = attack_phase;

    c.budget.Lambda = attack_lambda;
    c.budget.X_a = budget_X_a;
    c.budget.C = budget_C;
    c.budget.L = L;
    c.budget.s = s;
    return e;
}

BoundConstants ExperimentConfig::constants() const {
    BoundConstants c;
    const bool full_override = bound_D && bound_C && bound_rho && bound_eta_spec;
    if (full_override) {
        c.D = *bound_D;
        c.C = *bound_C;
        c.rho = *bound_rho;
        c.eta_spec = *bound_eta_spec;
        c.method = "config override";
    } else {
        c = derive_constants(system(), weights(), s, bound_samples, derive_seed(seed, 0xC057ULL));
        if (bound_D) c.D = *bound_D;
        if (bound_C) c.C = *bound_C;
        if (bound_rho) c.rho = *bound_rho;
        if (bound_eta_spec) c.eta_spec = *bound_eta_spec;
    }
    c.L = L;
    if (bound_nu) c.nu = *bound_nu;
    c.M = bound_M ? *bound_M : s;
    fill_aux_constants(c, n + m, s);
    c.validate();
    return c;
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "# resolved experiment configuration\n";
    out << "n = " << cfg.n << "\n";
    out << "m = " << cfg.m << "\n";
    out << "a = " << format_matrix(cfg.A) << "\n";
    out << "b = " << format_matrix(cfg.B) << "\n";
    out << "q = " << format_matrix(cfg.Q) << "\n";
    out << "r = " << format_matrix(cfg.R) << "\n";
    out << "horizon = " << cfg.horizon << "\n";
    out << "delta = " << g17(cfg.resolved_delta()) << "\n";
    out << "lambda = " << g17(cfg.lambda) << "\n";
    out << "L = " << g17(cfg.L) << "\n";
    out << "s = " << g17(cfg.s) << "\n";
    out << "sigma = " << g17(cfg.sigma) << "\n";
    out << "allow_sigma_above_L = " << (cfg.allow_sigma_above_L ? "true" : "false") << "\n";
    out << "mode = " << to_string(cfg.mode) << "\n";
    out << "attack = " << to_string(cfg.attack) << "\n";
    out << "attack_lambda = " << g17(cfg.attack_lambda) << "\n";
    if (cfg.attack_direction.size() > 0)
        out << "attack_direction = " << format_vec(cfg.attack_direction) << "\n";
    out << "attack_frequency = " << g17(cfg.attack_frequency) << "\n";
    out << "attack_phase = " << g17(cfg.attack_phase) << "\n";
    out << "budget_X_a = " << g17(cfg.budget_X_a) << "\n";
    out << "budget_C = " << g17(cfg.budget_C) << "\n";
    out << "runs = " << cfg.runs << "\n";
    out << "seed = " << cfg.seed << "\n";
    if (!cfg.out_dir.empty()) out << "out_dir = " << cfg.out_dir << "\n";
    out << "burn_in = " << g17(cfg.burn_in) << "\n";
    out << "blow_up = " << g17(cfg.blow_up) << "\n";
    out << "track_membership = " << (cfg.track_membership ? "true" : "false") << "\n";
    if (cfg.J_star) out << "J_star = " << g17(*cfg.J_star) << "\n";
    out << "ofu_steps = " << cfg.ofu.steps << "\n";
    out << "ofu_step_size = " << g17(cfg.ofu.step_size) << "\n";
    out << "ofu_restarts = " << cfg.ofu.restarts << "\n";
    out << "ofu_fd_eps = " << g17(cfg.ofu.fd_eps) << "\n";
    out << "ofu_hessian_reg = " << g17(cfg.ofu.hessian_regularization) << "\n";
    out << "bound_samples = " << cfg.bound_samples << "\n";
    if (cfg.bound_D) out << "bound_D = " << g17(*cfg.bound_D) << "\n";
    if (cfg.bound_C) out << "bound_C = " << g17(*cfg.bound_C) << "\n";
    if (cfg.bound_rho) out << "bound_rho = " << g17(*cfg.bound_rho) << "\n";
    if (cfg.bound_eta_spec) out << "bound_eta_spec = " << g17(*cfg.bound_eta_spec) << "\n";
    if (cfg.bound_nu) out << "bound_nu = " << g17(*cfg.bound_nu) << "\n";
    if (cfg.bound_M) out << "bound_M = " << g17(*cfg.bound_M) << "\n";
    return out.str();
}

std::vector<std::string> preset_names() {
    return {"paper-clean", "paper-naive-attacked", "paper-self-correcting"};
}

bool is_preset(const std::string& name) {
    for (const std::string& p : preset_names())
        if (p == name) return true;
    return false;
}

ExperimentConfig preset(const std::string& name) {
    if (name == "paper-clean")
        return parse_config_text("# clean scalar benchmark, oracle-clean baseline\n"
                                 "horizon = 8000\n"
                                 "runs = 50\n"
                                 "mode = oracle-clean\n"
                                 "attack = none\n"
                                 "seed = 1\n");
    if (name == "paper-naive-attacked")
        return parse_config_text("# constant-bias poisoning against the clean-radius controller\n"
                                 "horizon = 8000\n"
                                 "runs = 50\n"
                                 "mode = naive\n"
                                 "attack = constant\n"
                                 "attack_lambda = 0.5\n"
                                 "seed = 1\n");
    if (name == "paper-self-correcting")
        return parse_config_text("# constant-bias poisoning against the inflated-radius controller\n"
                                 "horizon = 8000\n"
                                 "runs = 50\n"
                                 "mode = self-correcting\n"
                                 "attack = constant\n"
                                 "attack_lambda = 0.5\n"
                                 "seed = 1\n");
    throw ConfigInvalid("unknown preset `" + name + "`; available: paper-clean, "
                        "paper-naive-attacked, paper-self-correcting");
}

} // namespace ofusim
