#include "ofusim/csvio.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

#include "ofusim/errors.hpp"

namespace ofusim {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary keeps newlines byte-stable
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

} // namespace

void write_trace_csv(const std::string& path, const EpisodeTrace& trace, const std::string& mode) {
    std::ofstream out = open_out(path);
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    if (!trace.steps.empty()) {
        n = trace.steps.front().x.size();
        m = trace.steps.front().u.size();
    }
    out << "t";
    for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i;
    for (Eigen::Index i = 0; i < m; ++i) out << ",u" << i;
    out << ",cost,cum_regret,switch,beta,mode\n";
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        const StepRecord& r = trace.steps[t];
        out << t;
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << g17(r.x(i));
        for (Eigen::Index i = 0; i < m; ++i) out << ',' << g17(r.u(i));
        out << ',' << g17(r.cost) << ',' << g17(trace.cum_regret[t]) << ','
            << (r.switched ? 1 : 0) << ',' << g17(r.beta) << ',' << mode << "\n";
    }
    finish(out, path);
}

void write_summary_csv(const std::string& path, const std::vector<EpisodeTrace>& traces,
                       double burn_in) {
    std::ofstream out = open_out(path);
    out << "run,terminal_regret,exponent,switches,aborted,failed_switches,X_max,"
           "estimate_error_committed,estimate_error_center\n";
    for (const EpisodeTrace& tr : traces) {
        double terminal = std::numeric_limits<double>::quiet_NaN();
        if (!tr.cum_regret.empty()) terminal = tr.cum_regret.back();
        double exponent = std::numeric_limits<double>::quiet_NaN();
        if (!tr.aborted) {
            try {
                exponent = fit_regret_exponent(tr.cum_regret, burn_in).exponent;
            } catch (const DegenerateCurve&) {
                // stays nan
            }
        }
        out << tr.run_index << ',' << g17(terminal) << ',' << g17(exponent) << ','
            << tr.switches.size() << ',' << (tr.aborted ? 1 : 0) << ',' << tr.failed_switches
            << ',' << g17(tr.X_max) << ',' << g17(tr.estimate_error_committed) << ','
            << g17(tr.estimate_error_center) << "\n";
    }
    finish(out, path);
}

void write_db_csv(const std::string& path, const LearningDatabase& db) {
    std::ofstream out = open_out(path);
    const Eigen::Index p = db.n() + db.m();
    const Eigen::Index n = db.n();
    out << "step";
    for (Eigen::Index i = 0; i < p; ++i) out << ",z_stored" << i;
    for (Eigen::Index i = 0; i < n; ++i) out << ",x_next_stored" << i;
    for (Eigen::Index i = 0; i < p; ++i) out << ",z_true" << i;
    for (Eigen::Index i = 0; i < n; ++i) out << ",x_next_true" << i;
    out << "\n";
    const std::vector<DbRow>& rows = db.rows();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const DbRow& r = rows[k];
        out << k;
        for (Eigen::Index i = 0; i < p; ++i) out << ',' << g17(r.z(i));
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << g17(r.x_next(i));
        for (Eigen::Index i = 0; i < p; ++i) out << ',' << g17(r.z_true(i));
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << g17(r.x_next_true(i));
        out << "\n";
    }
    finish(out, path);
}

} // namespace ofusim
