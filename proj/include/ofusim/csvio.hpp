#pragma once

#include <string>
#include <vector>

#include "ofusim/database.hpp"
#include "ofusim/harness.hpp"

namespace ofusim {

// %.17g rendering: enough digits to reproduce the double bit-exactly.
std::string g17(double v);

// Per-step table: t, x[...], u[...], cost, cum_regret, switch, beta, mode.
void write_trace_csv(const std::string& path, const EpisodeTrace& trace, const std::string& mode);

// Per-run table: run, terminal_regret, exponent, switches, aborted, plus the
// auxiliary terminal diagnostics.  A run whose regret tail admits no exponent
// fit reports nan there.
void write_summary_csv(const std::string& path, const std::vector<EpisodeTrace>& traces,
                       double burn_in);

// Stored-vs-true database dump:
// step, z_stored[...], x_next_stored[...], z_true[...], x_next_true[...].
void write_db_csv(const std::string& path, const LearningDatabase& db);

} // namespace ofusim
