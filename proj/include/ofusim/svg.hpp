#pragma once

#include <string>
#include <vector>

#include "ofusim/harness.hpp"
#include "ofusim/lqr.hpp"

namespace ofusim {

// One curve with an optional shaded band; y is sampled at t = 1..y.size().
struct SvgSeries {
    std::string label;
    std::string color; // e.g. "#1f77b4"
    bool dashed = false;
    std::vector<double> y;
    std::vector<double> lo; // band, empty or same length as y
    std::vector<double> hi;
};

// Hand-rendered static line plot.  Output depends only on the arguments
// (fixed canvas, fixed formatting), so identical inputs give identical bytes.
std::string render_line_svg(const std::string& title, const std::string& x_label,
                            const std::string& y_label, const std::vector<SvgSeries>& series);

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series); // IoError

// A batch with a human-readable label for comparison figures.
struct LabeledBatch {
    std::string label;
    const BatchResult* batch = nullptr;
};

// Emit the benchmark figures into `out_dir`:
//   <stem>_regret.svg                  mean regret vs t with min/max band per batch
//   <stem>_estimate_a.svg / _b.svg     committed parameter estimates vs t
//                                      (scalar systems only), true value dashed
// Returns the paths written.
std::vector<std::string> emit_plots(const std::string& out_dir, const std::string& stem,
                                    const std::vector<LabeledBatch>& batches,
                                    const SystemParams& truth);

} // namespace ofusim
