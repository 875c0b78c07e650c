#include "ofusim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ofusim/errors.hpp"

namespace ofusim {
namespace {

// fixed canvas geometry
constexpr double kW = 860.0, kH = 540.0;
constexpr double kLeft = 70.0, kRight = 30.0, kTop = 42.0, kBottom = 56.0;
constexpr double kPlotW = kW - kLeft - kRight;
constexpr double kPlotH = kH - kTop - kBottom;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string f2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string gshort(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out.push_back(c);
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void take(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finalize() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (lo == hi) {
            const double pad = std::max(1.0, std::abs(lo) * 0.1);
            lo -= pad;
            hi += pad;
        } else {
            const double pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
    }
};

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t max_points = 800) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
    for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
    if (idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
}

} // namespace

std::string render_line_svg(const std::string& title, const std::string& x_label,
                            const std::string& y_label, const std::vector<SvgSeries>& series) {
    std::size_t N = 0;
    Range yr;
    for (const SvgSeries& s : series) {
        N = std::max(N, s.y.size());
        for (double v : s.y) yr.take(v);
        for (double v : s.lo) yr.take(v);
        for (double v : s.hi) yr.take(v);
    }
    yr.finalize();
    const double tmax = static_cast<double>(std::max<std::size_t>(N, 2));

    const auto sx = [&](double t) { return kLeft + (t - 1.0) / (tmax - 1.0) * kPlotW; };
    const auto sy = [&](double v) { return kTop + kPlotH - (v - yr.lo) / (yr.hi - yr.lo) * kPlotH; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH
        << "\" fill=\"#ffffff\"/>\n";
    out << "<text x=\"" << f2(kW / 2) << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"monospace\" font-size=\"15\">"
        << escape(title) << "</text>\n";

    // gridlines and ticks
    for (int k = 0; k <= 4; ++k) {
        const double t = 1.0 + (tmax - 1.0) * k / 4.0;
        const double X = sx(t);
        out << "<line x1=\"" << f2(X) << "\" y1=\"" << f2(kTop) << "\" x2=\"" << f2(X)
            << "\" y2=\"" << f2(kTop + kPlotH) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << f2(X) << "\" y=\"" << f2(kTop + kPlotH + 18)
            << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">"
            << gshort(std::round(t)) << "</text>\n";
        const double v = yr.lo + (yr.hi - yr.lo) * k / 4.0;
        const double Y = sy(v);
        out << "<line x1=\"" << f2(kLeft) << "\" y1=\"" << f2(Y) << "\" x2=\""
            << f2(kLeft + kPlotW) << "\" y2=\"" << f2(Y)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << f2(kLeft - 6) << "\" y=\"" << f2(Y + 4)
            << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" << gshort(v)
            << "</text>\n";
    }

    // bands first, lines on top
    for (const SvgSeries& s : series) {
        if (s.lo.size() != s.y.size() || s.hi.size() != s.y.size() || s.y.empty()) continue;
        bool flat = true;
        for (std::size_t i = 0; i < s.y.size() && flat; ++i)
            if (std::isfinite(s.lo[i]) && std::isfinite(s.hi[i]) && s.lo[i] != s.hi[i])
                flat = false;
        if (flat) continue;
        const std::vector<std::size_t> idx = sample_indices(s.y.size());
        std::string d;
        bool first = true;
        for (std::size_t i : idx) {
            if (!std::isfinite(s.hi[i])) continue;
            d += (first ? "M" : "L");
            d += f2(sx(static_cast<double>(i + 1))) + " " + f2(sy(s.hi[i]));
            first = false;
        }
        for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
            if (!std::isfinite(s.lo[*it])) continue;
            d += "L" + f2(sx(static_cast<double>(*it + 1))) + " " + f2(sy(s.lo[*it]));
        }
        if (!d.empty())
            out << "<path d=\"" << d << "Z\" fill=\"" << s.color
                << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    for (const SvgSeries& s : series) {
        const std::vector<std::size_t> idx = sample_indices(s.y.size());
        std::string d;
        bool pen_up = true;
        for (std::size_t i : idx) {
            if (!std::isfinite(s.y[i])) {
                pen_up = true;
                continue;
            }
            d += (pen_up ? "M" : "L");
            d += f2(sx(static_cast<double>(i + 1))) + " " + f2(sy(s.y[i]));
            pen_up = false;
        }
        if (d.empty()) continue;
        out << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"1.6\"";
        if (s.dashed) out << " stroke-dasharray=\"6 4\"";
        out << "/>\n";
    }

    // frame
    out << "<rect x=\"" << f2(kLeft) << "\" y=\"" << f2(kTop) << "\" width=\"" << f2(kPlotW)
        << "\" height=\"" << f2(kPlotH)
        << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";

    // legend, top-right inside the frame
    double ly = kTop + 16.0;
    for (const SvgSeries& s : series) {
        if (s.label.empty()) continue;
        const double lx = kLeft + kPlotW - 170.0;
        out << "<line x1=\"" << f2(lx) << "\" y1=\"" << f2(ly - 4) << "\" x2=\"" << f2(lx + 26)
            << "\" y2=\"" << f2(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
        if (s.dashed) out << " stroke-dasharray=\"6 4\"";
        out << "/>\n";
        out << "<text x=\"" << f2(lx + 32) << "\" y=\"" << f2(ly)
            << "\" font-family=\"monospace\" font-size=\"12\">" << escape(s.label) << "</text>\n";
        ly += 17.0;
    }

    out << "<text x=\"" << f2(kLeft + kPlotW / 2) << "\" y=\"" << f2(kH - 14)
        << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"13\">"
        << escape(x_label) << "</text>\n";
    out << "<text x=\"18\" y=\"" << f2(kTop + kPlotH / 2)
        << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"13\" "
           "transform=\"rotate(-90 18 "
        << f2(kTop + kPlotH / 2) << ")\">" << escape(y_label) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << render_line_svg(title, x_label, y_label, series);
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

namespace {

// Committed estimate (A or B entry) as a step function of t; NaN before the
// first switch.
std::vector<double> committed_curve(const EpisodeTrace& tr, bool a_part) {
    const std::size_t N = tr.steps.size();
    std::vector<double> out(N, std::numeric_limits<double>::quiet_NaN());
    std::size_t k = 0;
    double current = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t t = 0; t < N; ++t) {
        while (k < tr.switches.size() && static_cast<std::size_t>(tr.switches[k].t) <= t) {
            const SystemParams& th = tr.switches[k].theta;
            current = a_part ? th.A(0, 0) : th.B(0, 0);
            ++k;
        }
        out[t] = current;
    }
    return out;
}

struct CurveStats {
    std::vector<double> mean, lo, hi;
};

CurveStats across_traces(const std::vector<EpisodeTrace>& traces, bool a_part) {
    CurveStats cs;
    std::size_t N = 0;
    for (const EpisodeTrace& tr : traces)
        if (!tr.aborted) N = std::max(N, tr.steps.size());
    if (N == 0) return cs;
    cs.mean.assign(N, 0.0);
    cs.lo.assign(N, std::numeric_limits<double>::infinity());
    cs.hi.assign(N, -std::numeric_limits<double>::infinity());
    std::vector<int> count(N, 0);
    for (const EpisodeTrace& tr : traces) {
        if (tr.aborted) continue;
        const std::vector<double> c = committed_curve(tr, a_part);
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (!std::isfinite(c[i])) continue;
            cs.mean[i] += c[i];
            cs.lo[i] = std::min(cs.lo[i], c[i]);
            cs.hi[i] = std::max(cs.hi[i], c[i]);
            ++count[i];
        }
    }
    for (std::size_t i = 0; i < N; ++i) {
        if (count[i] > 0) {
            cs.mean[i] /= count[i];
        } else {
            cs.mean[i] = std::numeric_limits<double>::quiet_NaN();
            cs.lo[i] = cs.hi[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return cs;
}

} // namespace

std::vector<std::string> emit_plots(const std::string& out_dir, const std::string& stem,
                                    const std::vector<LabeledBatch>& batches,
                                    const SystemParams& truth) {
    std::vector<std::string> written;
    const std::string base = out_dir.empty() ? stem : out_dir + "/" + stem;

    std::vector<SvgSeries> regret;
    std::size_t palette_i = 0;
    for (const LabeledBatch& lb : batches) {
        if (!lb.batch || lb.batch->summary.mean_regret.empty()) continue;
        SvgSeries s;
        s.label = lb.label;
        s.color = kPalette[palette_i++ % 6];
        s.y = lb.batch->summary.mean_regret;
        s.lo = lb.batch->summary.min_regret;
        s.hi = lb.batch->summary.max_regret;
        regret.push_back(std::move(s));
    }
    if (!regret.empty()) {
        const std::string path = base + "_regret.svg";
        write_line_svg(path, "cumulative regret", "t", "regret", regret);
        written.push_back(path);
    }

    if (truth.n() == 1 && truth.m() == 1) {
        for (int part = 0; part < 2; ++part) {
            const bool a_part = part == 0;
            std::vector<SvgSeries> fig;
            palette_i = 0;
            std::size_t N = 0;
            for (const LabeledBatch& lb : batches) {
                if (!lb.batch) continue;
                CurveStats cs = across_traces(lb.batch->traces, a_part);
                if (cs.mean.empty()) continue;
                N = std::max(N, cs.mean.size());
                SvgSeries s;
                s.label = lb.label;
                s.color = kPalette[palette_i++ % 6];
                s.y = std::move(cs.mean);
                s.lo = std::move(cs.lo);
                s.hi = std::move(cs.hi);
                fig.push_back(std::move(s));
            }
            if (fig.empty()) continue;
            SvgSeries ref;
            ref.label = a_part ? "true a" : "true b";
            ref.color = "#333333";
            ref.dashed = true;
            ref.y.assign(N, a_part ? truth.A(0, 0) : truth.B(0, 0));
            fig.push_back(std::move(ref));
            const std::string path = base + (a_part ? "_estimate_a.svg" : "_estimate_b.svg");
            write_line_svg(path, a_part ? "committed estimate of a" : "committed estimate of b",
                           "t", "estimate", fig);
            written.push_back(path);
        }
    }
    return written;
}

} // namespace ofusim
