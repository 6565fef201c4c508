#include "snnfaultlab/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace snnfaultlab::plot {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string num4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                          "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

}  // namespace

std::string render_plot_svg(const std::vector<campaign::ResultRow>& rows,
                            const PlotSpec& spec) {
    std::string attack;
    for (const auto& r : rows) {
        if (r.attack == "baseline") continue;
        if (attack.empty()) attack = r.attack;
        else if (r.attack != attack)
            throw campaign::ConfigError("plot: mixed attack kinds (" + attack + " vs " +
                                        r.attack + ")");
    }
    if (attack.empty()) throw campaign::ConfigError("plot: no attack rows");
    const bool vdd_axis = attack == "global-vdd";
    const std::string x_label =
        spec.x_label.empty() ? (vdd_axis ? "vdd" : "delta") : spec.x_label;

    // fraction -> x -> (sum, n); averages over seeds.
    std::map<double, std::map<double, std::pair<double, int>>> series;
    for (const auto& r : rows) {
        if (r.attack == "baseline") continue;
        auto& cell = series[r.fraction][vdd_axis ? r.v_dd : r.delta];
        cell.first += r.accuracy;
        cell.second += 1;
    }

    double x_min = 1e300, x_max = -1e300;
    for (const auto& [fraction, points] : series) {
        (void)fraction;
        x_min = std::min(x_min, points.begin()->first);
        x_max = std::max(x_max, points.rbegin()->first);
    }
    if (x_min == x_max) {
        x_min -= 0.5;
        x_max += 0.5;
    }

    const double ml = 64, mr = 160, mt = 36, mb = 48;
    const double pw = spec.width - ml - mr, ph = spec.height - mt - mb;
    auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
    auto sy = [&](double y) { return mt + (1.0 - y) * ph; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) +
           "\" height=\"" + std::to_string(spec.height) + "\" viewBox=\"0 0 " +
           std::to_string(spec.width) + " " + std::to_string(spec.height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const std::string title = spec.title.empty() ? ("accuracy vs " + x_label + " (" + attack + ")")
                                                 : spec.title;
    svg += "<text x=\"" + num(ml) + "\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\">" +
           title + "</text>\n";

    // Axes and ticks.
    svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(ml + pw) +
           "\" y2=\"" + num(mt + ph) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
           num(mt + ph) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x_min + (x_max - x_min) * i / 4.0;
        const double yv = i / 4.0;
        svg += "<line x1=\"" + num(sx(xv)) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" +
               num(sx(xv)) + "\" y2=\"" + num(mt + ph + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(mt + ph + 20) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
               num4(xv) + "</text>\n";
        svg += "<line x1=\"" + num(ml - 5) + "\" y1=\"" + num(sy(yv)) + "\" x2=\"" + num(ml) +
               "\" y2=\"" + num(sy(yv)) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + num(ml - 9) + "\" y=\"" + num(sy(yv) + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
               num4(yv) + "</text>\n";
    }
    svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(double(spec.height) - 8) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" + x_label +
           "</text>\n";
    svg += "<text x=\"16\" y=\"" + num(mt + ph / 2) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 16 " +
           num(mt + ph / 2) + ")\">" + spec.y_label + "</text>\n";

    // One polyline per fraction.
    int color = 0;
    for (const auto& [fraction, points] : series) {
        const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string path;
        for (const auto& [x, cell] : points) {
            if (!path.empty()) path += ' ';
            path += num(sx(x)) + "," + num(sy(cell.first / cell.second));
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) +
               "\" stroke-width=\"1.5\" points=\"" + path + "\"/>\n";
        for (const auto& [x, cell] : points) {
            svg += "<circle cx=\"" + num(sx(x)) + "\" cy=\"" + num(sy(cell.first / cell.second)) +
                   "\" r=\"2.5\" fill=\"" + stroke + "\"/>\n";
        }
        const double ly = mt + 14.0 * color;
        svg += "<line x1=\"" + num(ml + pw + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" +
               num(ml + pw + 30) + "\" y2=\"" + num(ly) + "\" stroke=\"" + stroke +
               "\" stroke-width=\"1.5\"/>\n";
        svg += "<text x=\"" + num(ml + pw + 35) + "\" y=\"" + num(ly + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\">fraction " + num4(fraction) +
               "</text>\n";
        ++color;
    }
    svg += "</svg>\n";
    return svg;
}

void emit_plot_svg(const std::vector<campaign::ResultRow>& rows, const PlotSpec& spec,
                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw campaign::ConfigError("cannot write " + path);
    out << render_plot_svg(rows, spec);
    if (!out) throw campaign::ConfigError("write failed: " + path);
}

}  // namespace snnfaultlab::plot
