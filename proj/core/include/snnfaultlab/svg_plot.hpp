#pragma once

#include <string>
#include <vector>

#include "snnfaultlab/campaign.hpp"

namespace snnfaultlab::plot {

struct PlotSpec {
    std::string title;
    std::string x_label;  // defaults to "delta" or "vdd" per attack kind
    std::string y_label = "accuracy";
    int width = 720;
    int height = 480;
};

// Accuracy-vs-delta (or vs-vdd) line chart, one polyline per fraction value,
// accuracies averaged over seeds. Baseline rows are ignored; mixing attack
// kinds is an error. Output is byte-deterministic.
std::string render_plot_svg(const std::vector<campaign::ResultRow>& rows,
                            const PlotSpec& spec);

void emit_plot_svg(const std::vector<campaign::ResultRow>& rows, const PlotSpec& spec,
                   const std::string& path);

}  // namespace snnfaultlab::plot
